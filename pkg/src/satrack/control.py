"""Reduction from adversarial tracking control to the adaptive memory learner.

Each round the controller recovers the previous disturbance from the observed
state, refreshes truncated-history buffers, queries the memory learner for an
action, and, once the loss is revealed, feeds back the gradient of the
truncated ("ideal") loss at that action.  The ideal state over a window of H
past rounds is affine in a fixed action, y ~= M u + v, which makes the
instantaneous ideal loss cheap to differentiate.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ActionBoundError
from .meta import OcomConfig, OcomMeta, project_ball


def theory_memory(T: int, gamma: float) -> int:
    """Default memory length: long enough that truncation error is O(1/T)."""
    return max(math.ceil(-math.log(T) / math.log(1.0 - gamma)),
               math.ceil(2.0 / gamma))


@dataclass(frozen=True)
class ControlConstants:
    """Known problem constants and the derived learner constants.

    kappa >= 1 bounds |B_t|; gamma in (0,1) is the stability margin
    (|A_t| <= 1-gamma); U bounds actions; W bounds disturbances; L_star is
    the per-argument Lipschitz constant of the tracking loss.
    """

    kappa: float
    gamma: float
    U: float
    W: float
    L_star: float
    T: int
    H: int | None = None

    def __post_init__(self) -> None:
        if self.kappa < 1.0:
            raise ValueError("kappa must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.U <= 0.0 or self.L_star <= 0.0 or self.W < 0.0:
            raise ValueError("need U > 0, L_star > 0, W >= 0")
        if self.H is not None and self.H < 1:
            raise ValueError("memory override H must be >= 1")

    @property
    def memory(self) -> int:
        return theory_memory(self.T, self.gamma) if self.H is None else self.H

    @property
    def L(self) -> float:
        return self.kappa * self.L_star

    @property
    def G_tilde(self) -> float:
        return 2.0 * self.kappa * self.L_star / self.gamma

    @property
    def state_bound(self) -> float:
        """Every reachable |x_t| and ideal |y_t| stay below this."""
        return (self.kappa * self.U + self.W) / self.gamma

    @property
    def truncation_bound(self) -> float:
        """Worst-case gap between the true and the ideal (truncated) loss."""
        return self.L_star * self.state_bound * (1.0 - self.gamma) ** self.memory


@dataclass(eq=False)
class LossOracle:
    """Tracking loss l(x, u, t) with subgradient maps in each argument."""

    value: Callable[[np.ndarray, np.ndarray, int], float]
    grad_x: Callable[[np.ndarray, np.ndarray, int], np.ndarray]
    grad_u: Callable[[np.ndarray, np.ndarray, int], np.ndarray]


def norm_tracking_loss(target: Callable[[int], np.ndarray], d_u: int) -> LossOracle:
    """|x - x*_t|, independent of u; subgradient zero at the kink."""

    def value(x, u, t):
        return float(np.linalg.norm(x - target(t)))

    def grad_x(x, u, t):
        diff = x - target(t)
        n = float(np.linalg.norm(diff))
        return diff / n if n > 0.0 else np.zeros_like(diff)

    def grad_u(x, u, t):
        return np.zeros(d_u)

    return LossOracle(value=value, grad_x=grad_x, grad_u=grad_u)


def infer_disturbance(x_t: np.ndarray, x_prev: np.ndarray, u_prev: np.ndarray,
                      A_prev: np.ndarray, B_prev: np.ndarray) -> np.ndarray:
    return x_t - A_prev @ x_prev - B_prev @ u_prev


def ideal_affine(A_hist, B_hist, w_hist) -> tuple[np.ndarray, np.ndarray]:
    """Affine map of the truncated ideal state under a fixed action.

    Histories are ordered oldest first and cover rounds t-H .. t-1.  Returns
    (M, v) with M = sum_i prod(A over later rounds) B_i and v the same sum
    over disturbances; empty products are the identity.  One pass, O(H)
    matrix products, maintaining the running prefix.
    """
    d_x, d_u = B_hist[-1].shape
    M = np.zeros((d_x, d_u))
    v = np.zeros(d_x)
    prefix = np.eye(d_x)
    for A_i, B_i, w_i in zip(reversed(A_hist), reversed(B_hist), reversed(w_hist)):
        M += prefix @ B_i
        v += prefix @ w_i
        prefix = prefix @ A_i
    return M, v


def ideal_loss_value_and_grad(u: np.ndarray, M: np.ndarray, v: np.ndarray,
                              loss: LossOracle, t: int, U: float,
                              ) -> tuple[float, np.ndarray]:
    """Value and chain-rule gradient of u -> loss(M u + v, u, t)."""
    if float(np.linalg.norm(u)) > U * (1.0 + 1e-9):
        raise ActionBoundError(f"|u|={np.linalg.norm(u)} exceeds U={U}")
    y = M @ u + v
    value = loss.value(y, u, t)
    grad = M.T @ loss.grad_x(y, u, t) + loss.grad_u(y, u, t)
    return value, grad


class TrackingController:
    """Plant-in-the-loop controller: ``action(x_t)`` commits u_t, then
    ``observe_loss()`` (after the loss is revealed) feeds the learner."""

    def __init__(self, constants: ControlConstants,
                 A_fn: Callable[[int], np.ndarray],
                 B_fn: Callable[[int], np.ndarray],
                 loss: LossOracle, d_x: int, d_u: int,
                 eps0: float | None = None, shifted: bool = True,
                 improper: bool = False):
        self.constants = constants
        self.A_fn = A_fn
        self.B_fn = B_fn
        self.loss = loss
        self.d_x = d_x
        self.d_u = d_u
        H = constants.memory
        self.learner = OcomMeta(OcomConfig(
            T=constants.T, R=constants.U, L=constants.L, H=H,
            G_tilde=constants.G_tilde, eps0=eps0, d=d_u,
            project=lambda x: project_ball(x, constants.U),
            shifted=shifted, improper=improper,
        ))
        self.A_hist = deque([np.zeros((d_x, d_x))] * H, maxlen=H)
        self.B_hist = deque([np.zeros((d_x, d_u))] * H, maxlen=H)
        self.w_hist = deque([np.zeros(d_x)] * H, maxlen=H)
        self.u_hist = deque([np.zeros(d_u)] * H, maxlen=H)
        self.x_prev = np.zeros(d_x)
        self.u_prev = np.zeros(d_u)
        self.t = 0
        self.last_w = np.zeros(d_x)
        self.last_M = None
        self.last_v = None
        self.last_x = None
        self.last_u = None
        self.last_ideal_value = None

    def action(self, x_t: np.ndarray) -> np.ndarray:
        """Observe x_t, recover w_{t-1}, refresh buffers and commit u_t."""
        t = self.t + 1
        x_t = np.asarray(x_t, dtype=float)
        A_prev = np.atleast_2d(self.A_fn(t - 1))
        B_prev = np.atleast_2d(self.B_fn(t - 1))
        w_prev = infer_disturbance(x_t, self.x_prev, self.u_prev, A_prev, B_prev)

        self.A_hist.append(A_prev)
        self.B_hist.append(B_prev)
        self.w_hist.append(w_prev)
        self.u_hist.append(self.u_prev.copy())
        self.last_w = w_prev
        self.last_M, self.last_v = ideal_affine(
            self.A_hist, self.B_hist, self.w_hist)

        u_t = self.learner.predict(t)
        self.last_x = x_t
        self.last_u = u_t
        self.t = t
        return u_t

    def observe_loss(self) -> float:
        """Reveal round-t loss: evaluate the ideal loss at u_t and return its
        gradient to the learner.  Returns the true loss l(x_t, u_t, t)."""
        if self.last_u is None:
            raise RuntimeError("action() must be called before observe_loss()")
        t = self.t
        value, grad = ideal_loss_value_and_grad(
            self.last_u, self.last_M, self.last_v, self.loss, t,
            self.constants.U)
        self.last_ideal_value = value
        self.learner.update(grad)
        self.x_prev = self.last_x
        self.u_prev = self.last_u
        return self.loss.value(self.last_x, self.last_u, t)

    def ideal_state(self) -> np.ndarray:
        """y_t under the actual action history (uses the fixed-u affine pieces
        recomputed on the true per-round actions)."""
        d_x = self.d_x
        y = np.zeros(d_x)
        prefix = np.eye(d_x)
        for A_i, B_i, w_i, u_i in zip(reversed(self.A_hist),
                                      reversed(self.B_hist),
                                      reversed(self.w_hist),
                                      reversed(self.u_hist)):
            y += prefix @ (B_i @ u_i + w_i)
            prefix = prefix @ A_i
        return y
