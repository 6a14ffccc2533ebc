"""Strongly adaptive online convex optimization with memory.

A registry of gated subroutines, one pair per dyadic level k (a ball learner
producing a candidate prediction and a 1-d learner producing its confidence),
is recombined every round by the cascade

    x~(k) = (1 - z(k)) * x(k+1) + w(k),      x(k+1) = project_ball(x~(k+1)),

from the top level down, and the final prediction is the projection of x~(0)
onto the domain.  Gradients travel back up through constraint-reduction
surrogates so that each level sees a gradient no larger than the one below.

Level-k subroutines are reinitialized whenever the round index is divisible
by 2^k.  In the shifted variant a reinitialized ball learner is recentered at
its predecessor's final output, which suppresses the restart dips of the
plain variant.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .betting import GRAD_SLACK
from .errors import GradientBoundError, HorizonError
from .subroutine import (
    GcSubroutine,
    feed,
    gc_levels_starting_at,
    k_max,
    make_subroutine_1d,
    make_subroutine_ball,
)


def project_ball(x: np.ndarray, radius: float) -> np.ndarray:
    n = float(np.linalg.norm(x))
    return x * (radius / n) if n > radius else x


def constrained_surrogate(g: np.ndarray, x_tilde: np.ndarray,
                          x_proj: np.ndarray) -> np.ndarray:
    """Surrogate gradient of the constraint reduction.

    Returns g unchanged when the linear loss at the unconstrained point is no
    better than at its projection; otherwise removes the component of g along
    x_tilde - x_proj, which never increases the norm.
    """
    if float(np.dot(g, x_tilde)) >= float(np.dot(g, x_proj)):
        return g
    diff = x_tilde - x_proj
    e = diff / float(np.linalg.norm(diff))
    return g - float(np.dot(g, e)) * e


@dataclass(eq=False)
class OcomConfig:
    """Problem constants and meta-learner options.

    T        horizon
    R        radius of the ball containing the domain
    L        per-argument Lipschitz constant of the memory loss
    H        memory length
    G_tilde  Lipschitz bound of the instantaneous loss (0 < G_tilde <= L*(H+1))
    eps0     level-0 budget; None selects the theory default G_tilde*R/(T+1)
    project  projection onto the domain V (None means ball(0, R))
    d        prediction dimension
    shifted  recenter reinitialized ball subroutines at their predecessor
    improper skip all projections/surrogates (ablation; predictions may
             leave V)
    """

    T: int
    R: float
    L: float
    H: int
    G_tilde: float
    eps0: float | None = None
    project: Callable[[np.ndarray], np.ndarray] | None = None
    d: int = 1
    shifted: bool = False
    improper: bool = False

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if not 0.0 < self.G_tilde <= self.L * (self.H + 1) * (1.0 + 1e-12):
            raise ValueError("need 0 < G_tilde <= L*(H+1)")
        if self.eps0 is None:
            self.eps0 = self.G_tilde * self.R / (self.T + 1)
        if self.eps0 <= 0.0:
            raise ValueError("eps0 must be positive")
        if self.project is None:
            self.project = lambda x: project_ball(x, self.R)

    @property
    def lam(self) -> float:
        """Movement weight induced by the memory: L * H * (H+1)."""
        return self.L * self.H * (self.H + 1)


@dataclass(eq=False)
class RoundInfo:
    """Cascade intermediates of one round, kept for gradient routing and
    exposed to the audits.  Lists are indexed by level k; ``x_tilde`` and
    ``x_proj`` have K+2 entries (the virtual top level holds zeros),
    ``g_levels`` is filled by update()."""

    t: int
    K: int
    w: list
    z: list
    x_tilde: list
    x_proj: list
    x: np.ndarray
    g_levels: list = field(default_factory=list)
    g_raw: np.ndarray | None = None
    flushes: int = 0
    reinit_levels: list = field(default_factory=list)


class OcomMeta:
    """One sequential instance of the meta-learner.

    Strict predict-then-update per round: ``predict(t)`` commits the round's
    prediction, ``update(g)`` feeds back a subgradient of the instantaneous
    loss at it.
    """

    def __init__(self, config: OcomConfig):
        self.config = config
        self.levels: dict[int, tuple[GcSubroutine, GcSubroutine]] = {}
        self.history: deque = deque(maxlen=config.H + 1)
        self._t = 0
        self._round: RoundInfo | None = None

    @property
    def rounds_done(self) -> int:
        return self._t

    @property
    def last_round(self) -> RoundInfo | None:
        return self._round

    def prediction_window(self, x_t: np.ndarray) -> np.ndarray:
        """Stack [x_{t-H}, ..., x_t], zero-padded for rounds <= 0."""
        cfg = self.config
        window = np.zeros((cfg.H + 1, cfg.d))
        past = list(self.history)
        for j, xp in enumerate(reversed(past[-cfg.H:] if cfg.H else [])):
            window[cfg.H - 1 - j] = xp
        window[cfg.H] = x_t
        return window

    def _reinit(self, t: int) -> list[int]:
        cfg = self.config
        created = []
        for k, i in gc_levels_starting_at(t):
            shift = None
            if cfg.shifted and i > 1:
                prev = self.levels[k][0].output
                shift = np.array(prev, dtype=float, copy=True)
            eps = (2.0 ** k) * cfg.eps0
            sub_ball = make_subroutine_ball(
                cfg.lam, eps, cfg.G_tilde, cfg.R, cfg.d, shift=shift)
            sub_1d = make_subroutine_1d(cfg.lam * cfg.R, eps, cfg.G_tilde * cfg.R)
            self.levels[k] = (sub_ball, sub_1d)
            created.append(k)
        return created

    def predict(self, t: int) -> np.ndarray:
        cfg = self.config
        if self._round is not None and not self._round.g_levels:
            raise RuntimeError("update() must be called before the next predict()")
        if t != self._t + 1:
            raise ValueError(f"rounds are sequential: expected t={self._t + 1}, got {t}")
        if t > cfg.T:
            raise HorizonError(f"round {t} beyond horizon T={cfg.T}")

        created = self._reinit(t)
        K = k_max(t)
        x_tilde = [None] * (K + 2)
        x_proj = [None] * (K + 2)
        w = [None] * (K + 1)
        z = [None] * (K + 1)

        x_tilde[K + 1] = np.zeros(cfg.d)
        for k in range(K, -1, -1):
            if cfg.improper:
                x_proj[k + 1] = x_tilde[k + 1]
            else:
                x_proj[k + 1] = project_ball(x_tilde[k + 1], cfg.R)
            w[k] = self.levels[k][0].output
            z[k] = self.levels[k][1].output
            x_tilde[k] = (1.0 - z[k]) * x_proj[k + 1] + w[k]

        x = x_tilde[0] if cfg.improper else cfg.project(x_tilde[0])
        x = np.asarray(x, dtype=float)
        self._round = RoundInfo(t=t, K=K, w=w, z=z, x_tilde=x_tilde,
                                x_proj=x_proj, x=x, reinit_levels=created)
        return x.copy()

    def update(self, g: np.ndarray) -> None:
        cfg = self.config
        info = self._round
        if info is None or info.g_levels:
            raise RuntimeError("predict() must be called before update()")
        g = np.asarray(g, dtype=float)
        gnorm = float(np.linalg.norm(g))
        if gnorm > cfg.G_tilde * (1.0 + GRAD_SLACK):
            raise GradientBoundError(f"|g|={gnorm} exceeds G_tilde={cfg.G_tilde}")

        if cfg.improper:
            g_levels = [g] * (info.K + 2)
        else:
            g_levels = [constrained_surrogate(g, info.x_tilde[0], info.x)]

        flushes = 0
        for k in range(info.K + 1):
            gk = g_levels[k]
            sub_ball, sub_1d = self.levels[k]
            nb = feed(sub_ball, gk)
            n1 = feed(sub_1d, -float(np.dot(gk, info.x_proj[k + 1])))
            flushes += (nb.flushes - sub_ball.flushes) + (n1.flushes - sub_1d.flushes)
            self.levels[k] = (nb, n1)
            if not cfg.improper:
                g_levels.append(constrained_surrogate(
                    gk, info.x_tilde[k + 1], info.x_proj[k + 1]))

        info.g_levels = g_levels
        info.g_raw = g
        info.flushes = flushes
        self.history.append(info.x.copy())
        self._t = info.t
