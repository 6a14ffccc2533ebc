"""Movement-aware online linear optimization on a Euclidean ball.

Polar decomposition: a 1-d betting learner controls the magnitude while
projected gradient descent on the unit ball learns the direction.  The
shifted variant recenters all predictions at a fixed vector ``v`` and widens
the magnitude domain to [0, radius + |v|]; re-shifting means constructing a
new instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .betting import BettingState, GRAD_SLACK, Hyper1d, fresh_state, step_1d
from .errors import GradientBoundError


def project_unit_ball(z: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(z))
    return z / n if n > 1.0 else z


@dataclass(frozen=True, eq=False)
class BallHyper:
    """lam: movement weight; eps: budget; G: gradient bound; radius: ball
    radius; shift: fixed recentering vector (None means the origin)."""

    lam: float
    eps: float
    G: float
    radius: float
    shift: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")

    @property
    def shift_norm(self) -> float:
        return 0.0 if self.shift is None else float(np.linalg.norm(self.shift))

    @property
    def magnitude_hyper(self) -> Hyper1d:
        # gamma := lam absorbs the direction learner's per-step movement
        return Hyper1d(
            lam=self.lam, gamma=self.lam, eps=self.eps, G=self.G,
            r_bar=self.radius + self.shift_norm,
        )

    def budget_ok(self) -> bool:
        return self.eps <= self.G * self.radius


@dataclass(frozen=True, eq=False)
class BallLearnerState:
    """magnitude: 1-d learner on [0, radius + |shift|]; z: direction with
    |z| <= 1; t: round counter for the direction learning rate."""

    magnitude: BettingState
    z: np.ndarray
    t: int = 1


def fresh_ball(hyper: BallHyper, d: int) -> BallLearnerState:
    return BallLearnerState(magnitude=fresh_state(hyper.magnitude_hyper),
                            z=np.zeros(d), t=1)


def predict_ball(state: BallLearnerState, hyper: BallHyper) -> np.ndarray:
    x = state.magnitude.x * state.z
    if hyper.shift is not None:
        x = hyper.shift + x
    return x


def step_ball(state: BallLearnerState, g: np.ndarray, hyper: BallHyper) -> BallLearnerState:
    """Feed <g, z> to the magnitude learner and descend the direction with
    learning rate 1/(G sqrt(t)), projecting back onto the unit ball."""
    gnorm = float(np.linalg.norm(g))
    if gnorm > hyper.G * (1.0 + GRAD_SLACK):
        raise GradientBoundError(f"|g|={gnorm} exceeds G={hyper.G}")

    scalar = float(np.dot(g, state.z))
    magnitude = step_1d(state.magnitude, scalar, hyper.magnitude_hyper)

    eta = 1.0 / (hyper.G * math.sqrt(state.t))
    z = project_unit_ball(state.z - eta * g)
    return replace(state, magnitude=magnitude, z=z, t=state.t + 1)
