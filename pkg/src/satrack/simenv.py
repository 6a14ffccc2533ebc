"""Time-varying linear plant simulator plus the named experiment configs.

All signals (dynamics matrices, disturbances, targets) are pure functions of
the round index, so replays are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np

from .errors import ActionBoundError

EXPERIMENT_NAMES = (
    "olo-1d",
    "ocom-step",
    "ocom-square",
    "shifted-ocom-step",
    "shifted-ocom-square",
    "shifted-ocom-sine",
    "shifted-ocom-composite",
    "control-1d-step",
    "control-1d-square",
    "control-1d-sine",
    "control-1d-composite",
    "control-2d-circle",
)


def make_target(kind: str, period: int = 0, T: int = 0) -> Callable[[int], np.ndarray]:
    """Target signal x*_t as a pure function of t.

    step              constant 1
    square(period)    +1 on the first half of each period, -1 on the second
    sine(period)      sin(2 pi t / period)
    composite(period, T)  sine for t < T/2, then +1 until 3T/4, then -1
    circle2d          ramp along the x-axis for t <= 4000, then the unit
                      circle, holding the final point (1, 0) past t = 20000
    """
    if kind == "step":
        return lambda t: np.array([1.0])
    if kind == "square":
        half = period // 2
        return lambda t: np.array([1.0 if (t % period) < half else -1.0])
    if kind == "sine":
        return lambda t: np.array([math.sin(2.0 * math.pi * t / period)])
    if kind == "composite":
        def composite(t: int) -> np.ndarray:
            if t < T / 2:
                return np.array([math.sin(2.0 * math.pi * t / period)])
            if t < 3 * T / 4:
                return np.array([1.0])
            return np.array([-1.0])
        return composite
    if kind == "circle2d":
        def circle(t: int) -> np.ndarray:
            t = min(t, 20000)
            if t <= 4000:
                return np.array([t / 4000.0, 0.0])
            phase = math.pi * (t - 4000) / 8000.0
            return np.array([math.cos(phase), math.sin(phase)])
        return circle
    raise ValueError(f"unknown target kind {kind!r}")


@dataclass(eq=False)
class LtvPlant:
    """x_{t+1} = A_t x_t + B_t u_t + w_t, starting from x_0 = 0 at t = 0.

    The declared norm bounds (|A_t| <= 1 - gamma, |B_t| <= kappa,
    |w_t| <= W) are measured at every step; violations are recorded in
    ``bound_violations`` rather than raised, and the running maxima are kept
    for the audit report.
    """

    A_fn: Callable[[int], np.ndarray]
    B_fn: Callable[[int], np.ndarray]
    w_fn: Callable[[int], np.ndarray]
    d_x: int
    d_u: int
    kappa: float
    gamma: float
    W: float
    U: float
    t: int = 0
    x: np.ndarray = None
    max_A_norm: float = 0.0
    max_B_norm: float = 0.0
    max_w_norm: float = 0.0
    bound_violations: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.x is None:
            self.x = np.zeros(self.d_x)

    def step(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if float(np.linalg.norm(u)) > self.U * (1.0 + 1e-9):
            raise ActionBoundError(f"|u|={np.linalg.norm(u)} exceeds U={self.U}")
        A = np.atleast_2d(self.A_fn(self.t))
        B = np.atleast_2d(self.B_fn(self.t))
        w = np.atleast_1d(self.w_fn(self.t))

        a_norm = float(np.linalg.norm(A, 2))
        b_norm = float(np.linalg.norm(B, 2))
        w_norm = float(np.linalg.norm(w))
        self.max_A_norm = max(self.max_A_norm, a_norm)
        self.max_B_norm = max(self.max_B_norm, b_norm)
        self.max_w_norm = max(self.max_w_norm, w_norm)
        if a_norm > (1.0 - self.gamma) * (1.0 + 1e-9):
            self.bound_violations.append((self.t, "A_norm", a_norm))
        if b_norm > self.kappa * (1.0 + 1e-9):
            self.bound_violations.append((self.t, "B_norm", b_norm))
        if w_norm > self.W * (1.0 + 1e-9) + 1e-15:
            self.bound_violations.append((self.t, "w_norm", w_norm))

        self.x = A @ self.x + B @ u + w
        self.t += 1
        return self.x.copy()


@dataclass
class ExperimentConfig:
    """Flat parameterization of one named experiment; JSON-roundtrippable.

    Only the fields relevant to ``kind`` are used.
    """

    name: str
    kind: str               # "olo" | "ocom" | "control"
    T: int
    target_kind: str = "step"
    target_period: int = 0
    # olo
    x_star: float = 1.0
    R: float = 1.0
    R_alt: float = 10.0
    lam: float = 0.0
    gamma_reg: float = 0.0
    eps: float = 1.0
    G: float = 1.0
    # ocom / control shared
    H: int = 0
    L: float = 1.0
    G_tilde: float = 0.0
    eps0: float = 1.0
    domain_radius: float = 0.0
    shifted: bool = False
    # control
    d: int = 1
    kappa: float = 1.0
    gamma_margin: float = 0.4
    U: float = 5.0
    W: float = 0.0
    L_star: float = 1.0
    plant: str = ""

    def override(self, **kwargs) -> "ExperimentConfig":
        known = {f.name for f in fields(self)}
        for key, value in kwargs.items():
            if key not in known:
                raise ValueError(f"unknown config field {key!r}")
            setattr(self, key, value)
        return self


def make_experiment(name: str) -> ExperimentConfig:
    """Full parameterization of a named desk-scale experiment."""
    if name == "olo-1d":
        return ExperimentConfig(name=name, kind="olo", T=10000,
                                x_star=1.0, R=1.0, R_alt=10.0,
                                lam=0.0, gamma_reg=0.0, eps=1.0, G=1.0)

    ocom = {"H": 5, "L": 1.0, "G_tilde": 6.0, "eps0": 1.0,
            "domain_radius": 5.0, "T": 20000}
    if name == "ocom-step":
        return ExperimentConfig(name=name, kind="ocom", target_kind="step", **ocom)
    if name == "ocom-square":
        return ExperimentConfig(name=name, kind="ocom", target_kind="square",
                                target_period=4000, **ocom)
    if name.startswith("shifted-ocom-"):
        target = name.removeprefix("shifted-ocom-")
        period = {"square": 4000, "sine": 4000, "composite": 4000}.get(target, 0)
        if target not in ("step", "square", "sine", "composite"):
            raise ValueError(f"unknown experiment {name!r}")
        return ExperimentConfig(name=name, kind="ocom", target_kind=target,
                                target_period=period, shifted=True, **ocom)

    control = {"T": 20000, "H": 8, "kappa": 1.0, "gamma_margin": 0.4,
               "U": 5.0, "L_star": 1.0, "shifted": True}
    if name.startswith("control-1d-"):
        target = name.removeprefix("control-1d-")
        period = {"square": 12000, "sine": 10000, "composite": 10000}.get(target, 0)
        if target not in ("step", "square", "sine", "composite"):
            raise ValueError(f"unknown experiment {name!r}")
        return ExperimentConfig(name=name, kind="control", d=1, eps0=0.5,
                                W=0.05, plant="lti-1d", target_kind=target,
                                target_period=period, **control)
    if name == "control-2d-circle":
        return ExperimentConfig(name=name, kind="control", d=2, eps0=0.2,
                                W=0.05 * math.sqrt(2.0), plant="lti-2d",
                                target_kind="circle2d", **control)

    raise ValueError(f"unknown experiment {name!r}")


def build_plant(config: ExperimentConfig) -> LtvPlant:
    if config.plant == "lti-1d":
        return LtvPlant(
            A_fn=lambda t: np.array([[0.55 + 0.05 * math.sin(math.pi * t / 10000)]]),
            B_fn=lambda t: np.array([[0.95 + 0.05 * math.sin(math.pi * t / 5000)]]),
            w_fn=lambda t: np.array([0.05 * math.sin(math.pi * t / 4000)]),
            d_x=1, d_u=1, kappa=config.kappa, gamma=config.gamma_margin,
            W=config.W, U=config.U,
        )
    if config.plant == "lti-1d-clean":
        return LtvPlant(
            A_fn=lambda t: np.array([[0.55 + 0.05 * math.sin(math.pi * t / 10000)]]),
            B_fn=lambda t: np.array([[0.95 + 0.05 * math.sin(math.pi * t / 5000)]]),
            w_fn=lambda t: np.zeros(1),
            d_x=1, d_u=1, kappa=config.kappa, gamma=config.gamma_margin,
            W=config.W, U=config.U,
        )
    if config.plant == "lti-2d":
        base = np.array([[0.55, 0.3], [0.0, 0.55]])
        return LtvPlant(
            A_fn=lambda t: base + np.eye(2) * (0.05 * math.cos(math.pi * t / 10000)),
            B_fn=lambda t: np.eye(2) * (0.95 + 0.05 * math.cos(math.pi * t / 5000)),
            w_fn=lambda t: 0.05 * math.sin(math.pi * t / 4000) * np.array([1.0, -1.0]),
            d_x=2, d_u=2, kappa=config.kappa, gamma=config.gamma_margin,
            W=config.W, U=config.U,
        )
    raise ValueError(f"unknown plant {config.plant!r}")


def target_fn(config: ExperimentConfig) -> Callable[[int], np.ndarray]:
    return make_target(config.target_kind, period=config.target_period, T=config.T)
