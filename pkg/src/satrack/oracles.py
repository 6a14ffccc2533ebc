"""Brute-force comparator oracles and interval-regret reports.

The comparator term is found by grid search (101 points per dimension by
default) with one refinement pass around the argmin; instantaneous losses are
convex, which makes the oracle reliable at desk scale for d <= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simenv import ExperimentConfig, build_plant, target_fn

GRID_POINTS = 101
SWEEP_MIN_LEN = 32  # shorter dyadic intervals are noise-dominated


@dataclass
class IntervalRegret:
    a: int
    b: int
    length: int
    alg_loss: float
    oracle_loss: float
    oracle_arg: list

    @property
    def regret(self) -> float:
        return self.alg_loss - self.oracle_loss

    @property
    def ratio(self) -> float:
        return self.regret / math.sqrt(self.length)

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "length": self.length,
                "alg_loss": self.alg_loss, "oracle_loss": self.oracle_loss,
                "oracle_arg": self.oracle_arg, "regret": self.regret,
                "ratio": self.ratio}


def box_grid(lo: float, hi: float, n: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(lo, hi, n)


def memory_loss_series(x: np.ndarray, targets: np.ndarray, H: int) -> np.ndarray:
    """l_t over the trace: sum_{h=0..H} |x_{t-h} - x*_t|, zeros for t <= 0."""
    T, d = x.shape
    padded = np.concatenate([np.zeros((H, d)), x])
    out = np.zeros(T)
    for h in range(H + 1):
        out += np.linalg.norm(padded[H - h: H - h + T] - targets, axis=1)
    return out


def _refine_1d(evaluate, grid: np.ndarray) -> tuple[float, float]:
    """One grid pass plus one refinement pass around the argmin."""
    vals = evaluate(grid)
    j = int(np.argmin(vals))
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, len(grid) - 1)]
    fine = np.linspace(lo, hi, len(grid))
    fvals = evaluate(fine)
    i = int(np.argmin(fvals))
    if fvals[i] < vals[j]:
        return float(fvals[i]), float(fine[i])
    return float(vals[j]), float(grid[j])


def ocom_interval_regret(x: np.ndarray, targets: np.ndarray, H: int,
                         radius: float, intervals, n_grid: int = GRID_POINTS,
                         lo: float | None = None) -> list[IntervalRegret]:
    """Memory-loss regret against the best fixed prediction per interval.

    x, targets: (T, 1) trace series; the comparator domain is
    [lo, radius] (lo defaults to -radius).
    """
    T = x.shape[0]
    losses = memory_loss_series(x, targets, H)
    loss_cum = np.concatenate(([0.0], np.cumsum(losses)))

    grid = box_grid(-radius if lo is None else lo, radius, n_grid)
    tgt = targets[:, 0]

    out = []
    for a, b in intervals:
        if not (1 <= a <= b <= T):
            raise ValueError(f"interval [{a}:{b}] out of range 1..{T}")
        alg = float(loss_cum[b] - loss_cum[a - 1])
        seg = tgt[a - 1: b]

        def evaluate(us: np.ndarray, seg=seg) -> np.ndarray:
            return (H + 1) * np.abs(us[None, :] - seg[:, None]).sum(axis=0)

        best, arg = _refine_1d(evaluate, grid)
        out.append(IntervalRegret(a=a, b=b, length=b - a + 1, alg_loss=alg,
                                  oracle_loss=best, oracle_arg=[arg]))
    return out


def _rollout_candidates(config: ExperimentConfig, u_alg: np.ndarray,
                        candidates: np.ndarray, a: int, b: int,
                        targets: np.ndarray) -> np.ndarray:
    """Closed-loop loss of each fixed candidate action held on [a-H : b].

    Before a-H the comparator replays the algorithm's own actions, so its
    state at a-H matches the algorithm's; from there each candidate is rolled
    through the true dynamics.  Returns sum_{t in [a:b]} |x^C_t - x*_t| per
    candidate.
    """
    plant = build_plant(config)
    H = config.H
    d_x = plant.d_x
    n = len(candidates)
    start = max(a - H, 1)

    # replay the algorithm's actions up to the round before `start`
    x = np.zeros(d_x)
    for t in range(0, start):
        A = np.atleast_2d(plant.A_fn(t))
        B = np.atleast_2d(plant.B_fn(t))
        w = np.atleast_1d(plant.w_fn(t))
        u_t = u_alg[t - 1] if t >= 1 else np.zeros(plant.d_u)
        x = A @ x + B @ u_t + w

    xs = np.tile(x, (n, 1))  # comparator states at round `start`
    total = np.zeros(n)
    for t in range(start, b + 1):
        if t >= a:
            total += np.linalg.norm(xs - targets[t - 1], axis=1)
        A = np.atleast_2d(plant.A_fn(t))
        B = np.atleast_2d(plant.B_fn(t))
        w = np.atleast_1d(plant.w_fn(t))
        xs = xs @ A.T + candidates @ B.T + w
    return total


def control_candidates(U: float, d: int, n_grid: int = GRID_POINTS) -> np.ndarray:
    if d == 1:
        return box_grid(-U, U, n_grid)[:, None]
    side = box_grid(-U, U, n_grid)
    xx, yy = np.meshgrid(side, side)
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    return pts[np.linalg.norm(pts, axis=1) <= U]


def control_interval_regret(config: ExperimentConfig, x: np.ndarray,
                            u: np.ndarray, intervals,
                            n_grid: int = GRID_POINTS) -> list[IntervalRegret]:
    """Tracking-loss regret against fixed actions held on [a-H : b]."""
    T = x.shape[0]
    tf = target_fn(config)
    targets = np.array([np.atleast_1d(tf(t)) for t in range(1, T + 1)])
    losses = np.linalg.norm(x - targets, axis=1)
    loss_cum = np.concatenate(([0.0], np.cumsum(losses)))
    grid = control_candidates(config.U, config.d, n_grid)

    out = []
    for a, b in intervals:
        if not (1 <= a <= b <= T):
            raise ValueError(f"interval [{a}:{b}] out of range 1..{T}")
        alg = float(loss_cum[b] - loss_cum[a - 1])
        vals = _rollout_candidates(config, u, grid, a, b, targets)
        j = int(np.argmin(vals))
        # one refinement pass around the grid argmin
        if config.d == 1:
            spacing = 2.0 * config.U / (n_grid - 1)
            lo = max(-config.U, grid[j, 0] - spacing)
            hi = min(config.U, grid[j, 0] + spacing)
            fine = np.linspace(lo, hi, n_grid)[:, None]
        else:
            spacing = 2.0 * config.U / (n_grid - 1)
            side = np.linspace(-spacing, spacing, 11)
            dx, dy = np.meshgrid(side, side)
            fine = grid[j] + np.stack([dx.ravel(), dy.ravel()], axis=1)
            fine = fine[np.linalg.norm(fine, axis=1) <= config.U]
        fvals = _rollout_candidates(config, u, fine, a, b, targets)
        i = int(np.argmin(fvals))
        if fvals[i] < vals[j]:
            best, arg = float(fvals[i]), fine[i]
        else:
            best, arg = float(vals[j]), grid[j]
        out.append(IntervalRegret(a=a, b=b, length=b - a + 1, alg_loss=alg,
                                  oracle_loss=best, oracle_arg=list(map(float, arg))))
    return out


def sweep_intervals(T: int, min_len: int = SWEEP_MIN_LEN) -> list[tuple[int, int]]:
    """Dyadic intervals evaluated by the sweep: levels whose first full
    interval fits in [1:T] and whose nominal length is >= min_len; positions
    run to floor(T / 2^k) with the tail clipped at T."""
    out = []
    k = 0
    while (1 << k) < min_len:
        k += 1
    while (1 << (k + 1)) - 1 <= T:
        size = 1 << k
        for i in range(1, T // size + 1):
            out.append((size * i, min(size * (i + 1) - 1, T)))
        k += 1
    return out


def gc_sweep_ocom(x: np.ndarray, targets: np.ndarray, H: int, radius: float,
                  min_len: int = SWEEP_MIN_LEN,
                  n_grid: int = GRID_POINTS) -> list[IntervalRegret]:
    return ocom_interval_regret(x, targets, H, radius,
                                sweep_intervals(x.shape[0], min_len), n_grid)


def max_ratio(reports: list[IntervalRegret]) -> float:
    return max(r.ratio for r in reports)
