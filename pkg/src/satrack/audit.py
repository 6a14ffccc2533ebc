"""Numerical auditors for every invariant the library promises.

Each check compares a measured quantity against its explicit bound with a
small relative slack (REL_SLACK) for float rounding; violations are collected
in an AuditLog.  The same functions back the CLI ``--audit`` mode and the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ball import BallHyper
from .betting import Hyper1d
from .meta import OcomMeta, RoundInfo

REL_SLACK = 1e-9
DISTURBANCE_TOL = 1e-10


@dataclass
class AuditLog:
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def check(self, ok: bool, t: int, name: str, detail: str = "") -> bool:
        if not ok:
            self.violations.append((t, name, detail))
        return ok

    def leq(self, value: float, bound: float, t: int, name: str) -> bool:
        ok = value <= bound + REL_SLACK * max(1.0, abs(bound))
        if not ok:
            self.violations.append((t, name, f"{value} > {bound}"))
        return ok

    def note(self, t: int, name: str, detail: str) -> None:
        self.notes.append((t, name, detail))

    @property
    def ok(self) -> bool:
        return not self.violations

    def first(self) -> str:
        if self.ok:
            return ""
        t, name, detail = self.violations[0]
        return f"t={t} {name}: {detail}"


# ---------------------------------------------------------------------------
# explicit bound formulas

def bound_regret_movement_1d(u: float, C: float, T: int, eps: float) -> float:
    """Budget-plus-comparator bound on cost + movement + regularizer."""
    if u <= 0.0:
        return eps
    return eps + u * C * math.sqrt(2.0 * T) * (
        1.5 + math.log(math.sqrt(2.0) * u * C * T ** 2.5 / eps))


def bound_regret_movement_ball(u_norm: float, G: float, lam: float, T: int,
                               eps: float) -> float:
    """Ball analogue: magnitude-learner bound plus the direction regret."""
    if u_norm <= 0.0:
        return eps
    c = G + 2.0 * lam
    return (eps + u_norm * c * math.sqrt(2.0 * T) * (
        1.5 + math.log(math.sqrt(2.0) * u_norm * c * T ** 2.5 / eps))
        + 1.5 * u_norm * G * math.sqrt(T))


# ---------------------------------------------------------------------------
# 1-d learner stream audit (arrays as returned by kernels.betting_run)

def audit_betting_stream(x, x_tilde, wealth, beta, g_tilde, hyper: Hyper1d,
                         log: AuditLog, rng=None, n_windows: int = 100) -> None:
    """Per-round ceiling/drift/movement invariants over a whole stream."""
    T = len(g_tilde)
    C = hyper.C
    t = np.arange(1, T + 1, dtype=float)

    if not np.all(wealth > 0.0):
        bad = int(np.argmax(wealth <= 0.0))
        log.check(False, bad, "wealth_positive", f"wealth[{bad}]={wealth[bad]}")

    drift = np.abs(beta[1:] - beta[:-1])
    bound = 2.0 / (C * t)
    if not np.all(drift <= bound * (1.0 + REL_SLACK)):
        bad = int(np.argmax(drift > bound * (1.0 + REL_SLACK)))
        log.check(False, bad + 1, "fraction_drift", f"{drift[bad]} > {bound[bad]}")

    cap = 1.0 / (C * np.sqrt(2.0 * t))
    if not (np.all(beta >= 0.0) and np.all(beta[1:] <= cap * (1.0 + REL_SLACK))):
        log.check(False, 0, "fraction_range", "beta outside [0, 1/(C sqrt(2t))]")

    # wealth-based per-step movement holds for any domain
    move = np.abs(x_tilde[1:] - x_tilde[:-1])  # |x~_t - x~_{t+1}|
    per_step = 6.0 * wealth[:-1] / (C * t)
    if not np.all(move <= per_step * (1.0 + REL_SLACK)):
        bad = int(np.argmax(move > per_step * (1.0 + REL_SLACK)))
        log.check(False, bad + 1, "per_step_movement_wealth",
                  f"{move[bad]} > {per_step[bad]}")

    if math.isfinite(hyper.r_bar) and hyper.budget_ok():
        ceil_w = 4.0 * hyper.r_bar * C * np.sqrt(t)
        if not np.all(wealth[1:] <= ceil_w * (1.0 + REL_SLACK)):
            bad = int(np.argmax(wealth[1:] > ceil_w * (1.0 + REL_SLACK)))
            log.check(False, bad + 1, "wealth_ceiling",
                      f"{wealth[bad + 1]} > {ceil_w[bad]}")
        ceil_x = 2.0 * math.sqrt(2.0) * hyper.r_bar
        if not np.all(x_tilde <= ceil_x * (1.0 + REL_SLACK)):
            bad = int(np.argmax(x_tilde > ceil_x * (1.0 + REL_SLACK)))
            log.check(False, bad, "unconstrained_ceiling",
                      f"{x_tilde[bad]} > {ceil_x}")

        per_step_r = 24.0 * hyper.r_bar / np.sqrt(t)
        if not np.all(move <= per_step_r * (1.0 + REL_SLACK)):
            bad = int(np.argmax(move > per_step_r * (1.0 + REL_SLACK)))
            log.check(False, bad + 1, "per_step_movement_radius",
                      f"{move[bad]} > {per_step_r[bad]}")

        # windowed movement over random [a:b]
        diffs = np.abs(x[1:] - x[:-1])
        csum = np.concatenate(([0.0], np.cumsum(diffs)))
        if rng is None:
            rng = np.random.default_rng(0)
        a = rng.integers(1, T + 1, size=n_windows)
        b = rng.integers(1, T + 1, size=n_windows)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        sums = csum[hi] - csum[lo - 1]
        bounds = 48.0 * hyper.r_bar * np.sqrt(hi - lo + 1.0)
        if not np.all(sums <= bounds * (1.0 + REL_SLACK)):
            bad = int(np.argmax(sums > bounds * (1.0 + REL_SLACK)))
            log.check(False, int(lo[bad]), "window_movement",
                      f"[{lo[bad]}:{hi[bad]}] {sums[bad]} > {bounds[bad]}")


def audit_regret_movement_1d(x, g, hyper: Hyper1d, horizons, grid,
                             log: AuditLog) -> None:
    """Cost + movement + regularizer against the explicit bound, on a grid of
    comparators, at each requested horizon (prefix of the stream)."""
    T = len(g)
    C = hyper.C
    xs = x[:T]  # x_1..x_T
    diffs = np.abs(x[1:] - x[:-1])  # |x_t - x_{t+1}|
    inv_sqrt = 1.0 / np.sqrt(np.arange(1, T + 1, dtype=float))
    cum_gx = np.cumsum(g * xs)
    cum_g = np.cumsum(g)
    cum_mv = np.cumsum(diffs)
    cum_reg = np.cumsum(inv_sqrt * np.abs(xs))
    for Tp in horizons:
        if Tp > T:
            continue
        base = cum_gx[Tp - 1] + hyper.lam * cum_mv[Tp - 1] + hyper.gamma * cum_reg[Tp - 1]
        for u in grid:
            lhs = base - u * cum_g[Tp - 1]
            rhs = bound_regret_movement_1d(u, C, Tp, hyper.eps)
            log.leq(lhs, rhs, Tp, f"regret_movement_bound(u={u:.6g})")


# ---------------------------------------------------------------------------
# ball learner stream audit

def audit_ball_stream(xs: np.ndarray, gs: np.ndarray, zs: np.ndarray,
                      hyper: BallHyper, log: AuditLog, rng=None,
                      n_windows: int = 50, n_grid: int = 24) -> None:
    """xs: (T+1, d) predictions, gs: (T, d) gradients, zs: (T, d) directions.
    Plain variant only (no shift)."""
    T, d = gs.shape
    move = np.linalg.norm(xs[1:] - xs[:-1], axis=1)
    csum = np.concatenate(([0.0], np.cumsum(move)))
    if rng is None:
        rng = np.random.default_rng(0)

    # windowed movement: sum over [a : b-1] against 50 R sqrt(b - a)
    a = rng.integers(1, T + 1, size=n_windows)
    b = rng.integers(1, T + 2, size=n_windows)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keep = hi > lo
    sums = csum[hi[keep] - 1] - csum[lo[keep] - 1]
    bounds = 50.0 * hyper.radius * np.sqrt(hi[keep] - lo[keep])
    for s, bd, aa, bb in zip(sums, bounds, lo[keep], hi[keep]):
        log.leq(float(s), float(bd), int(aa), f"ball_window_movement[{aa}:{bb}]")

    # regret + movement against grid comparators in the ball
    us = _ball_grid(d, hyper.radius, n_grid)
    glin = gs @ us.T                      # (T, n)
    lhs_all = np.einsum("td,td->", gs, xs[:T]) + hyper.lam * float(np.sum(move[: T - 1])) \
        - np.sum(glin, axis=0)
    for u, lhs in zip(us, lhs_all):
        rhs = bound_regret_movement_ball(float(np.linalg.norm(u)), hyper.G,
                                         hyper.lam, T, hyper.eps)
        log.leq(float(lhs), rhs, T, "ball_regret_movement")

    # direction learner: regret against unit comparators
    wgrid = _ball_grid(d, 1.0, n_grid, surface=True)
    dir_lhs = np.sum(np.einsum("td,td->t", gs, zs)) - np.min(np.sum(gs @ wgrid.T, axis=0))
    log.leq(float(dir_lhs), 1.5 * hyper.G * math.sqrt(T), T, "direction_regret")


def _ball_grid(d: int, radius: float, n: int, surface: bool = False) -> np.ndarray:
    if d == 1:
        pts = np.linspace(-radius, radius, n)[:, None]
        return np.array([[-radius], [radius]]) if surface else pts
    angles = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    ring = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if surface:
        return ring
    radii = np.linspace(0.0, 1.0, 5)[1:]
    pts = np.concatenate([r * ring for r in radii] + [np.zeros((1, d))])
    return pts


# ---------------------------------------------------------------------------
# meta-learner audit

class OcomAuditor:
    """Round-by-round invariants of the cascade plus per-instance bounds of
    the gated subroutines (finalized whenever an instance is overwritten)."""

    def __init__(self, meta: OcomMeta, log: AuditLog, grid: np.ndarray,
                 rng=None, instance_bounds: bool = True):
        self.meta = meta
        self.log = log
        self.grid = np.atleast_2d(np.asarray(grid, dtype=float))
        if self.grid.shape[1] != meta.config.d:
            self.grid = self.grid.reshape(-1, meta.config.d)
        self.rng = rng or np.random.default_rng(0)
        self.instance_bounds = instance_bounds
        self.tapes: dict[int, dict] = {}
        self.prev_subs: dict[int, tuple] = {}

    # -- per-round ---------------------------------------------------------

    def after_round(self, info: RoundInfo) -> None:
        log, cfg = self.log, self.meta.config
        t = info.t

        for k in info.reinit_levels:
            if k in self.tapes:
                self._finalize(k, t)
            self.tapes[k] = self._new_tape(t)
            self.prev_subs.pop(k, None)

        expected = [k for k in range(info.K + 1) if t % (1 << k) == 0]
        log.check(sorted(info.reinit_levels) == expected, t, "reinit_schedule",
                  f"levels {info.reinit_levels} at t={t}, expected {expected}")

        gnorms = [float(np.linalg.norm(gk)) for gk in info.g_levels]
        for k in range(len(gnorms) - 1):
            log.leq(gnorms[k + 1], gnorms[k], t, f"grad_monotone(k={k})")
        log.leq(gnorms[0], cfg.G_tilde, t, "grad_bounded")

        for k in range(info.K + 1):
            z = info.z[k]
            log.check(-REL_SLACK <= z <= 1.0 + REL_SLACK, t, f"z_range(k={k})", f"z={z}")
            log.leq(float(np.linalg.norm(info.x_proj[k + 1])), cfg.R, t,
                    f"level_radius(k={k + 1})")
        log.leq(float(np.linalg.norm(cfg.project(info.x) - info.x)), 1e-12,
                t, "prediction_in_domain")

        # domination: <g(k), x(k+1) - x> <= <g(k+1), x~(k+1) - x> on the grid
        for k in range(info.K + 1):
            gk, gk1 = info.g_levels[k], info.g_levels[k + 1]
            const = float(np.dot(gk, info.x_proj[k + 1])) - float(
                np.dot(gk1, info.x_tilde[k + 1]))
            worst = const + float(np.max(self.grid @ (gk1 - gk)))
            log.leq(worst, 0.0, t, f"cascade_domination(k={k})")
        if not cfg.improper and info.g_raw is not None:
            g0 = info.g_levels[0]
            const = float(np.dot(info.g_raw, info.x)) - float(
                np.dot(g0, info.x_tilde[0]))
            worst = const + float(np.max(self.grid @ (g0 - info.g_raw)))
            log.leq(worst, 0.0, t, "surrogate_domination")

        self._update_tapes(info)

    def _new_tape(self, t: int) -> dict:
        return {"start": t, "ball_Z": [], "ball_w": [], "oned_Z": [],
                "oned_w": [], "round_absg_ball": [], "round_out_ball": [],
                "round_absg_oned": [], "round_out_oned": []}

    def _update_tapes(self, info: RoundInfo) -> None:
        log, cfg = self.log, self.meta.config
        t = info.t
        for k in range(info.K + 1):
            tape = self.tapes.get(k)
            if tape is None:  # level predates the auditor
                continue
            sub_ball, sub_1d = self.meta.levels[k]
            prev = self.prev_subs.get(k)
            g_ball = info.g_levels[k]
            g_1d = -float(np.dot(info.g_levels[k], info.x_proj[k + 1]))

            if prev is None:
                prev_ball_acc = np.zeros(cfg.d)
                prev_1d_acc = 0.0
                prev_ball_out = sub_ball.output if sub_ball.flushes == 0 else None
                prev_ball_fl, prev_1d_fl = 0, 0
                prev_1d_out = 0.0
            else:
                pb, p1 = prev
                prev_ball_acc, prev_ball_fl, prev_ball_out = pb
                prev_1d_acc, prev_1d_fl, prev_1d_out = p1

            if sub_ball.flushes > prev_ball_fl:
                z_val = prev_ball_acc + g_ball
                mag = float(np.linalg.norm(z_val))
                log.check(mag > sub_ball.threshold, t, f"flush_low(ball,k={k})",
                          f"|Z|={mag}")
                log.leq(mag, sub_ball.threshold + cfg.G_tilde, t,
                        f"flush_high(ball,k={k})")
                tape["ball_Z"].append(np.array(z_val))
                tape["ball_w"].append(np.array(sub_ball.output))
            else:
                log.check(np.array_equal(sub_ball.output,
                                         prev_ball_out if prev is not None else sub_ball.output),
                          t, f"piecewise_const(ball,k={k})", "output moved without flush")

            if sub_1d.flushes > prev_1d_fl:
                z_val = prev_1d_acc + g_1d
                mag = abs(z_val)
                log.check(mag > sub_1d.threshold, t, f"flush_low(1d,k={k})",
                          f"|Z|={mag}")
                log.leq(mag, sub_1d.threshold + cfg.G_tilde * cfg.R, t,
                        f"flush_high(1d,k={k})")
                tape["oned_Z"].append(z_val)
                tape["oned_w"].append(sub_1d.output)
            else:
                if prev is not None:
                    log.check(sub_1d.output == prev_1d_out, t,
                              f"piecewise_const(1d,k={k})", "output moved without flush")

            tape["round_absg_ball"].append(float(np.linalg.norm(g_ball)))
            tape["round_out_ball"].append(np.array(sub_ball.output))
            tape["round_absg_oned"].append(abs(g_1d))
            tape["round_out_oned"].append(float(sub_1d.output))

            self.prev_subs[k] = (
                (np.array(sub_ball.acc), sub_ball.flushes, np.array(sub_ball.output)),
                (sub_1d.acc, sub_1d.flushes, sub_1d.output),
            )

    # -- per-instance ------------------------------------------------------

    def finish(self) -> None:
        t_end = self.meta.rounds_done + 1
        for k in list(self.tapes):
            self._finalize(k, t_end)

    def _finalize(self, k: int, t_now: int) -> None:
        tape = self.tapes.pop(k)
        log, cfg = self.log, self.meta.config
        start = tape["start"]
        label = f"k={k}@{start}"
        threshold_1d = max(cfg.lam * cfg.R, cfg.G_tilde * cfg.R)
        threshold_ball = max(cfg.lam, cfg.G_tilde)

        # base step-count bounds
        n1 = len(tape["oned_Z"])
        log.leq(n1, 1.0 + sum(tape["round_absg_oned"]) / threshold_1d,
                start, f"base_steps(1d,{label})")
        nb = len(tape["ball_Z"])
        log.leq(nb, 1.0 + sum(tape["round_absg_ball"]) / threshold_ball,
                start, f"base_steps(ball,{label})")

        # windowed movement adapting to the accumulated gradients (the ball
        # constant covers the plain variant only; shifted instances widen the
        # magnitude domain)
        self._movement_window(np.array(tape["round_out_oned"], dtype=float)[:, None],
                              np.array(tape["round_absg_oned"]), threshold_1d,
                              48.0, f"sub_movement(1d,{label})")
        if not cfg.shifted:
            outs = np.array(tape["round_out_ball"], dtype=float)
            self._movement_window(outs, np.array(tape["round_absg_ball"]),
                                  threshold_ball, 50.0 * cfg.R,
                                  f"sub_movement(ball,{label})")

        if not self.instance_bounds:
            return
        eps = (2.0 ** k) * cfg.eps0

        # flushed-loss cost bound, 1-d wrapper (comparators in [0, 1])
        if n1 >= 1:
            Z = np.array(tape["oned_Z"])
            w = np.array([0.0] + tape["oned_w"])[: n1 + 1]  # w_1..w_{n1+1}
            base_hyper = Hyper1d(lam=cfg.lam * cfg.R, gamma=0.0, eps=eps,
                                 G=threshold_1d + cfg.G_tilde * cfg.R, r_bar=1.0)
            if base_hyper.budget_ok():
                move = np.sum(np.abs(np.diff(w)))
                for u in np.linspace(0.0, 1.0, 11):
                    lhs = float(np.dot(Z, w[:n1] - u)) + cfg.lam * cfg.R * move
                    rhs = bound_regret_movement_1d(float(u), base_hyper.C, n1, eps)
                    log.leq(lhs, rhs, start, f"sub_cost_bound(1d,{label})")

        # flushed-loss cost bound, ball wrapper (plain instances only)
        if nb >= 2 and not cfg.shifted:
            Z = np.array(tape["ball_Z"])
            w = np.array([np.zeros(cfg.d)] + tape["ball_w"])[: nb + 1]
            G_base = threshold_ball + cfg.G_tilde
            if eps <= G_base * cfg.R:
                move = float(np.sum(np.linalg.norm(np.diff(w[:nb], axis=0), axis=1)))
                for u in _ball_grid(cfg.d, cfg.R, 9):
                    lhs = float(np.sum(np.einsum("id,id->i", Z, w[:nb] - u)))
                    rhs = bound_regret_movement_ball(float(np.linalg.norm(u)),
                                                     G_base, cfg.lam, nb, eps)
                    log.leq(lhs + cfg.lam * move, rhs, start,
                            f"sub_cost_bound(ball,{label})")

    def _movement_window(self, outs: np.ndarray, absg: np.ndarray,
                         threshold: float, scale: float, name: str) -> None:
        n = len(absg)
        if n < 2:
            return
        move = np.linalg.norm(outs[1:] - outs[:-1], axis=1)
        mcum = np.concatenate(([0.0], np.cumsum(move)))
        gcum = np.concatenate(([0.0], np.cumsum(absg)))
        windows = [(1, n)]
        if n >= 8:
            for _ in range(3):
                a = int(self.rng.integers(1, n))
                b = int(self.rng.integers(a + 1, n + 1))
                windows.append((a, b))
        for a, b in windows:
            lhs = mcum[b - 1] - mcum[a - 1]
            gsum = gcum[b - 1] - gcum[a - 1]
            self.log.leq(lhs, scale * (1.0 + math.sqrt(gsum / threshold)),
                         a, name)


# ---------------------------------------------------------------------------
# tracking-control audit

def audit_control_round(t: int, x_t: np.ndarray, u_t: np.ndarray,
                        y_t: np.ndarray, ideal_value: float, true_value: float,
                        w_hat: np.ndarray, w_true: np.ndarray,
                        constants, log: AuditLog) -> None:
    log.leq(float(np.linalg.norm(x_t)), constants.state_bound, t, "state_bound")
    log.leq(float(np.linalg.norm(y_t)), constants.state_bound, t, "ideal_state_bound")
    log.leq(abs(ideal_value - true_value), constants.truncation_bound, t,
            "truncation_gap")
    log.leq(float(np.linalg.norm(u_t)), constants.U, t, "action_bound")
    log.leq(float(np.linalg.norm(w_hat - w_true)), DISTURBANCE_TOL, t,
            "disturbance_recovery")
