"""Experiment execution: runs named configs, writes CSV traces and JSON
summaries, and drives the auditors in ``--audit`` mode.

Traces are deterministic: floats are serialized with 17 significant digits so
identical (config, T, seed) runs produce identical bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .audit import (
    AuditLog,
    OcomAuditor,
    audit_betting_stream,
    audit_control_round,
    audit_regret_movement_1d,
)
from .betting import Hyper1d
from .control import ControlConstants, TrackingController, norm_tracking_loss
from .meta import OcomConfig, OcomMeta
from .oracles import GRID_POINTS, box_grid
from .simenv import ExperimentConfig, build_plant, make_experiment, target_fn

OUT_ROOT_ENV = "SATRACK_RUNS_DIR"


def out_root() -> Path:
    return Path(os.environ.get(OUT_ROOT_ENV, "runs"))


def fmt(value: float) -> str:
    return format(float(value), ".17g")


@dataclass
class RunResult:
    config: ExperimentConfig
    header: list
    rows: list
    summary: dict
    audit: AuditLog
    trace_path: Path | None = None
    summary_path: Path | None = None


def write_outputs(result: RunResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    trace = out_dir / "trace.csv"
    with trace.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(result.header)
        writer.writerows(result.rows)
    summary = out_dir / "summary.json"
    with summary.open("w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with (out_dir / "config.json").open("w") as fh:
        json.dump(dataclasses.asdict(result.config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    result.trace_path = trace
    result.summary_path = summary


def load_trace(path: Path) -> dict[str, np.ndarray]:
    with Path(path).open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if not rows:
        raise ValueError(f"empty trace {path}")
    data = np.array(rows, dtype=float)
    return {name: data[:, j] for j, name in enumerate(header)}


def load_sibling_summary(trace_path: Path) -> dict:
    p = Path(trace_path).parent / "summary.json"
    if not p.exists():
        raise FileNotFoundError(f"no summary.json next to {trace_path}")
    return json.loads(p.read_text())


def config_from_summary(summary: dict) -> ExperimentConfig:
    cfg = make_experiment(summary["config"]["name"])
    return cfg.override(**{k: v for k, v in summary["config"].items()
                           if k not in ("name", "kind")})


# ---------------------------------------------------------------------------
# olo

def run_olo(config: ExperimentConfig, audit: bool, seed: int,
            log: AuditLog) -> RunResult:
    T = config.T
    targets = np.full(T, config.x_star)
    hyper = Hyper1d(lam=config.lam, gamma=config.gamma_reg, eps=config.eps,
                    G=config.G, r_bar=config.R)
    x, x_tilde, wealth, beta, g, g_tilde = kernels.betting_run_target(
        targets, hyper.lam, hyper.gamma, hyper.eps, hyper.G, hyper.r_bar)
    x_alt = kernels.betting_run_target(
        targets, hyper.lam, hyper.gamma, hyper.eps, hyper.G, config.R_alt)[0]

    if audit:
        rng = np.random.default_rng(seed)
        audit_betting_stream(x, x_tilde, wealth, beta, g_tilde, hyper, log,
                             rng=rng)
        audit_regret_movement_1d(
            x, g, hyper, horizons=(min(100, T), min(1000, T), T),
            grid=box_grid(0.0, config.R, GRID_POINTS), log=log)

    losses = np.abs(x[:T] - targets)
    cum = np.cumsum(losses)
    header = ["t", "x", "x_alt", "target", "g", "loss", "cum_loss",
              "movement", "wealth", "beta", "audit_violations"]
    viol_by_t = _violations_by_round(log, T)
    rows = []
    for i in range(T):
        move = abs(x[i] - x[i - 1]) if i > 0 else 0.0
        rows.append([i + 1, fmt(x[i]), fmt(x_alt[i]), fmt(targets[i]),
                     fmt(g[i]), fmt(losses[i]), fmt(cum[i]), fmt(move),
                     fmt(wealth[i + 1]), fmt(beta[i]), viol_by_t[i]])
    sup_gap = float(np.max(np.abs(x[:T] - x_alt[:T])))
    summary = {
        "config": dataclasses.asdict(config), "seed": seed,
        "final_cum_loss": float(cum[-1]), "final_wealth": float(wealth[T]),
        "sup_gap_vs_alt_radius": sup_gap,
        "audit": _audit_summary(log, audit),
    }
    return RunResult(config, header, rows, summary, log)


# ---------------------------------------------------------------------------
# ocom

def build_meta(config: ExperimentConfig) -> OcomMeta:
    R = config.domain_radius
    return OcomMeta(OcomConfig(
        T=config.T, R=R, L=config.L, H=config.H, G_tilde=config.G_tilde,
        eps0=config.eps0, d=1, shifted=config.shifted,
        project=lambda x: np.clip(x, -R, R),
    ))


def run_ocom(config: ExperimentConfig, audit: bool, seed: int,
             log: AuditLog) -> RunResult:
    T, H = config.T, config.H
    meta = build_meta(config)
    tf = target_fn(config)
    auditor = None
    if audit:
        auditor = OcomAuditor(meta, log,
                              grid=box_grid(-config.domain_radius,
                                            config.domain_radius,
                                            GRID_POINTS)[:, None],
                              rng=np.random.default_rng(seed))

    history = [np.zeros(1)] * H
    rows = []
    cum = 0.0
    prev_x = np.zeros(1)
    for t in range(1, T + 1):
        x = meta.predict(t)
        tgt = tf(t)
        window = history[-H:] + [x] if H else [x]
        loss = float(sum(np.linalg.norm(xp - tgt) for xp in window))
        diff = x - tgt
        n = float(np.linalg.norm(diff))
        grad = (H + 1) * diff / n if n > 0.0 else np.zeros(1)
        meta.update(grad)
        if auditor is not None:
            auditor.after_round(meta.last_round)

        cum += loss
        move = float(np.linalg.norm(x - prev_x)) if t > 1 else 0.0
        rows.append([t, fmt(x[0]), fmt(tgt[0]), fmt(loss), fmt(cum),
                     fmt(move), meta.last_round.flushes, 0])
        history.append(x)
        prev_x = x
    if auditor is not None:
        auditor.finish()

    header = ["t", "x", "target", "loss", "cum_loss", "movement", "flushes",
              "audit_violations"]
    _fill_violations_column(rows, log, col=7)
    dips = [t for t in (2 ** n for n in range(1, 16)) if t <= T]
    summary = {
        "config": dataclasses.asdict(config), "seed": seed,
        "final_cum_loss": cum, "reinit_rounds": dips,
        "audit": _audit_summary(log, audit),
    }
    return RunResult(config, header, rows, summary, log)


# ---------------------------------------------------------------------------
# control

def run_control(config: ExperimentConfig, audit: bool, seed: int,
                log: AuditLog) -> RunResult:
    T = config.T
    plant = build_plant(config)
    tf = target_fn(config)
    constants = ControlConstants(
        kappa=config.kappa, gamma=config.gamma_margin, U=config.U,
        W=config.W, L_star=config.L_star, T=T, H=config.H or None)
    loss = norm_tracking_loss(tf, plant.d_u)
    controller = TrackingController(
        constants, plant.A_fn, plant.B_fn, loss, plant.d_x, plant.d_u,
        eps0=config.eps0, shifted=config.shifted)

    auditor = None
    if audit:
        from .oracles import control_candidates
        auditor = OcomAuditor(controller.learner, log,
                              grid=control_candidates(config.U, config.d,
                                                      GRID_POINTS if config.d == 1 else 41),
                              rng=np.random.default_rng(seed))

    d_x, d_u = plant.d_x, plant.d_u
    x = plant.step(np.zeros(d_u))  # x_1 = w_0 from x_0 = 0, u_0 = 0
    rows = []
    cum = 0.0
    prev_u = np.zeros(d_u)
    for t in range(1, T + 1):
        u = controller.action(x)
        y = controller.ideal_state()
        true_loss = loss.value(x, u, t)
        controller.observe_loss()
        if auditor is not None:
            auditor.after_round(controller.learner.last_round)
            audit_control_round(
                t, x, u, y, loss.value(y, u, t), true_loss,
                controller.last_w, np.atleast_1d(plant.w_fn(t - 1)),
                constants, log)

        cum += true_loss
        tgt = tf(t)
        move = float(np.linalg.norm(u - prev_u)) if t > 1 else 0.0
        row = [t]
        row += [fmt(v) for v in x]
        row += [fmt(v) for v in u]
        row += [fmt(v) for v in np.atleast_1d(tgt)]
        row += [fmt(v) for v in controller.last_w]
        row += [fmt(true_loss), fmt(cum), fmt(move),
                controller.learner.last_round.flushes, 0]
        rows.append(row)
        prev_u = u
        if t < T:
            x = plant.step(u)
    if auditor is not None:
        auditor.finish()
        for (tv, name, value) in plant.bound_violations:
            if name == "A_norm":
                log.note(tv, "plant_A_norm", f"|A_t|={value} > {1 - config.gamma_margin}")
            else:
                log.check(False, tv, f"plant_{name}", str(value))

    header = (["t"] + [f"x{i}" for i in range(d_x)] + [f"u{i}" for i in range(d_u)]
              + [f"target{i}" for i in range(d_x)] + [f"w_hat{i}" for i in range(d_x)]
              + ["loss", "cum_loss", "movement", "flushes", "audit_violations"])
    _fill_violations_column(rows, log, col=len(header) - 1)
    summary = {
        "config": dataclasses.asdict(config), "seed": seed,
        "final_cum_loss": cum,
        "H_effective": constants.memory, "G_tilde": constants.G_tilde,
        "state_bound": constants.state_bound,
        "truncation_bound": constants.truncation_bound,
        "max_A_norm": plant.max_A_norm, "max_B_norm": plant.max_B_norm,
        "max_w_norm": plant.max_w_norm,
        "audit": _audit_summary(log, audit),
    }
    return RunResult(config, header, rows, summary, log)


# ---------------------------------------------------------------------------

def _violations_by_round(log: AuditLog, T: int) -> list[int]:
    counts = [0] * T
    for t, _, _ in log.violations:
        if 1 <= t <= T:
            counts[t - 1] += 1
    return counts


def _fill_violations_column(rows: list, log: AuditLog, col: int) -> None:
    counts = _violations_by_round(log, len(rows))
    for i, row in enumerate(rows):
        row[col] = counts[i]



def _audit_summary(log: AuditLog, enabled: bool) -> dict:
    return {
        "enabled": enabled,
        "violations": len(log.violations),
        "first_violation": log.first(),
        "notes": [f"t={t} {n}: {d}" for t, n, d in log.notes[:20]],
        "max_note_count": len(log.notes),
    }


def run_experiment(name_or_config, T: int | None = None, seed: int = 0,
                   audit: bool = False, overrides: dict | None = None,
                   ) -> RunResult:
    if isinstance(name_or_config, ExperimentConfig):
        config = name_or_config
    else:
        config = make_experiment(name_or_config)
    if overrides:
        config.override(**overrides)
    if T is not None:
        config.T = T
    log = AuditLog()
    if config.kind == "olo":
        return run_olo(config, audit, seed, log)
    if config.kind == "ocom":
        return run_ocom(config, audit, seed, log)
    if config.kind == "control":
        return run_control(config, audit, seed, log)
    raise ValueError(f"unknown experiment kind {config.kind!r}")
