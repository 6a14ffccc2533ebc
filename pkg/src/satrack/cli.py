"""Command-line front end.

    satrack run <name> [--T n] [--seed n] [--audit] [--out dir] [--config file.json]
    satrack regret <trace.csv> --intervals a:b[,a:b...] [--grid n]
    satrack sweep <trace.csv> [--min-len n] [--grid n]

``run`` writes trace.csv, summary.json and the effective config.json under
<out>/<name>/ (out defaults to $SATRACK_RUNS_DIR or ./runs).  Exit codes:
0 ok, 2 usage error, 3 audit violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import oracles, runner
from .simenv import EXPERIMENT_NAMES


def parse_intervals(spec: str) -> list[tuple[int, int]]:
    out = []
    for chunk in spec.split(","):
        a, _, b = chunk.partition(":")
        out.append((int(a), int(b or a)))
    return out


def cmd_run(args) -> int:
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        overrides.pop("name", None)
        overrides.pop("kind", None)
    result = runner.run_experiment(args.name, T=args.T, seed=args.seed,
                                   audit=args.audit, overrides=overrides)
    out_dir = Path(args.out) if args.out else runner.out_root() / args.name
    runner.write_outputs(result, out_dir)
    summary = result.summary
    print(f"wrote {result.trace_path}")
    print(f"final cumulative loss: {summary['final_cum_loss']:.6g}")
    if "sup_gap_vs_alt_radius" in summary:
        print(f"sup-norm gap vs alt radius: {summary['sup_gap_vs_alt_radius']:.6g}")
    for note in summary["audit"]["notes"]:
        print(f"note: {note}")
    if args.audit and not result.audit.ok:
        print(f"AUDIT VIOLATION: {result.audit.first()}", file=sys.stderr)
        return 3
    if args.audit:
        print("audit: all invariants hold")
    return 0


def _load_for_replay(trace_path: str):
    trace = runner.load_trace(Path(trace_path))
    summary = runner.load_sibling_summary(Path(trace_path))
    config = runner.config_from_summary(summary)
    return trace, config


def _report(reports, path: Path) -> None:
    rows = [r.as_dict() for r in reports]
    path.write_text(json.dumps(
        {"intervals": rows, "max_ratio": oracles.max_ratio(reports)},
        indent=2, sort_keys=True) + "\n")
    print(f"{'a':>8} {'b':>8} {'|I|':>7} {'alg':>12} {'oracle':>12} "
          f"{'regret':>12} {'regret/sqrt':>12}")
    for r in reports:
        print(f"{r.a:8d} {r.b:8d} {r.length:7d} {r.alg_loss:12.4f} "
              f"{r.oracle_loss:12.4f} {r.regret:12.4f} {r.ratio:12.4f}")
    print(f"max regret/sqrt(|I|): {oracles.max_ratio(reports):.6f}")
    print(f"wrote {path}")


def _interval_reports(trace, config, intervals, n_grid):
    if config.kind == "ocom":
        x = trace["x"][:, None]
        targets = trace["target"][:, None]
        return oracles.ocom_interval_regret(
            x, targets, config.H, config.domain_radius, intervals, n_grid)
    if config.kind == "control":
        d = config.d
        x = np.stack([trace[f"x{i}"] for i in range(d)], axis=1)
        u = np.stack([trace[f"u{i}"] for i in range(d)], axis=1)
        return oracles.control_interval_regret(config, x, u, intervals, n_grid)
    if config.kind == "olo":
        # memoryless special case of the ocom replay, on the domain [0, R]
        x = trace["x"][:, None]
        targets = trace["target"][:, None]
        return oracles.ocom_interval_regret(x, targets, 0, config.R,
                                            intervals, n_grid, lo=0.0)
    raise ValueError(f"cannot replay kind {config.kind!r}")


def cmd_regret(args) -> int:
    trace, config = _load_for_replay(args.trace)
    intervals = parse_intervals(args.intervals)
    reports = _interval_reports(trace, config, intervals, args.grid)
    _report(reports, Path(args.trace).parent / "regret.json")
    return 0


def cmd_sweep(args) -> int:
    trace, config = _load_for_replay(args.trace)
    T = len(trace["t"])
    intervals = oracles.sweep_intervals(T, args.min_len)
    if not intervals:
        print("no dyadic intervals above the length threshold", file=sys.stderr)
        return 2
    reports = _interval_reports(trace, config, intervals, args.grid)
    _report(reports, Path(args.trace).parent / "sweep.json")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="satrack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a named experiment")
    p_run.add_argument("name", choices=EXPERIMENT_NAMES)
    p_run.add_argument("--T", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--audit", action="store_true",
                       help="assert every invariant per round")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--config", default=None,
                       help="JSON file of config-field overrides")
    p_run.set_defaults(func=cmd_run)

    p_reg = sub.add_parser("regret", help="interval regret vs oracle comparator")
    p_reg.add_argument("trace")
    p_reg.add_argument("--intervals", required=True,
                       help="comma-separated a:b pairs, 1-based inclusive")
    p_reg.add_argument("--grid", type=int, default=oracles.GRID_POINTS)
    p_reg.set_defaults(func=cmd_regret)

    p_sw = sub.add_parser("sweep", help="regret over all dyadic intervals")
    p_sw.add_argument("trace")
    p_sw.add_argument("--min-len", type=int, default=oracles.SWEEP_MIN_LEN)
    p_sw.add_argument("--grid", type=int, default=oracles.GRID_POINTS)
    p_sw.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
