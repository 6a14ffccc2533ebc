"""Render figures from satrack CSV traces.

Series are passed to matplotlib exactly as parsed from the trace — no
resampling or smoothing — so the plotted data equal the trace columns.
Titles echo the run configuration (T, eps0, H) from the sibling summary.json
when present.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FIGURE_KINDS = ("olo", "ocom", "control-1d", "control-2d")

REQUIRED_COLUMNS = {
    "olo": ("t", "x", "target"),
    "ocom": ("t", "x", "target"),
    "control-1d": ("t", "x0", "target0"),
    "control-2d": ("x0", "x1", "target0", "target1"),
}


class TraceError(ValueError):
    """Unreadable or empty trace file."""


class MissingColumnError(TraceError):
    """The trace lacks a column the figure kind needs."""


@dataclass
class FigureSpec:
    trace: Path
    kind: str
    out: Path

    def __post_init__(self) -> None:
        self.trace = Path(self.trace)
        self.out = Path(self.out)
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {FIGURE_KINDS}")


def read_trace(path: Path) -> dict[str, np.ndarray]:
    try:
        with Path(path).open() as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = list(reader)
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc}") from exc
    if header is None or not rows:
        raise TraceError(f"trace {path} has no data rows")
    data = np.array(rows, dtype=float)
    return {name: data[:, j] for j, name in enumerate(header)}


def _title(spec: FigureSpec) -> str:
    summary = Path(spec.trace).parent / "summary.json"
    if summary.exists():
        cfg = json.loads(summary.read_text()).get("config", {})
        bits = [cfg.get("name", spec.kind)]
        if "T" in cfg:
            bits.append(f"T={cfg['T']}")
        if spec.kind != "olo" and "eps0" in cfg:
            bits.append(f"eps0={cfg['eps0']}")
        if spec.kind != "olo" and cfg.get("H"):
            bits.append(f"H={cfg['H']}")
        return f"{bits[0]} ({', '.join(bits[1:])})" if len(bits) > 1 else bits[0]
    return spec.kind


def _require(trace: dict, spec: FigureSpec) -> None:
    missing = [c for c in REQUIRED_COLUMNS[spec.kind] if c not in trace]
    if missing:
        raise MissingColumnError(
            f"trace {spec.trace} lacks columns {missing} needed by {spec.kind!r}")


def build_figure(spec: FigureSpec) -> plt.Figure:
    trace = read_trace(spec.trace)
    _require(trace, spec)
    fig, ax = plt.subplots(figsize=(8, 4.5))

    if spec.kind in ("olo", "ocom"):
        ax.plot(trace["t"], trace["x"], label="x", linewidth=1.0)
        if spec.kind == "olo" and "x_alt" in trace:
            ax.plot(trace["t"], trace["x_alt"], label="x_alt", linewidth=1.0)
        ax.plot(trace["t"], trace["target"], label="target",
                linestyle="--", color="black", linewidth=1.0)
        ax.set_xlabel("round")
        ax.set_ylabel("prediction")
    elif spec.kind == "control-1d":
        ax.plot(trace["t"], trace["x0"], label="x0", linewidth=1.0)
        if "u0" in trace:
            ax.plot(trace["t"], trace["u0"], label="u0",
                    linewidth=0.8, alpha=0.7)
        ax.plot(trace["t"], trace["target0"], label="target0",
                linestyle="--", color="black", linewidth=1.0)
        ax.set_xlabel("round")
        ax.set_ylabel("state / action")
    else:  # control-2d: planar trajectory with the target path overlaid
        ax.plot(trace["x0"], trace["x1"], label="state", linewidth=1.0)
        ax.plot(trace["target0"], trace["target1"], label="target",
                linestyle="--", color="black", linewidth=1.0)
        ax.set_xlabel("x0")
        ax.set_ylabel("x1")
        ax.set_aspect("equal")

    ax.legend(loc="best")
    ax.set_title(_title(spec))
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    """Write the figure; on any error no file is produced."""
    fig = build_figure(spec)
    try:
        spec.out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out, dpi=150)
    finally:
        plt.close(fig)
    return spec.out
