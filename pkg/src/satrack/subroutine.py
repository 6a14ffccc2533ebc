"""Accumulator-gated wrappers around the base learners, plus the integer
arithmetic of the dyadic covering intervals.

The wrapper sums incoming gradients into an accumulator Z and only advances
the base learner when |Z| exceeds max(lam, G); between flushes the output is
constant.  This adaptively slows the base down: after gradients g_1..g_T its
step count is at most 1 + sum|g_t| / max(lam, G).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from . import ball as _ball
from . import betting as _betting
from .ball import BallHyper, BallLearnerState
from .betting import BettingState, Hyper1d


def k_max(t: int) -> int:
    """Highest active level at round t: ceil(log2(t+1)) - 1, via bit length."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return t.bit_length() - 1


def gc_levels_starting_at(t: int) -> list[tuple[int, int]]:
    """All (level k, position i) with 2^k * i == t, i >= 1."""
    if t < 1:
        raise ValueError("t must be >= 1")
    out = []
    k = 0
    while t % (1 << k) == 0:
        out.append((k, t >> k))
        k += 1
    return out


def gc_interval(k: int, i: int) -> tuple[int, int]:
    """The dyadic interval [2^k * i, 2^k * (i+1) - 1] covered by (k, i)."""
    return ((i << k), ((i + 1) << k) - 1)


@dataclass(frozen=True, eq=False)
class GcSubroutine:
    """Gated wrapper state.

    variant    "one-d" or "ball"
    threshold  max(lam, G) of the wrapper's own hyperparameters
    hyper      base-learner hyperparameters
    base       base-learner state
    acc        accumulator Z (float or vector)
    flushes    completed flush count (base steps taken)
    output     current prediction w (constant between flushes)
    """

    variant: str
    threshold: float
    hyper: Union[Hyper1d, BallHyper]
    base: Union[BettingState, BallLearnerState]
    acc: Union[float, np.ndarray]
    flushes: int
    output: Union[float, np.ndarray]


def make_subroutine_1d(lam: float, eps: float, G: float) -> GcSubroutine:
    """One-dimensional variant on the domain [0, 1]."""
    hyper = Hyper1d(lam=lam, gamma=0.0, eps=eps, G=max(lam, G) + G, r_bar=1.0)
    base = _betting.fresh_state(hyper)
    return GcSubroutine(
        variant="one-d", threshold=max(lam, G), hyper=hyper, base=base,
        acc=0.0, flushes=0, output=base.x,
    )


def make_subroutine_ball(
    lam: float, eps: float, G: float, radius: float, d: int,
    shift: np.ndarray | None = None,
) -> GcSubroutine:
    """Ball variant on ball(0, radius), optionally recentered at ``shift``."""
    hyper = BallHyper(lam=lam, eps=eps, G=max(lam, G) + G, radius=radius,
                      shift=None if shift is None else np.array(shift, dtype=float))
    base = _ball.fresh_ball(hyper, d)
    return GcSubroutine(
        variant="ball", threshold=max(lam, G), hyper=hyper, base=base,
        acc=np.zeros(d), flushes=0, output=_ball.predict_ball(base, hyper),
    )


def feed(sub: GcSubroutine, g) -> GcSubroutine:
    """Accumulate one gradient; flush to the base learner past the threshold."""
    acc = sub.acc + g
    mag = abs(acc) if sub.variant == "one-d" else float(np.linalg.norm(acc))
    if mag <= sub.threshold:
        return replace(sub, acc=acc)

    if sub.variant == "one-d":
        base = _betting.step_1d(sub.base, acc, sub.hyper)
        output = base.x
        zero = 0.0
    else:
        base = _ball.step_ball(sub.base, acc, sub.hyper)
        output = _ball.predict_ball(base, sub.hyper)
        zero = np.zeros_like(acc)
    return replace(sub, base=base, acc=zero, flushes=sub.flushes + 1,
                   output=output)
