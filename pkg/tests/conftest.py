"""Shared test oracles and stream generators.

The bisection solver here is the independent oracle for the closed-form
wealth fixed point: it never looks at the branch formulas, only at the
defining equation.
"""

from __future__ import annotations

import math

import numpy as np
import pytest


def wealth_rhs(W, wealth_prev, g_tilde, beta_t, beta_next, t, lam, gamma):
    return ((1.0 - g_tilde * beta_t - gamma * beta_t / np.sqrt(t)) * wealth_prev
            - lam * np.abs(beta_t * wealth_prev - beta_next * W))


def bisect_wealth(wealth_prev, g_tilde, beta_t, beta_next, t, lam, gamma,
                  iters: int = 200):
    """Vectorized bisection on f(W) = rhs(W) - W, which is strictly
    decreasing.  Accepts scalars or equal-length arrays."""
    wealth_prev = np.asarray(wealth_prev, dtype=float)
    lo = -10.0 * wealth_prev
    hi = 10.0 * wealth_prev
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f = wealth_rhs(mid, wealth_prev, g_tilde, beta_t, beta_next, t,
                       lam, gamma) - mid
        take_hi = f > 0.0
        lo = np.where(take_hi, mid, lo)
        hi = np.where(take_hi, hi, mid)
    return 0.5 * (lo + hi)


def random_wealth_tuples(rng, n):
    """Random solve inputs satisfying the preconditions."""
    lam = np.where(rng.random(n) < 0.25, 0.0,
                   np.exp(rng.uniform(math.log(1e-3), math.log(10.0), n)))
    gamma = np.where(rng.random(n) < 0.25, 0.0,
                     np.exp(rng.uniform(math.log(1e-3), math.log(10.0), n)))
    G = np.exp(rng.uniform(math.log(0.1), math.log(10.0), n))
    C = G + lam + gamma
    t = rng.integers(1, 10_000, size=n)
    cap_t = np.where(t >= 2, 1.0 / (C * np.sqrt(2.0 * np.maximum(t - 1, 1))), 0.0)
    cap_next = 1.0 / (C * np.sqrt(2.0 * t))
    beta_t = rng.random(n) * cap_t
    beta_next = rng.random(n) * cap_next
    wealth_prev = np.exp(rng.uniform(math.log(1e-6), math.log(1e3), n))
    g_tilde = rng.uniform(-1.0, 1.0, n) * G
    return wealth_prev, g_tilde, beta_t, beta_next, t, lam, gamma


def gradient_stream(rng, T, kind: str, G: float = 1.0):
    """Random bounded gradient streams of three adversarial flavors."""
    if kind == "uniform":
        return rng.uniform(-G, G, T)
    if kind == "rademacher":
        return G * rng.choice([-1.0, 1.0], size=T)
    if kind == "blocks":
        # sign flips in random blocks, worst-case-ish for movement
        out = np.empty(T)
        i = 0
        while i < T:
            width = int(rng.integers(1, 200))
            out[i: i + width] = G * rng.choice([-1.0, 1.0])
            i += width
        return out
    raise ValueError(kind)


STREAM_KINDS = ("uniform", "rademacher", "blocks", "pursuit")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
