"""Hot loops of the 1-d betting learner over whole gradient streams.

The bound audits replay hundreds of T=5000 streams, so the per-round recursion
lives here as flat float64 loops, jitted with numba.  Set ``SATRACK_NUMBA=0``
to run the identical functions un-jitted (pure Python over numpy arrays);
``benchmarks/bench_kernels.py`` compares the two paths.

Both kernels return, for a T-long stream,

    x        (T+1,)  projected predictions x_1 .. x_{T+1}
    x_tilde  (T+1,)  unconstrained predictions
    wealth   (T+1,)  Wel_0 .. Wel_T
    beta     (T+1,)  betting fractions beta_1 .. beta_{T+1}
    g_tilde  (T,)    surrogate gradients

so windowed-movement and regret sums up to T (which reference x_{T+1}) need
no extra bookkeeping.  Inconsistent fixed-point branches raise ValueError.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("SATRACK_NUMBA", "1").strip().lower() not in (
    "0", "false", "no", "off",
)

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


BRANCH_TOL = 1e-12


@njit(cache=True)
def betting_run(g, lam, gamma, eps, G, r_bar):
    """Run the learner over the gradient array ``g`` (|g_t| <= G)."""
    T = g.shape[0]
    C = G + lam + gamma
    x = np.zeros(T + 1)
    x_tilde = np.zeros(T + 1)
    wealth = np.empty(T + 1)
    beta = np.zeros(T + 1)
    g_tilde = np.zeros(T)
    wealth[0] = eps

    grad_sum = 0.0
    w = eps
    for i in range(T):
        t = i + 1
        gt = g[i]
        xt = x[i]
        xti = x_tilde[i]
        gs = gt if gt * xti >= gt * xt else 0.0
        g_tilde[i] = gs
        grad_sum += gs

        beta_t = beta[i]
        beta_hat = -grad_sum / (2.0 * C * C * t)
        cap = 1.0 / (C * np.sqrt(2.0 * t))
        bn = beta_hat
        if bn < 0.0:
            bn = 0.0
        elif bn > cap:
            bn = cap

        a = 1.0 - gs * beta_t - gamma * beta_t / np.sqrt(t)
        lhs = beta_t * w
        wn = (a - lam * beta_t) * w / (1.0 - lam * bn)
        if lhs < bn * wn - BRANCH_TOL:
            wn = (a + lam * beta_t) * w / (1.0 + lam * bn)
            if lhs > bn * wn + BRANCH_TOL:
                raise ValueError("wealth fixed point: no self-consistent branch")
        if wn <= 0.0:
            raise ValueError("wealth fixed point: nonpositive solution")

        xn = bn * wn
        wealth[t] = wn
        beta[t] = bn
        x_tilde[t] = xn
        x[t] = xn if xn <= r_bar else r_bar
        w = wn
    return x, x_tilde, wealth, beta, g_tilde


@njit(cache=True)
def betting_run_target(target, lam, gamma, eps, G, r_bar):
    """Run against the pursuit loss |x - target_t|: g_t = sign(x_t - target_t),
    zero at the kink.  Returns the same arrays plus the realized gradients."""
    T = target.shape[0]
    C = G + lam + gamma
    x = np.zeros(T + 1)
    x_tilde = np.zeros(T + 1)
    wealth = np.empty(T + 1)
    beta = np.zeros(T + 1)
    g = np.zeros(T)
    g_tilde = np.zeros(T)
    wealth[0] = eps

    grad_sum = 0.0
    w = eps
    for i in range(T):
        t = i + 1
        xt = x[i]
        xti = x_tilde[i]
        d = xt - target[i]
        gt = 1.0 if d > 0.0 else (-1.0 if d < 0.0 else 0.0)
        g[i] = gt
        gs = gt if gt * xti >= gt * xt else 0.0
        g_tilde[i] = gs
        grad_sum += gs

        beta_t = beta[i]
        beta_hat = -grad_sum / (2.0 * C * C * t)
        cap = 1.0 / (C * np.sqrt(2.0 * t))
        bn = beta_hat
        if bn < 0.0:
            bn = 0.0
        elif bn > cap:
            bn = cap

        a = 1.0 - gs * beta_t - gamma * beta_t / np.sqrt(t)
        lhs = beta_t * w
        wn = (a - lam * beta_t) * w / (1.0 - lam * bn)
        if lhs < bn * wn - BRANCH_TOL:
            wn = (a + lam * beta_t) * w / (1.0 + lam * bn)
            if lhs > bn * wn + BRANCH_TOL:
                raise ValueError("wealth fixed point: no self-consistent branch")
        if wn <= 0.0:
            raise ValueError("wealth fixed point: nonpositive solution")

        xn = bn * wn
        wealth[t] = wn
        beta[t] = bn
        x_tilde[t] = xn
        x[t] = xn if xn <= r_bar else r_bar
        w = wn
    return x, x_tilde, wealth, beta, g, g_tilde
