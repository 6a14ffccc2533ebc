"""Kernel correctness: the stream kernels must agree with the per-step API
bit for bit, on both the jitted and the fallback path."""

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from satrack import kernels
from satrack.betting import Hyper1d, fresh_state, step_1d

from conftest import gradient_stream

CASES = [
    dict(lam=0.0, gamma=0.0, eps=1.0, G=1.0, r_bar=1.0),
    dict(lam=1.0, gamma=1.0, eps=1.0, G=1.0, r_bar=10.0),
    dict(lam=5.0, gamma=0.0, eps=0.5, G=2.0, r_bar=1.0),
    dict(lam=2.0, gamma=3.0, eps=1.0, G=1.0, r_bar=np.inf),
]


@pytest.mark.parametrize("params", CASES)
@pytest.mark.parametrize("kind", ["uniform", "rademacher", "blocks"])
def test_kernel_matches_stepwise(params, kind, rng):
    T = 400
    g = gradient_stream(rng, T, kind, G=params["G"])
    x, x_tilde, wealth, beta, g_tilde = kernels.betting_run(g, **params)

    h = Hyper1d(**params)
    s = fresh_state(h)
    for i in range(T):
        assert x[i] == s.x
        assert x_tilde[i] == s.x_tilde
        assert beta[i] == s.beta
        s = step_1d(s, float(g[i]), h)
        assert wealth[i + 1] == s.wealth
    assert x[T] == s.x and beta[T] == s.beta


def test_target_kernel_consistent_with_plain(rng):
    T = 600
    target = np.where(rng.random(T) < 0.5, 1.0, -0.5)
    x, x_tilde, wealth, beta, g, g_tilde = kernels.betting_run_target(
        target, 1.0, 0.0, 1.0, 1.0, 2.0)
    x2, _, wealth2, _, gt2 = kernels.betting_run(g, 1.0, 0.0, 1.0, 1.0, 2.0)
    np.testing.assert_array_equal(x, x2)
    np.testing.assert_array_equal(wealth, wealth2)
    np.testing.assert_array_equal(g_tilde, gt2)
    # realized gradients are subgradients of |x - target|
    d = x[:T] - target
    expected = np.sign(d)
    np.testing.assert_array_equal(g, expected)


def test_pursuit_converges_to_target():
    target = np.full(3000, 1.0)
    x, *_ = kernels.betting_run_target(target, 0.0, 0.0, 1.0, 1.0, 1.0)
    assert abs(x[2999] - 1.0) < 0.05
    assert np.mean(np.abs(x[2000:3000] - 1.0)) < 0.05


def test_fallback_path_matches_jitted(tmp_path, rng):
    """Run the same stream with SATRACK_NUMBA=0 in a subprocess and compare."""
    T = 300
    g = gradient_stream(rng, T, "uniform")
    np.save(tmp_path / "g.npy", g)
    script = tmp_path / "fallback.py"
    script.write_text(
        "import numpy as np\n"
        "from satrack import kernels\n"
        "assert not kernels.NUMBA_ENABLED\n"
        f"g = np.load(r'{tmp_path / 'g.npy'}')\n"
        "x, xt, w, b, gt = kernels.betting_run(g, 1.0, 1.0, 1.0, 1.0, 10.0)\n"
        f"np.savez(r'{tmp_path / 'out.npz'}', x=x, xt=xt, w=w, b=b, gt=gt)\n"
    )
    env = dict(os.environ, SATRACK_NUMBA="0")
    subprocess.run([sys.executable, str(script)], check=True, env=env,
                   cwd="/root/pkg")
    out = np.load(tmp_path / "out.npz")
    x, xt, w, b, gt = kernels.betting_run(g, 1.0, 1.0, 1.0, 1.0, 10.0)
    np.testing.assert_array_equal(out["x"], x)
    np.testing.assert_array_equal(out["w"], w)
    np.testing.assert_array_equal(out["b"], b)
