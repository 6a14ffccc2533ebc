"""Gated subroutines and dyadic-interval arithmetic."""

from __future__ import annotations

import numpy as np
import pytest

from satrack.audit import (
    AuditLog,
    bound_regret_movement_1d,
    bound_regret_movement_ball,
)
from satrack.subroutine import (
    feed,
    gc_interval,
    gc_levels_starting_at,
    k_max,
    make_subroutine_1d,
    make_subroutine_ball,
)


class TestGcArithmetic:
    @pytest.mark.parametrize("t,expected", [
        (12, [(0, 12), (1, 6), (2, 3)]),
        (1, [(0, 1)]),
        (8, [(0, 8), (1, 4), (2, 2), (3, 1)]),
    ])
    def test_levels_starting_at(self, t, expected):
        assert gc_levels_starting_at(t) == expected

    @pytest.mark.parametrize("t,expected", [(1, 0), (7, 2), (1024, 10),
                                            (2, 1), (3, 1), (1023, 9)])
    def test_k_max(self, t, expected):
        assert k_max(t) == expected

    def test_interval_length(self):
        for k in range(6):
            for i in range(1, 9):
                a, b = gc_interval(k, i)
                assert b - a + 1 == 2 ** k
                assert a == 2 ** k * i

    def test_rejects_nonpositive_rounds(self):
        with pytest.raises(ValueError):
            k_max(0)
        with pytest.raises(ValueError):
            gc_levels_starting_at(0)


class TestGate:
    def test_threshold_crossing_flushes(self):
        sub = make_subroutine_1d(lam=2.0, eps=1.0, G=1.0)
        sub = feed(sub, 0.8)
        sub = feed(sub, 0.9)
        assert sub.flushes == 0
        sub = feed(sub, 0.5)  # Z = 2.2 > 2
        assert sub.flushes == 1
        assert sub.acc == 0.0

    def test_threshold_is_strict(self):
        sub = make_subroutine_1d(lam=0.0, eps=1.0, G=1.0)
        sub = feed(sub, 1.0)
        assert sub.flushes == 0 and sub.acc == 1.0

    def test_zeros_never_flush(self):
        sub = make_subroutine_ball(lam=1.0, eps=1.0, G=1.0, radius=1.0, d=2)
        first = sub.output
        for _ in range(20):
            sub = feed(sub, np.zeros(2))
        assert sub.flushes == 0
        np.testing.assert_array_equal(sub.output, first)

    def test_base_hyperparameters(self):
        sub = make_subroutine_1d(lam=2.0, eps=0.5, G=1.0)
        assert sub.hyper.G == 3.0          # max(lam, G) + G
        assert sub.hyper.gamma == 0.0
        assert sub.hyper.r_bar == 1.0
        assert sub.threshold == 2.0
        ball = make_subroutine_ball(lam=0.5, eps=0.5, G=2.0, radius=3.0, d=2)
        assert ball.hyper.G == 4.0
        assert ball.hyper.magnitude_hyper.gamma == 0.5
        assert ball.threshold == 2.0

    def test_first_output_is_origin_or_shift(self):
        assert make_subroutine_1d(1.0, 1.0, 1.0).output == 0.0
        shifted = make_subroutine_ball(1.0, 1.0, 1.0, 2.0, 2,
                                       shift=np.array([0.3, 0.4]))
        np.testing.assert_array_equal(shifted.output, [0.3, 0.4])


@pytest.mark.parametrize("lam,G", [(2.0, 1.0), (0.5, 1.0), (0.0, 1.0)])
def test_flush_invariants_on_random_streams(rng, lam, G):
    """Every flushed batch lands in (max(lam,G), max(lam,G)+G]; step count is
    bounded by the gradient mass; output moves only at flushes."""
    sub = make_subroutine_1d(lam=lam, eps=1.0, G=G)
    thresh = max(lam, G)
    total = 0.0
    acc_prev = 0.0
    for _ in range(2000):
        g = float(rng.uniform(-G, G))
        total += abs(g)
        before = sub
        sub = feed(sub, g)
        if sub.flushes > before.flushes:
            flushed = acc_prev + g
            assert thresh < abs(flushed) <= thresh + G + 1e-12
            acc_prev = 0.0
        else:
            assert sub.output == before.output
            acc_prev = sub.acc
    assert sub.flushes <= 1 + total / thresh


def test_movement_adapts_to_gradient_mass(rng):
    """Windowed output movement is bounded by 48(1 + sqrt(mass/threshold))
    for the 1-d gate and the 50R analogue for the ball gate."""
    log = AuditLog()
    lam, G = 2.0, 1.0
    sub = make_subroutine_1d(lam=lam, eps=1.0, G=G)
    outs, mass = [], []
    for _ in range(3000):
        g = float(rng.uniform(-G, G))
        sub = feed(sub, g)
        outs.append(sub.output)
        mass.append(abs(g))
    outs, mass = np.asarray(outs), np.asarray(mass)
    for a, b in [(1, 3000), (100, 900), (2000, 2500), (1, 2), (512, 1024)]:
        move = float(np.sum(np.abs(np.diff(outs[a - 1: b]))))
        bound = 48.0 * (1.0 + np.sqrt(np.sum(mass[a - 1: b - 1]) / max(lam, G)))
        log.leq(move, bound, a, f"sub_movement[{a}:{b}]")

    R = 2.0
    ball = make_subroutine_ball(lam=lam, eps=1.0, G=G, radius=R, d=2)
    bouts, bmass = [], []
    for _ in range(2000):
        g = rng.normal(size=2)
        g *= rng.random() * G / max(1.0, float(np.linalg.norm(g)))
        ball = feed(ball, g)
        bouts.append(np.array(ball.output))
        bmass.append(float(np.linalg.norm(g)))
    bouts, bmass = np.asarray(bouts), np.asarray(bmass)
    for a, b in [(1, 2000), (50, 600), (1500, 1800)]:
        move = float(np.sum(np.linalg.norm(np.diff(bouts[a - 1: b], axis=0), axis=1)))
        bound = 50.0 * R * (1.0 + np.sqrt(np.sum(bmass[a - 1: b - 1]) / max(lam, G)))
        log.leq(move, bound, a, f"ball_movement[{a}:{b}]")
    assert log.ok, log.first()


def test_flushed_losses_satisfy_base_cost_bound(rng):
    """Cost + movement of the base learner over the flushed losses stays
    under the explicit budget-plus-comparator bound."""
    lam, G, eps = 2.0, 1.0, 1.0
    sub = make_subroutine_1d(lam=lam, eps=eps, G=G)
    Z, w = [], [0.0]
    acc = 0.0
    for _ in range(4000):
        g = float(rng.uniform(-G, G))
        before = sub.flushes
        sub = feed(sub, g)
        if sub.flushes > before:
            Z.append(acc + g)
            w.append(sub.output)
            acc = 0.0
        else:
            acc = sub.acc
    n = len(Z)
    assert n >= 3
    Z, w = np.asarray(Z), np.asarray(w)
    move = float(np.sum(np.abs(np.diff(w))))
    C = sub.hyper.C
    for u in np.linspace(0.0, 1.0, 11):
        lhs = float(np.dot(Z, w[:n] - u)) + lam * move
        rhs = bound_regret_movement_1d(float(u), C, n, eps)
        assert lhs <= rhs + 1e-9, (u, lhs, rhs)
