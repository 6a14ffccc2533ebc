"""Tracking controller: disturbance recovery, ideal-state affine pieces,
chain-rule gradients, and the closed loop."""

from __future__ import annotations

import numpy as np
import pytest

from satrack.control import (
    ControlConstants,
    TrackingController,
    ideal_affine,
    ideal_loss_value_and_grad,
    infer_disturbance,
    norm_tracking_loss,
    theory_memory,
)
from satrack.errors import ActionBoundError
from satrack.simenv import build_plant, make_experiment, target_fn


def naive_ideal_affine(A_hist, B_hist, w_hist):
    """O(H^2) reference: evaluate each product from scratch."""
    H = len(B_hist)
    d_x, d_u = B_hist[-1].shape
    M = np.zeros((d_x, d_u))
    v = np.zeros(d_x)
    for idx in range(H):
        prod = np.eye(d_x)
        for j in range(idx + 1, H):  # rounds after idx
            prod = A_hist[j] @ prod
        M += prod @ B_hist[idx]
        v += prod @ w_hist[idx]
    return M, v


class TestInferDisturbance:
    def test_direct_arithmetic(self):
        w = infer_disturbance(np.array([1.0]), np.array([1.0]), np.array([0.2]),
                              np.array([[0.5]]), np.array([[1.0]]))
        np.testing.assert_allclose(w, [0.3])

    def test_disturbance_free_plant(self):
        rng = np.random.default_rng(0)
        A = np.array([[0.3, 0.1], [0.0, 0.4]])
        B = np.eye(2) * 0.9
        x = rng.normal(size=2)
        u = rng.normal(size=2)
        x_next = A @ x + B @ u
        np.testing.assert_allclose(infer_disturbance(x_next, x, u, A, B),
                                   np.zeros(2), atol=1e-10)

    def test_identity_dynamics(self):
        w = infer_disturbance(np.array([1.5, 0.5]), np.zeros(2),
                              np.array([1.0, 1.0]), np.zeros((2, 2)), np.eye(2))
        np.testing.assert_allclose(w, [0.5, -0.5])


class TestIdealAffine:
    def test_scalar_two_step(self):
        A = [np.array([[0.5]])] * 2
        B = [np.array([[1.0]])] * 2
        w = [np.zeros(1)] * 2
        M, v = ideal_affine(A, B, w)
        assert M[0, 0] == pytest.approx(1.5)  # 1 + 0.5
        assert v[0] == 0.0

    def test_single_step_empty_product(self):
        A = [np.array([[0.9]])]
        B = [np.array([[0.7]])]
        w = [np.array([0.3])]
        M, v = ideal_affine(A, B, w)
        assert M[0, 0] == 0.7
        assert v[0] == 0.3

    def test_three_step_with_disturbance(self):
        # frozen from the O(H^2) reference oracle
        A = [np.array([[0.5]])] * 3
        B = [np.array([[1.0]])] * 3
        w = [np.array([0.1])] * 3
        M, v = ideal_affine(A, B, w)
        Mn, vn = naive_ideal_affine(A, B, w)
        assert M[0, 0] == pytest.approx(1.75)
        assert v[0] == pytest.approx(0.175)
        np.testing.assert_allclose(M, Mn)
        np.testing.assert_allclose(v, vn)

    def test_matches_naive_oracle_on_random_matrices(self, rng):
        for _ in range(25):
            H = int(rng.integers(1, 9))
            d_x = int(rng.integers(1, 4))
            d_u = int(rng.integers(1, 4))
            A = [rng.normal(size=(d_x, d_x)) * 0.4 for _ in range(H)]
            B = [rng.normal(size=(d_x, d_u)) for _ in range(H)]
            w = [rng.normal(size=d_x) for _ in range(H)]
            M, v = ideal_affine(A, B, w)
            Mn, vn = naive_ideal_affine(A, B, w)
            np.testing.assert_allclose(M, Mn, atol=1e-12)
            np.testing.assert_allclose(v, vn, atol=1e-12)


class TestIdealLossGrad:
    def test_scalar_chain_rule(self):
        loss = norm_tracking_loss(lambda t: np.zeros(1), d_u=1)
        val, grad = ideal_loss_value_and_grad(
            np.array([1.0]), np.array([[1.5]]), np.zeros(1), loss, 1, U=5.0)
        assert val == pytest.approx(1.5)
        np.testing.assert_allclose(grad, [1.5])

    def test_kink_convention_zero(self):
        loss = norm_tracking_loss(lambda t: np.array([3.0]), d_u=1)
        val, grad = ideal_loss_value_and_grad(
            np.array([2.0]), np.array([[1.5]]), np.zeros(1), loss, 1, U=5.0)
        assert val == pytest.approx(0.0)
        np.testing.assert_allclose(grad, [0.0])

    def test_two_dim_matches_finite_differences(self):
        loss = norm_tracking_loss(lambda t: np.array([3.0, 0.0]), d_u=2)
        M = np.eye(2) * 1.5
        u = np.zeros(2)
        val, grad = ideal_loss_value_and_grad(u, M, np.zeros(2), loss, 1, U=5.0)
        assert val == pytest.approx(3.0)
        np.testing.assert_allclose(grad, [-1.5, 0.0])
        h = 1e-6
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            up, _ = ideal_loss_value_and_grad(u + e, M, np.zeros(2), loss, 1, U=5.0)
            dn, _ = ideal_loss_value_and_grad(u - e, M, np.zeros(2), loss, 1, U=5.0)
            assert grad[i] == pytest.approx((up - dn) / (2 * h), rel=1e-6)

    def test_action_bound(self):
        loss = norm_tracking_loss(lambda t: np.zeros(1), d_u=1)
        with pytest.raises(ActionBoundError):
            ideal_loss_value_and_grad(np.array([6.0]), np.eye(1), np.zeros(1),
                                      loss, 1, U=5.0)


class TestConstants:
    def test_paper_scale_memory(self):
        assert theory_memory(20000, 0.4) == 20

    def test_derived_lipschitz(self):
        c = ControlConstants(kappa=1.0, gamma=0.4, U=5.0, W=0.05, L_star=1.0,
                             T=20000)
        assert c.G_tilde == pytest.approx(5.0)
        assert c.L == 1.0
        assert c.memory == 20

    def test_memory_override(self):
        c = ControlConstants(kappa=1.0, gamma=0.4, U=5.0, W=0.05, L_star=1.0,
                             T=20000, H=8)
        assert c.memory == 8

    def test_validation(self):
        with pytest.raises(ValueError):
            ControlConstants(kappa=0.5, gamma=0.4, U=5.0, W=0.0, L_star=1.0, T=10)
        with pytest.raises(ValueError):
            ControlConstants(kappa=1.0, gamma=1.5, U=5.0, W=0.0, L_star=1.0, T=10)


def test_closed_loop_recovers_disturbances_and_respects_bounds():
    config = make_experiment("control-1d-step")
    config.T = 400
    plant = build_plant(config)
    constants = ControlConstants(kappa=config.kappa, gamma=config.gamma_margin,
                                 U=config.U, W=config.W, L_star=config.L_star,
                                 T=config.T, H=config.H)
    loss = norm_tracking_loss(target_fn(config), plant.d_u)
    ctrl = TrackingController(constants, plant.A_fn, plant.B_fn, loss,
                              plant.d_x, plant.d_u, eps0=config.eps0)

    x = plant.step(np.zeros(1))
    for t in range(1, config.T + 1):
        u = ctrl.action(x)
        assert np.linalg.norm(u) <= config.U + 1e-9
        assert np.linalg.norm(x) <= constants.state_bound + 1e-9
        w_true = plant.w_fn(t - 1)
        np.testing.assert_allclose(ctrl.last_w, np.atleast_1d(w_true), atol=1e-10)
        y = ctrl.ideal_state()
        f_val = loss.value(y, u, t)
        true_val = loss.value(x, u, t)
        assert abs(f_val - true_val) <= constants.truncation_bound + 1e-9
        ctrl.observe_loss()
        x = plant.step(u)
    assert not plant.bound_violations


def test_predict_then_observe_ordering():
    config = make_experiment("control-1d-step")
    config.T = 10
    plant = build_plant(config)
    constants = ControlConstants(kappa=1.0, gamma=0.4, U=5.0, W=0.05,
                                 L_star=1.0, T=10, H=4)
    loss = norm_tracking_loss(target_fn(config), 1)
    ctrl = TrackingController(constants, plant.A_fn, plant.B_fn, loss, 1, 1)
    with pytest.raises(RuntimeError):
        ctrl.observe_loss()
