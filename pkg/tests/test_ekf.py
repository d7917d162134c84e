import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wichins import ekf
from wichins.errors import DivergenceError
from wichins.frames import nav_to_body


class TestNumericJacobian:
    def test_identity(self):
        jac = ekf.numeric_jacobian(lambda x: x, np.array([1.0, -2.0]))
        assert_allclose(jac, np.eye(2), atol=1e-9)

    def test_simple_nonlinear(self):
        jac = ekf.numeric_jacobian(
            lambda x: np.array([x[0] ** 2, x[1]]), np.array([3.0, 1.0])
        )
        assert_allclose(jac, [[6.0, 0.0], [0.0, 1.0]], atol=1e-6)

    def test_rotation_composition_matches_analytic(self):
        # d/d(euler) of T_bn(euler) @ v0 via the closed-form column derivatives
        v0 = np.array([0.3, -0.2, 1.1])
        e0 = np.array([0.1, 0.2, 0.3])

        def f(e):
            return nav_to_body(e) @ v0

        num = ekf.numeric_jacobian(f, e0)
        h = 1e-7
        ana = np.zeros((3, 3))
        for j in range(3):
            ep, em = e0.copy(), e0.copy()
            ep[j] += h
            em[j] -= h
            ana[:, j] = (f(ep) - f(em)) / (2 * h)
        assert_allclose(num, ana, atol=1e-5)

    def test_non_finite_probe_raises(self):
        def bad(x):
            return np.array([math.sqrt(x[0])])  # NaN below zero

        with pytest.raises((DivergenceError, ValueError)):
            ekf.numeric_jacobian(bad, np.array([0.0]))


class TestPredict:
    def test_identity_transition_no_noise(self):
        state = ekf.GaussianState(np.array([1.0, 2.0]), np.diag([0.5, 0.5]))
        out = ekf.predict(state, lambda x: x, np.zeros((2, 2)))
        assert_allclose(out.mean, state.mean)
        assert_allclose(out.cov, state.cov, atol=1e-12)

    def test_scalar_riccati(self):
        state = ekf.GaussianState(np.array([1.0]), np.array([[1.0]]))
        out = ekf.predict(state, lambda x: 2.0 * x, np.zeros((1, 1)))
        assert out.mean[0] == pytest.approx(2.0)
        assert out.cov[0, 0] == pytest.approx(4.0, abs=1e-9)

    def test_covariance_symmetric_psd(self):
        rng = np.random.default_rng(20)
        for _ in range(50):
            a = rng.standard_normal((3, 3))
            p = a @ a.T + 0.1 * np.eye(3)
            q = np.diag(rng.uniform(0, 0.1, 3))
            state = ekf.GaussianState(rng.standard_normal(3), p)
            out = ekf.predict(state, lambda x: np.sin(x), q)
            assert ekf.is_psd(out.cov)

    def test_non_finite_transition_raises(self):
        state = ekf.GaussianState(np.ones(1), np.eye(1))
        with pytest.raises(DivergenceError), np.errstate(invalid="ignore"):
            ekf.predict(state, lambda x: x * np.inf, np.zeros((1, 1)))


class TestUpdate:
    def test_zero_innovation_keeps_mean_shrinks_cov(self):
        state = ekf.GaussianState(np.array([1.5]), np.array([[2.0]]))
        model = ekf.MeasurementModel(lambda x: x.copy(), np.array([[1.0]]))
        out = ekf.update(state, np.array([1.5]), model)
        assert out.accepted
        assert_allclose(out.state.mean, [1.5])
        assert out.state.cov[0, 0] < 2.0

    def test_scalar_kalman_by_hand(self):
        state = ekf.GaussianState(np.array([0.0]), np.array([[1.0]]))
        model = ekf.MeasurementModel(lambda x: x.copy(), np.array([[1.0]]))
        out = ekf.update(state, np.array([2.0]), model)
        assert out.state.mean[0] == pytest.approx(1.0)
        assert out.state.cov[0, 0] == pytest.approx(0.5)

    def test_uninformative_measurement(self):
        state = ekf.GaussianState(np.array([3.0]), np.array([[1.0]]))
        model = ekf.MeasurementModel(lambda x: x.copy(), np.array([[1e12]]))
        out = ekf.update(state, np.array([100.0]), model)
        assert out.state.mean[0] == pytest.approx(3.0, abs=1e-6)

    def test_gate_rejects_outlier(self):
        state = ekf.GaussianState(np.array([0.0]), np.array([[1.0]]))
        model = ekf.MeasurementModel(lambda x: x.copy(), np.array([[1.0]]))
        out = ekf.update(state, np.array([100.0]), model, gate_sigma=6.0)
        assert out.gated and not out.accepted
        assert_allclose(out.state.mean, state.mean)

    def test_singular_innovation_skipped(self):
        state = ekf.GaussianState(np.zeros(1), np.zeros((1, 1)))
        model = ekf.MeasurementModel(lambda x: x.copy(), np.zeros((1, 1)))
        out = ekf.update(state, np.array([1.0]), model)
        assert not out.accepted and not out.gated

    def test_angle_innovation_wrapped(self):
        # measurement just past -pi should pull a mean near +pi forward, not
        # across the whole circle
        state = ekf.GaussianState(np.array([3.0]), np.array([[0.05]]))
        model = ekf.MeasurementModel(
            lambda x: x.copy(), np.array([[0.05]]), angle_indices=(0,)
        )
        out = ekf.update(state, np.array([-3.1]), model, angle_indices=(0,))
        # wrapped innovation is 2*pi - 6.1 = +0.183, applied with gain 0.5
        expected = 3.0 + 0.5 * (2 * math.pi - 6.1)
        assert out.state.mean[0] == pytest.approx(expected, abs=1e-9)
        assert -math.pi <= out.state.mean[0] < math.pi


class TestAgainstClosedFormKalman:
    def test_linear_gaussian_matches_oracle(self):
        # independent closed-form KF for x' = a x + w, z = h x + v
        rng = np.random.default_rng(21)
        a, h, q, r = 0.97, 1.3, 0.02, 0.5
        x_mean, p = 0.4, 1.0
        state = ekf.GaussianState(np.array([x_mean]), np.array([[p]]))
        model = ekf.MeasurementModel(
            lambda x: np.array([h * x[0]]), np.array([[r]]),
            jacobian=lambda x: np.array([[h]]),
        )
        for _ in range(100):
            z = rng.standard_normal()
            # oracle
            x_mean, p = a * x_mean, a * p * a + q
            k = p * h / (h * p * h + r)
            x_mean = x_mean + k * (z - h * x_mean)
            p = (1 - k * h) ** 2 * p + k * r * k
            # engine
            state = ekf.predict(
                state, lambda x: a * x, np.array([[q]]), jacobian=lambda x: np.array([[a]])
            )
            state = ekf.update(state, np.array([z]), model).state
            assert state.mean[0] == pytest.approx(x_mean, abs=1e-9)
            assert state.cov[0, 0] == pytest.approx(p, abs=1e-9)

    def test_trace_monotonic(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            n = 3
            a_mat = rng.standard_normal((n, n))
            p0 = a_mat @ a_mat.T + 0.5 * np.eye(n)
            state = ekf.GaussianState(rng.standard_normal(n), p0)
            q = np.diag(rng.uniform(0.01, 0.1, n))
            pred = ekf.predict(state, lambda x: x, q, jacobian=lambda x: np.eye(n))
            assert np.trace(pred.cov) >= np.trace(state.cov)
            model = ekf.MeasurementModel(
                lambda x: x.copy(), np.eye(n) * 0.5, jacobian=lambda x: np.eye(n)
            )
            upd = ekf.update(pred, rng.standard_normal(n), model)
            assert np.trace(upd.state.cov) <= np.trace(pred.cov) + 1e-12
