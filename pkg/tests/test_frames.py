import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wichins.frames import (
    angle_wrap,
    body_to_nav,
    body_to_wheel,
    cross3,
    euler_from_matrix,
    euler_rate_matrix,
    nav_to_body,
    roll_pitch_from_accel,
    skew,
    wheel_phase_rotation,
)


class TestAngleWrap:
    def test_in_range_unchanged(self):
        assert angle_wrap(math.pi / 2) == math.pi / 2

    def test_full_period_removed(self):
        assert angle_wrap(2 * math.pi) == pytest.approx(0.0, abs=1e-15)

    def test_odd_multiple_of_pi_maps_to_minus_pi(self):
        # 3*pi - 2*pi*floor(4*pi / 2*pi) = 3*pi - 4*pi = -pi
        assert angle_wrap(3 * math.pi) == pytest.approx(-math.pi)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            angle_wrap(float("nan"))
        with pytest.raises(ValueError):
            angle_wrap(float("inf"))

    def test_idempotent_and_periodic(self):
        rng = np.random.default_rng(0)
        for x in rng.uniform(-100, 100, 500):
            w = angle_wrap(x)
            assert -math.pi <= w < math.pi
            assert angle_wrap(w) == w
            for k in (-3, -1, 1, 5):
                assert angle_wrap(x + 2 * math.pi * k) == pytest.approx(w, abs=1e-9)


class TestSkew:
    def test_zero(self):
        assert_allclose(skew(np.zeros(3)), np.zeros((3, 3)))

    def test_z_cross_x_is_y(self):
        assert_allclose(skew(np.array([0, 0, 1.0])) @ np.array([1.0, 0, 0]), [0, 1, 0])

    def test_hand_cross_product(self):
        out = skew(np.array([1.0, 2, 3])) @ np.array([4.0, 5, 6])
        assert_allclose(out, [-3, 6, -3])

    def test_antisymmetric_and_matches_cross(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            v, u = rng.standard_normal(3), rng.standard_normal(3)
            s = skew(v)
            assert_allclose(s + s.T, np.zeros((3, 3)), atol=0)
            assert_allclose(s @ u, np.cross(v, u), atol=1e-14)
            assert_allclose(cross3(v, u), np.cross(v, u), atol=1e-14)


class TestNavToBody:
    def test_identity_at_zero(self):
        assert_allclose(nav_to_body(np.zeros(3)), np.eye(3))

    def test_yaw_90_maps_north_to_minus_y(self):
        t = nav_to_body(np.array([0.0, 0.0, math.pi / 2]))
        assert_allclose(t @ np.array([1.0, 0, 0]), [0, -1, 0], atol=1e-15)

    def test_orthonormal_at_sample_attitude(self):
        t = nav_to_body(np.array([0.1, 0.2, 0.3]))
        assert_allclose(t.T @ t, np.eye(3), atol=1e-12)

    def test_random_rotations_orthonormal_det_one(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            e = rng.uniform(-math.pi, math.pi, 3)
            e[1] = rng.uniform(-1.4, 1.4)  # stay clear of pitch singularity
            t = nav_to_body(e)
            assert_allclose(t.T @ t, np.eye(3), atol=1e-12)
            assert np.linalg.det(t) == pytest.approx(1.0, abs=1e-12)

    def test_transpose_inverts(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            e = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3)])
            v = rng.standard_normal(3)
            t = nav_to_body(e)
            assert_allclose(t.T @ (t @ v), v, atol=1e-10)
            assert_allclose(body_to_nav(e), t.T)

    def test_euler_roundtrip(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            e = np.array(
                [rng.uniform(-3, 3), rng.uniform(-1.4, 1.4), rng.uniform(-3, 3)]
            )
            assert_allclose(euler_from_matrix(nav_to_body(e)), e, atol=1e-12)


class TestBodyToWheel:
    def test_reference_orientation_rows(self):
        t = body_to_wheel(0.0, 0.0, 1)
        assert_allclose(t, [[1, 0, 0], [0, 0, 1], [0, -1, 0]], atol=0)

    def test_gravity_maps_to_tangential_axis(self):
        f_w = body_to_wheel(0.0, 0.0, 1) @ np.array([0.0, 0.0, -9.81])
        assert_allclose(f_w, [0.0, -9.81, 0.0], atol=1e-15)

    def test_orthonormer_any_angles(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            sigma = int(rng.choice([-1, 1]))
            t = body_to_wheel(rng.uniform(-4, 4), rng.uniform(-4, 4), sigma)
            assert_allclose(t.T @ t, np.eye(3), atol=1e-12)
            assert np.linalg.det(t) == pytest.approx(1.0, abs=1e-12)

    def test_transpose_is_wheel_to_body(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            t = body_to_wheel(rng.uniform(-3, 3), rng.uniform(-3, 3), -1)
            v = rng.standard_normal(3)
            assert_allclose(t.T @ (t @ v), v, atol=1e-12)


class TestWheelPhaseRotation:
    def test_identity_at_zero(self):
        assert_allclose(wheel_phase_rotation(0.0), np.eye(3))

    def test_quarter_turn(self):
        assert_allclose(
            wheel_phase_rotation(math.pi / 2) @ np.array([1.0, 0, 0]),
            [0, -1, 0],
            atol=1e-15,
        )

    def test_composition_group_property(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            a, b = rng.uniform(-5, 5, 2)
            assert_allclose(
                wheel_phase_rotation(a) @ wheel_phase_rotation(b),
                wheel_phase_rotation(a + b),
                atol=1e-12,
            )


class TestLeveling:
    def test_recovers_roll_pitch_from_gravity(self):
        rng = np.random.default_rng(8)
        g = 9.80665
        for _ in range(100):
            roll, pitch = rng.uniform(-1.2, 1.2, 2)
            f = nav_to_body(np.array([roll, pitch, rng.uniform(-3, 3)])) @ np.array(
                [0.0, 0.0, -g]
            )
            r, p = roll_pitch_from_accel(f)
            assert r == pytest.approx(roll, abs=1e-12)
            assert p == pytest.approx(pitch, abs=1e-12)


class TestEulerRateMatrix:
    def test_identity_at_level(self):
        assert_allclose(euler_rate_matrix(0.0, 0.0), np.eye(3))

    def test_pitch_45_couples_yaw_rate(self):
        m = euler_rate_matrix(0.0, math.pi / 4)
        rates = m @ np.array([0.0, 0.0, 1.0])
        assert rates[0] == pytest.approx(1.0)  # tan(pi/4)
        assert rates[2] == pytest.approx(math.sqrt(2.0))  # 1/cos(pi/4)
