import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wichins.errors import ConfigError
from wichins.kinematics import WheelGeometry
from wichins.pipeline import default_vehicle
from wichins.sensors import GRAVITY
from wichins.simulate import (
    NoiseSpec,
    Segment,
    SkidEvent,
    TrajectorySpec,
    circle_spec,
    generate_ground_truth,
    simulate_recording,
    straight_spec,
    synthesize_chassis_imu,
    synthesize_wheel_imu,
    wheel_truth,
)


class TestGroundTruth:
    def test_straight_distance(self):
        spec = TrajectorySpec([Segment(10.0, 0.0, 5.0, 5.0)])
        gt = generate_ground_truth(spec)
        assert_allclose(gt.pos[-1], [50.0, 0.0, 0.0], atol=1e-9)

    def test_circle_rates(self):
        spec = TrajectorySpec([Segment(40.0, 5.0 / 20.0, 5.0, 5.0)])
        gt = generate_ground_truth(spec)
        assert_allclose(gt.omega_b[:, 2], 0.25)
        assert_allclose(np.linalg.norm(gt.accel_n, axis=1), 1.25, atol=1e-12)

    def test_zero_speed_all_zero_dynamics(self):
        gt = generate_ground_truth(TrajectorySpec([Segment(5.0, 0.0, 0.0, 0.0)]))
        assert_allclose(gt.pos, 0.0)
        assert_allclose(gt.vel_n, 0.0)
        assert_allclose(gt.accel_n, 0.0)
        assert_allclose(gt.omega_b, 0.0)

    def test_position_derivative_matches_velocity(self):
        spec = circle_spec(radius=15.0, speed=4.0, cruise_s=20.0, dwell_s=2.0, ramp_s=2.0)
        gt = generate_ground_truth(spec)
        dt = np.diff(gt.t)
        v_mid = 0.5 * (gt.vel_n[1:] + gt.vel_n[:-1])
        dr = np.diff(gt.pos, axis=0)
        err = np.linalg.norm(dr - v_mid * dt[:, None], axis=1)
        # midpoint rule error is O(dt^3) per step for smooth segments
        assert err.max() < 1e-6 * max(1.0, np.abs(gt.speed).max())

    def test_speed_discontinuity_rejected(self):
        spec = TrajectorySpec([Segment(1.0, 0.0, 0.0, 2.0), Segment(1.0, 0.0, 5.0, 5.0)])
        with pytest.raises(ConfigError):
            generate_ground_truth(spec)

    def test_empty_spec_rejected(self):
        with pytest.raises(ConfigError):
            generate_ground_truth(TrajectorySpec([]))

    def test_closed_circle_returns_to_start(self):
        # 25 s lap so the final sample lands exactly on the closure point
        w = 2 * math.pi / 25.0
        spec = TrajectorySpec([Segment(25.0, w, 5.0, 5.0)])
        gt = generate_ground_truth(spec)
        assert np.linalg.norm(gt.pos[-1] - gt.pos[0]) < 1e-8


class TestChassisSynthesis:
    def test_stationary_reads_minus_g(self):
        gt = generate_ground_truth(TrajectorySpec([Segment(2.0, 0.0, 0.0, 0.0)]))
        series = synthesize_chassis_imu(gt, NoiseSpec.off(0))
        assert_allclose(series.gyro, 0.0)
        assert_allclose(series.accel - [0.0, 0.0, -GRAVITY], 0.0, atol=1e-12)

    def test_circle_roundtrip_through_orientation_model(self):
        from wichins.ori_ekf import expected_body_specific_force

        spec = TrajectorySpec([Segment(10.0, 0.25, 5.0, 5.0)])
        gt = generate_ground_truth(spec)
        series = synthesize_chassis_imu(gt, NoiseSpec.off(0))
        for k in range(0, len(gt.t), 100):
            model = expected_body_specific_force(
                gt.euler[k], gt.omega_b[k], gt.vel_b[k], GRAVITY
            )
            assert_allclose(series.accel[k], model, atol=1e-10)
        # lateral specific force magnitude is the centripetal acceleration
        assert abs(abs(series.accel[0, 1]) - 1.25) < 1e-9

    def test_table_noise_per_sample_sigma(self):
        # density * sqrt(rate): gyro 1.338e-3 rad/s, accel 1.289e-2 m/s^2
        gt = generate_ground_truth(
            TrajectorySpec([Segment(90.0, 0.0, 0.0, 0.0)])
        )
        series = synthesize_chassis_imu(gt, NoiseSpec(seed=3))
        gyro_std = series.gyro.std(axis=0).mean()
        accel_std = series.accel.std(axis=0).mean()
        assert gyro_std == pytest.approx(1.338e-3, rel=0.02)
        assert accel_std == pytest.approx(1.289e-2, rel=0.02)


class TestWheelSynthesis:
    def test_straight_rolling_axial_rate(self):
        spec = TrajectorySpec([Segment(5.0, 0.0, 5.0, 5.0)])
        gt = generate_ground_truth(spec)
        for sigma, y in ((1, -0.73), (-1, 0.73)):
            g = WheelGeometry(np.array([0.0, y, 0.0]), 0.295, 0.0, sigma, False)
            series, truth = synthesize_wheel_imu(gt, g, NoiseSpec.off(0))
            assert_allclose(series.gyro[:, 2], sigma * 16.949, atol=1e-2)
            assert_allclose(truth.omega, 5.0 / 0.295)

    def test_stationary_wheel_gravity_at_phase_zero(self):
        gt = generate_ground_truth(TrajectorySpec([Segment(2.0, 0.0, 0.0, 0.0)]))
        g = WheelGeometry(np.array([0.0, -0.73, 0.0]), 0.295, 0.0, 1, False)
        series, _ = synthesize_wheel_imu(gt, g, NoiseSpec.off(0), gravity=9.80665)
        assert_allclose(series.accel[0], [0.0, -9.80665, 0.0], atol=1e-12)

    def test_skid_scales_axial_gyro_only(self):
        spec = TrajectorySpec([Segment(10.0, 0.0, 5.0, 5.0)])
        gt = generate_ground_truth(spec)
        g = WheelGeometry(np.array([0.0, -0.73, 0.0]), 0.295, 0.0, 1, False)
        clean, _ = synthesize_wheel_imu(gt, g, NoiseSpec.off(0))
        skid, _ = synthesize_wheel_imu(
            gt, g, NoiseSpec.off(0), skid_events=(SkidEvent(0, 3.0, 4.0, 0.2),)
        )
        mask = (gt.t >= 3.0) & (gt.t <= 4.0)
        assert_allclose(skid.gyro[mask, 2], 1.2 * clean.gyro[mask, 2])
        assert_allclose(skid.gyro[~mask], clean.gyro[~mask])
        assert_allclose(skid.accel, clean.accel)

    def test_nonsteerable_off_axle_rejected_when_turning(self):
        spec = TrajectorySpec([Segment(10.0, 0.2, 5.0, 5.0)])
        gt = generate_ground_truth(spec)
        g = WheelGeometry(np.array([1.0, -0.73, 0.0]), 0.295, 0.0, 1, False)
        with pytest.raises(ConfigError):
            wheel_truth(gt, g)

    def test_front_wheel_steering_consistency(self):
        spec = TrajectorySpec([Segment(10.0, 0.21, 4.2, 4.2)])
        gt = generate_ground_truth(spec)
        g = WheelGeometry(np.array([2.62, -0.73, 0.0]), 0.295, 0.0, 1, True)
        truth = wheel_truth(gt, g)
        expected_beta = math.atan2(0.21 * 2.62, 4.2 - 0.21 * (-0.73))
        assert_allclose(truth.beta, expected_beta, atol=1e-12)
        assert_allclose(truth.beta_dot, 0.0, atol=1e-9)


class TestReproducibility:
    def test_same_seed_bitwise_identical(self):
        spec = straight_spec(speed=3.0, cruise_s=5.0, dwell_s=2.0, ramp_s=1.0)
        veh = default_vehicle()
        a = simulate_recording(spec, veh.wheels, NoiseSpec(seed=99))
        b = simulate_recording(spec, veh.wheels, NoiseSpec(seed=99))
        assert np.array_equal(a.chassis.accel, b.chassis.accel)
        assert np.array_equal(a.chassis.gyro, b.chassis.gyro)
        for wa, wb in zip(a.wheels, b.wheels):
            assert np.array_equal(wa.gyro, wb.gyro)
            assert np.array_equal(wa.accel, wb.accel)

    def test_different_sensors_get_independent_streams(self):
        spec = straight_spec(speed=3.0, cruise_s=5.0, dwell_s=2.0, ramp_s=1.0)
        veh = default_vehicle()
        rec = simulate_recording(spec, veh.wheels, NoiseSpec(seed=99))
        assert not np.array_equal(rec.wheels[0].gyro, rec.wheels[1].gyro)

    def test_noise_statistics_match_sigma_over_1e6_samples(self):
        # 2778 s at 120 Hz: > 1e6 scalar noise draws over the three axes
        rng_spec = TrajectorySpec([Segment(2778.0, 0.0, 0.0, 0.0)], rate_hz=120.0)
        gt = generate_ground_truth(rng_spec)
        noise = NoiseSpec(seed=5)
        series = synthesize_chassis_imu(gt, noise)
        sigma = noise.gyro_density * math.sqrt(120.0)
        assert 3 * gt.t.size >= 1_000_000
        for axis in range(3):
            assert series.gyro[:, axis].std() == pytest.approx(sigma, rel=0.02)

    def test_noise_spec_rejects_negative(self):
        with pytest.raises(ConfigError):
            NoiseSpec(gyro_density=-1.0)

    def test_ground_truth_downsampled_to_5hz(self):
        spec = straight_spec(speed=3.0, cruise_s=5.0, dwell_s=2.0, ramp_s=1.0)
        rec = simulate_recording(spec, default_vehicle().wheels, NoiseSpec.off(0))
        dt = np.diff(rec.ground_truth.t)
        assert_allclose(dt, 0.2, atol=1e-12)
