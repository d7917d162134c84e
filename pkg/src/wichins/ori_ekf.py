"""Body-orientation EKF driven by the chassis IMU.

The state is the ZYX Euler triplet (roll, pitch, yaw). Gyro readings
propagate the state through the Euler-rate matrix; the accelerometer
updates roll and pitch through the gravity direction. Yaw is unobservable
without a magnetometer and simply integrates the gyro. The centripetal
term omega x v uses the velocity estimate fed back from the position
filter (one sample late).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ekf
from .frames import cross3, euler_rate_matrix, nav_to_body, roll_pitch_from_accel
from .sensors import DEFAULT_ACCEL_STD, DEFAULT_GYRO_STD, GRAVITY

#: Pitch is clamped this far inside +-pi/2 to stay clear of the Euler-rate
#: singularity (ground vehicles never get close).
PITCH_GUARD_RAD = 0.05


@dataclass
class OriParams:
    """Tuning for the orientation filter.

    ``gyro_noise`` / ``accel_noise`` are per-sample standard deviations.
    ``accel_inflation`` scales the accelerometer noise to absorb unmodeled
    linear acceleration; ``process_scale`` scales the gyro-driven process
    noise.
    """

    gravity: float = GRAVITY
    gyro_noise: float = DEFAULT_GYRO_STD
    accel_noise: float = DEFAULT_ACCEL_STD
    accel_inflation: float = 10.0
    process_scale: float = 4.0
    gate_sigma: float = 6.0

    def __post_init__(self):
        if self.gravity <= 0.0:
            raise ValueError("gravity must be positive")
        if self.gyro_noise <= 0.0 or self.accel_noise <= 0.0:
            raise ValueError("noise standard deviations must be positive")


def expected_body_specific_force(
    euler: np.ndarray, omega_b: np.ndarray, v_b: np.ndarray, gravity: float = GRAVITY
) -> np.ndarray:
    """Specific force a body-frame accelerometer should read.

    Gravity rotated into the body frame plus the centripetal term
    ``omega x v``; a level stationary sensor reads (0, 0, -g).
    """
    return nav_to_body(euler) @ np.array([0.0, 0.0, -gravity]) + cross3(omega_b, v_b)


def _measurement_jacobian(euler: np.ndarray, gravity: float) -> np.ndarray:
    """d(expected specific force)/d(roll, pitch, yaw); the yaw column is zero."""
    sx, cx = math.sin(euler[0]), math.cos(euler[0])
    sy, cy = math.sin(euler[1]), math.cos(euler[1])
    g = gravity
    return np.array(
        [
            [0.0, g * cy, 0.0],
            [-g * cx * cy, g * sx * sy, 0.0],
            [g * sx * cy, g * cx * sy, 0.0],
        ]
    )


def _rate_jacobian(euler: np.ndarray, omega: np.ndarray, dt: float) -> np.ndarray:
    """Transition Jacobian of the Euler-rate propagation."""
    sx, cx = math.sin(euler[0]), math.cos(euler[0])
    sy, cy = math.sin(euler[1]), math.cos(euler[1])
    p, q, r = omega
    u = q * sx + r * cx  # shared sub-expression
    du_dphi = q * cx - r * sx
    ty = sy / cy
    f = np.eye(3)
    f[0, 0] += dt * ty * du_dphi
    f[0, 1] += dt * u / (cy * cy)
    f[1, 0] += dt * (-u)
    f[2, 0] += dt * du_dphi / cy
    f[2, 1] += dt * u * sy / (cy * cy)
    return f


def leveling_init(accel_samples: np.ndarray) -> np.ndarray:
    """Initial Euler angles from averaged quasi-static accelerometer data.

    Roll and pitch come from the mean specific force; yaw starts at zero
    (no absolute heading reference).
    """
    mean_f = np.mean(np.atleast_2d(accel_samples), axis=0)
    roll, pitch = roll_pitch_from_accel(mean_f)
    return np.array([roll, pitch, 0.0])


class OriEkf:
    """Sequential roll/pitch/yaw estimator for one run."""

    ANGLE_INDICES = (0, 1, 2)

    def __init__(
        self,
        params: OriParams | None = None,
        euler0: np.ndarray | None = None,
        cov0: np.ndarray | None = None,
    ):
        self.params = params or OriParams()
        mean = np.zeros(3) if euler0 is None else np.asarray(euler0, dtype=float).copy()
        cov = np.eye(3) * 0.01 if cov0 is None else np.asarray(cov0, dtype=float).copy()
        self.state = ekf.GaussianState(mean, cov)
        sg = self.params.gyro_noise
        self._q_unit = np.eye(3) * (sg * sg) * self.params.process_scale
        sa = self.params.accel_noise
        self._r = np.eye(3) * (sa * sa) * self.params.accel_inflation
        self.gate_count = 0
        self.pitch_saturations = 0

    @property
    def euler(self) -> np.ndarray:
        return self.state.mean

    def nav_to_body_matrix(self) -> np.ndarray:
        return nav_to_body(self.state.mean)

    def predict(self, omega_cal: np.ndarray, dt: float) -> None:
        """Advance the attitude with calibrated gyro rates over ``dt`` seconds."""
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        omega_cal = np.asarray(omega_cal, dtype=float)

        def transition(x: np.ndarray) -> np.ndarray:
            return x + euler_rate_matrix(x[0], x[1]) @ omega_cal * dt

        limit = math.pi / 2.0 - PITCH_GUARD_RAD
        self.state = ekf.predict(
            self.state,
            transition,
            self._q_unit * (dt * dt),
            jacobian=lambda x: _rate_jacobian(x, omega_cal, dt),
            angle_indices=self.ANGLE_INDICES,
        )
        if abs(self.state.mean[1]) > limit:
            self.state.mean[1] = math.copysign(limit, self.state.mean[1])
            self.pitch_saturations += 1

    def update(self, f_cal: np.ndarray, omega_b: np.ndarray, v_b: np.ndarray) -> ekf.UpdateResult:
        """Correct roll/pitch with an accelerometer reading.

        ``v_b`` is the body-velocity estimate from the position filter
        (previous step); innovations beyond the gate are rejected.
        """
        g = self.params.gravity
        omega_b = np.asarray(omega_b, dtype=float)
        v_b = np.asarray(v_b, dtype=float)
        model = ekf.MeasurementModel(
            predict=lambda x: expected_body_specific_force(x, omega_b, v_b, g),
            noise=self._r,
            jacobian=lambda x: _measurement_jacobian(x, g),
        )
        result = ekf.update(
            self.state,
            np.asarray(f_cal, dtype=float),
            model,
            gate_sigma=self.params.gate_sigma,
            angle_indices=self.ANGLE_INDICES,
        )
        if result.gated:
            self.gate_count += 1
        if result.accepted:
            self.state = result.state
        return result
