"""No-skid wheel odometry kinematics.

Forward kinematics recovers the planar body velocity (v_x, v_y, omega_z)
from wheel rolling speeds and steering angles by least squares; inverse
kinematics produces per-wheel steering angle and rolling speed from a known
body velocity. Rolling speed Omega is the signed rate that drives the
contact point along the wheel direction; the left/right gyro sign
convention is applied by the callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError

#: Condition-number limit above which the odometry normal equations are
#: treated as degenerate.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class WheelGeometry:
    """Per-wheel mounting constants.

    Attributes
    ----------
    position : ndarray, shape (3,)
        Hub position in the body frame, m.
    radius : float
        Effective rolling radius, m. Must be positive.
    rho : float
        Distance of the wheel IMU from the hub along the radial axis, m.
    sigma : int
        +1 for left-side wheels, -1 for right-side wheels.
    steerable : bool
        True when the wheel steers about the body z axis.
    """

    position: np.ndarray
    radius: float = 0.295
    rho: float = 0.0
    sigma: int = 1
    steerable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.radius <= 0.0:
            raise ValueError(f"rolling radius must be positive, got {self.radius}")
        if self.rho < 0.0:
            raise ValueError(f"sensor offset rho must be >= 0, got {self.rho}")
        if self.sigma not in (-1, 1):
            raise ValueError(f"side sign must be +1 or -1, got {self.sigma}")


@dataclass
class WheelCommandState:
    """Rolling speed and steering angle of one wheel."""

    rotation_speed: float  # rad/s
    steering_angle: float = 0.0  # rad


def wheel_direction(beta: float) -> np.ndarray:
    """Unit direction of a wheel's rolling motion in the body x-y plane."""
    return np.array([math.cos(beta), math.sin(beta), 0.0])


def build_odometry_matrix(wheels: list[WheelGeometry]) -> np.ndarray:
    """Stack the per-wheel constraint rows relating body velocity to wheel motion.

    Each wheel contributes the two rows [1, 0, -y_i] and [0, 1, x_i] that map
    (v_x, v_y, omega_z) to the wheel contact-point velocity components.

    Parameters
    ----------
    wheels : list of WheelGeometry

    Returns
    -------
    ndarray, shape (2n, 3)
    """
    if not wheels:
        raise ValueError("at least one wheel is required")
    rows = np.zeros((2 * len(wheels), 3))
    for i, w in enumerate(wheels):
        x, y = w.position[0], w.position[1]
        rows[2 * i] = (1.0, 0.0, -y)
        rows[2 * i + 1] = (0.0, 1.0, x)
    return rows


def forward_kinematics(
    wheels: list[WheelGeometry], states: list[WheelCommandState]
) -> np.ndarray:
    """Planar body velocity from wheel speeds and steering angles.

    Solves the stacked no-skid constraints in the least-squares sense via
    the normal equations; with two or more non-collinear wheel constraints
    the 3-unknown system is numerically benign.

    Parameters
    ----------
    wheels, states : matching lists
        Geometry and (rotation_speed, steering_angle) per wheel.

    Returns
    -------
    ndarray, shape (3,)
        (v_x, v_y, omega_z) in the body frame.

    Raises
    ------
    DegenerateGeometryError
        If the normal-equation matrix is ill conditioned (e.g. one wheel).
    """
    if len(wheels) != len(states):
        raise ValueError("wheels and states must have equal length")
    d = build_odometry_matrix(wheels)
    b = np.zeros(2 * len(wheels))
    for i, (w, s) in enumerate(zip(wheels, states)):
        v_roll = s.rotation_speed * w.radius
        b[2 * i] = v_roll * math.cos(s.steering_angle)
        b[2 * i + 1] = v_roll * math.sin(s.steering_angle)
    dtd = d.T @ d
    if np.linalg.cond(dtd) > CONDITION_LIMIT:
        raise DegenerateGeometryError(
            "wheel layout does not determine (v_x, v_y, omega_z); "
            "need >= 2 non-collinear wheel constraints"
        )
    return np.linalg.solve(dtd, d.T @ b)


def inverse_kinematics_steering(
    v_b: np.ndarray,
    omega_z: float,
    wheel: WheelGeometry,
    previous_beta: float = 0.0,
) -> float:
    """Steering angle that aligns a wheel with its contact-point velocity.

    Parameters
    ----------
    v_b : ndarray, shape (3,)
        Body velocity, m/s (only x, y used).
    omega_z : float
        Body yaw rate, rad/s.
    wheel : WheelGeometry
    previous_beta : float
        Returned unchanged when the contact-point velocity is zero and the
        angle is indeterminate.

    Returns
    -------
    float
        Steering angle in radians.
    """
    x, y = wheel.position[0], wheel.position[1]
    num = v_b[1] + omega_z * x
    den = v_b[0] - omega_z * y
    if num == 0.0 and den == 0.0:
        return previous_beta
    return math.atan2(num, den)


def inverse_kinematics_speed(
    v_b: np.ndarray, omega_z: float, beta: float, wheel: WheelGeometry
) -> float:
    """Rolling speed (rad/s) of a wheel given body velocity and steering angle."""
    x, y = wheel.position[0], wheel.position[1]
    return (
        (v_b[0] - omega_z * y) * math.cos(beta) + (v_b[1] + omega_z * x) * math.sin(beta)
    ) / wheel.radius
