"""Reference-frame math shared by every estimator in the package.

Conventions (fixed, not configurable):

* Navigation frame (n): NED — x north, y east, z down. Gravity is +z.
* Body frame (b): x forward, y right, z down.
* Wheel frame (w): attached to a wheel-mounted IMU — x radial, y tangential,
  z axial (along the axle).
* Euler angles are ZYX (yaw-pitch-roll), radians: roll about x, pitch about
  y, yaw about z. Ground vehicles keep |pitch| < pi/2, so Euler angles are
  used directly with no quaternion layer.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def angle_wrap(x: float) -> float:
    """Remove whole periods from an angle, mapping it into [-pi, pi).

    Implements ``x - 2*pi*floor((x + pi) / (2*pi))``; odd multiples of pi
    map to -pi.

    Parameters
    ----------
    x : float
        Angle in radians. Must be finite.

    Returns
    -------
    float
        Equivalent angle in [-pi, pi).
    """
    if not math.isfinite(x):
        raise ValueError(f"angle must be finite, got {x}")
    return x - TWO_PI * math.floor((x + math.pi) / TWO_PI)


def wrap_angles(x: np.ndarray, indices) -> np.ndarray:
    """Wrap the listed components of a vector into [-pi, pi), in place."""
    for i in indices:
        x[i] = angle_wrap(x[i])
    return x


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product of two 3-vectors (avoids numpy.cross overhead)."""
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix [v x] such that skew(v) @ u == cross(v, u).

    Parameters
    ----------
    v : ndarray, shape (3,)

    Returns
    -------
    ndarray, shape (3, 3)
        Satisfies S.T == -S.
    """
    vx, vy, vz = v
    return np.array(
        [
            [0.0, -vz, vy],
            [vz, 0.0, -vx],
            [-vy, vx, 0.0],
        ]
    )


def nav_to_body(euler: np.ndarray) -> np.ndarray:
    """Rotation matrix from the navigation frame to the body frame.

    ZYX convention: columns/rows follow from applying yaw, then pitch, then
    roll. The transpose is the body-to-nav matrix.

    Parameters
    ----------
    euler : ndarray, shape (3,)
        (roll, pitch, yaw) in radians.

    Returns
    -------
    ndarray, shape (3, 3)
        Orthonormal, det +1.
    """
    sx, cx = math.sin(euler[0]), math.cos(euler[0])
    sy, cy = math.sin(euler[1]), math.cos(euler[1])
    sz, cz = math.sin(euler[2]), math.cos(euler[2])
    return np.array(
        [
            [cy * cz, cy * sz, -sy],
            [sx * sy * cz - cx * sz, sx * sy * sz + cx * cz, sx * cy],
            [cx * sy * cz + sx * sz, cx * sy * sz - sx * cz, cx * cy],
        ]
    )


def body_to_nav(euler: np.ndarray) -> np.ndarray:
    """Rotation matrix from the body frame to the navigation frame."""
    return nav_to_body(euler).T


def euler_from_matrix(t_nb: np.ndarray) -> np.ndarray:
    """Recover (roll, pitch, yaw) from a nav-to-body rotation matrix.

    Inverse of :func:`nav_to_body` away from the |pitch| = pi/2 singularity;
    pitch is clamped to the valid asin domain to absorb rounding.
    """
    pitch = math.asin(max(-1.0, min(1.0, -t_nb[0, 2])))
    roll = math.atan2(t_nb[1, 2], t_nb[2, 2])
    yaw = math.atan2(t_nb[0, 1], t_nb[0, 0])
    return np.array([roll, pitch, yaw])


def euler_rate_matrix(roll: float, pitch: float) -> np.ndarray:
    """Matrix mapping body angular rates to ZYX Euler-angle rates.

    Singular at |pitch| = pi/2; callers keep pitch inside a guard band.
    """
    sx, cx = math.sin(roll), math.cos(roll)
    sy, cy = math.sin(pitch), math.cos(pitch)
    return np.array(
        [
            [1.0, sx * sy / cy, cx * sy / cy],
            [0.0, cx, -sx],
            [0.0, sx / cy, cx / cy],
        ]
    )


def body_to_wheel(alpha: float, beta: float, sigma: int) -> np.ndarray:
    """Rotation matrix from the body frame to a wheel-IMU frame.

    Parameters
    ----------
    alpha : float
        Wheel phase angle (accumulated rotation about the axle), radians.
    beta : float
        Steering angle about the body z axis, radians (0 for fixed wheels).
    sigma : int
        +1 for wheels on the left side, -1 for wheels on the right side.

    Returns
    -------
    ndarray, shape (3, 3)
        Orthonormal, det +1 for either sigma. Transpose maps wheel to body.
    """
    sa, ca = math.sin(alpha), math.cos(alpha)
    sb, cb = math.sin(beta), math.cos(beta)
    return np.array(
        [
            [cb * ca, sb * ca, sa],
            [-sigma * cb * sa, -sigma * sb * sa, sigma * ca],
            [sigma * sb, -sigma * cb, 0.0],
        ]
    )


def wheel_phase_rotation(alpha: float) -> np.ndarray:
    """Rotation about the axle that removes the wheel's spin phase.

    The single-wheel strapdown baseline uses this to de-rotate wheel IMU
    readings into the non-spinning wheel-mount frame.
    """
    sa, ca = math.sin(alpha), math.cos(alpha)
    return np.array(
        [
            [ca, sa, 0.0],
            [-sa, ca, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )


def roll_pitch_from_accel(f: np.ndarray) -> tuple[float, float]:
    """Coarse-level roll and pitch from a specific-force measurement.

    Assumes the sensor is quasi-static so the reading is dominated by
    gravity; in NED body coordinates a level sensor reads (0, 0, -g).

    Parameters
    ----------
    f : ndarray, shape (3,)
        Specific force in the sensor frame, m/s^2.

    Returns
    -------
    (roll, pitch) : tuple of float, radians.
    """
    roll = math.atan2(-f[1], -f[2])
    pitch = math.atan2(f[0], math.hypot(f[1], f[2]))
    return roll, pitch
