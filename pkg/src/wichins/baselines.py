"""Inertial comparison baselines: gyro odometry and naive strapdown.

Three deliberately simple dead-reckoning methods to rank the pipeline
against:

* ODO - planar odometry from two wheel-mounted gyroscopes standing in for
  encoders; heading integrates the least-squares yaw rate.
* WMI - strapdown mechanization of a single wheel-mounted IMU after
  de-rotating the wheel spin with the integrated phase angle.
* CMI - strapdown mechanization of the chassis-mounted IMU.

None of them estimate sensor biases; that is the point of the comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Recording, apply_calibration, calibrate
from .errors import ConfigError, DataError
from .frames import (
    angle_wrap,
    body_to_nav,
    euler_from_matrix,
    skew,
    wheel_phase_rotation,
)
from .kinematics import WheelCommandState, WheelGeometry, forward_kinematics
from .ori_ekf import leveling_init
from .pipeline import NavSolution, VehicleConfig, default_vehicle, vehicle_from_manifest
from .sensors import GRAVITY

LEVELING_WINDOW_S = 2.0


@dataclass
class StrapdownState:
    """Position, velocity (navigation frame) and body-to-nav attitude."""

    pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t_bn: np.ndarray = field(default_factory=lambda: np.eye(3))


def orthonormalize(t: np.ndarray) -> np.ndarray:
    """Gram-Schmidt re-orthogonalization of a near-rotation matrix (columns)."""
    c0 = t[:, 0] / np.linalg.norm(t[:, 0])
    c1 = t[:, 1] - (c0 @ t[:, 1]) * c0
    c1 /= np.linalg.norm(c1)
    c2 = np.cross(c0, c1)
    return np.column_stack([c0, c1, c2])


def strapdown_step(
    state: StrapdownState,
    omega_b: np.ndarray,
    f_b: np.ndarray,
    dt: float,
    gravity: float = GRAVITY,
) -> StrapdownState:
    """One forward-Euler strapdown step (Earth rate and transport rate ignored).

    Position integrates the pre-update velocity; attitude integrates
    first-order with per-step re-orthogonalization.
    """
    accel_n = state.t_bn @ f_b + np.array([0.0, 0.0, gravity])
    pos = state.pos + state.vel * dt
    vel = state.vel + accel_n * dt
    t_bn = orthonormalize(state.t_bn @ (np.eye(3) + skew(omega_b) * dt))
    return StrapdownState(pos, vel, t_bn)


def cmi_step(
    state: StrapdownState,
    omega_b: np.ndarray,
    f_b: np.ndarray,
    dt: float,
    gravity: float = GRAVITY,
) -> StrapdownState:
    """Chassis-IMU strapdown step (alias of the raw mechanization)."""
    return strapdown_step(state, omega_b, f_b, dt, gravity)


def wmi_step(
    state: StrapdownState,
    alpha: float,
    omega_w: np.ndarray,
    f_w: np.ndarray,
    dt: float,
    gravity: float = GRAVITY,
) -> tuple[StrapdownState, float]:
    """Wheel-IMU strapdown step.

    The phase angle integrates the axial gyro; readings are de-rotated into
    the non-spinning wheel-mount frame, the spin rate (already absorbed by
    the de-rotation) is removed from the axial rate, then the standard
    mechanization runs in the mount frame.
    """
    alpha = alpha + omega_w[2] * dt
    t_wb = wheel_phase_rotation(alpha).T  # wheel -> mount frame
    omega_m = t_wb @ omega_w - np.array([0.0, 0.0, omega_w[2]])
    f_m = t_wb @ f_w
    return strapdown_step(state, omega_m, f_m, dt, gravity), alpha


def odo_step(
    psi: float,
    pos: np.ndarray,
    omega_wheel_z: tuple[float, float],
    geoms: tuple[WheelGeometry, WheelGeometry],
    dt: float,
) -> tuple[float, np.ndarray, np.ndarray, float]:
    """One planar odometry step from a pair of axial wheel gyro rates.

    Returns (new heading, new position, body velocity, yaw rate). Position
    integrates with the pre-update heading (forward Euler).
    """
    states = [
        WheelCommandState(g.sigma * wz, 0.0) for g, wz in zip(geoms, omega_wheel_z)
    ]
    v = forward_kinematics(list(geoms), states)
    c, s = math.cos(psi), math.sin(psi)
    vel_n = np.array([v[0] * c - v[1] * s, v[0] * s + v[1] * c, 0.0])
    pos = pos + vel_n * dt
    psi = angle_wrap(psi + v[2] * dt)
    return psi, pos, np.array([v[0], v[1], 0.0]), v[2]


def _prepare(recording: Recording, calibration_window_s: float | None) -> Recording:
    window = calibration_window_s
    if window is None and "calibration_window_s" in recording.manifest:
        window = float(recording.manifest["calibration_window_s"])
    if window:
        recording = apply_calibration(recording, calibrate(recording, window))
    return recording


def _config(recording: Recording, config: VehicleConfig | None) -> VehicleConfig:
    return config or vehicle_from_manifest(recording.manifest) or default_vehicle()


def run_odo(
    recording: Recording,
    config: VehicleConfig | None = None,
    wheel_indices: tuple[int, int] | None = None,
    calibration_window_s: float | None = None,
) -> NavSolution:
    """Two-wheel gyro odometry over a recording; heading starts at zero."""
    config = _config(recording, config)
    recording = _prepare(recording, calibration_window_s)
    if wheel_indices is None:
        fixed = [i for i, w in enumerate(config.wheels) if not w.steerable]
        if len(fixed) < 2:
            raise ConfigError("odometry needs two non-steerable wheels or explicit indices")
        wheel_indices = (fixed[0], fixed[1])
    if max(wheel_indices) >= len(recording.wheels):
        raise DataError(f"recording lacks wheel stream {max(wheel_indices)}")
    geoms = (config.wheels[wheel_indices[0]], config.wheels[wheel_indices[1]])
    streams = [recording.wheels[i] for i in wheel_indices]

    t = streams[0].t
    n = t.size
    sol = _empty_solution(t, {"method": "odo", "wheels": list(wheel_indices)})
    psi, pos = 0.0, np.zeros(3)
    for k in range(1, n):
        dt = t[k] - t[k - 1]
        wz = (streams[0].gyro[k][2], streams[1].gyro[k][2])
        psi_prev = psi
        psi, pos, v_b, yaw_rate = odo_step(psi, pos, wz, geoms, dt)
        sol.pos_n[k] = pos
        sol.vel_b[k] = v_b
        c, s = math.cos(psi_prev), math.sin(psi_prev)
        sol.vel_n[k] = np.array([v_b[0] * c - v_b[1] * s, v_b[0] * s + v_b[1] * c, 0.0])
        sol.euler[k, 2] = psi
        sol.yaw_rate[k] = yaw_rate
    return sol


def run_cmi(
    recording: Recording,
    config: VehicleConfig | None = None,
    calibration_window_s: float | None = None,
) -> NavSolution:
    """Chassis strapdown over a recording, leveled from the first 2 s."""
    config = _config(recording, config)
    recording = _prepare(recording, calibration_window_s)
    chassis = recording.chassis
    return _run_strapdown(
        chassis.t, chassis.gyro, chassis.accel, config.gravity, {"method": "cmi"}
    )


def run_wmi(
    recording: Recording,
    config: VehicleConfig | None = None,
    wheel_index: int | None = None,
    calibration_window_s: float | None = None,
) -> NavSolution:
    """Single wheel-IMU strapdown; defaults to the first non-steerable wheel."""
    config = _config(recording, config)
    recording = _prepare(recording, calibration_window_s)
    if wheel_index is None:
        fixed = [i for i, w in enumerate(config.wheels) if not w.steerable]
        wheel_index = fixed[0] if fixed else 0
    if wheel_index >= len(recording.wheels):
        raise DataError(f"recording lacks wheel stream {wheel_index}")
    stream = recording.wheels[wheel_index]
    t = stream.t
    n = t.size

    # De-rotate the whole series with the integrated phase angle, then run
    # the plain mechanization in the mount frame.
    gyro_m = np.zeros((n, 3))
    accel_m = np.zeros((n, 3))
    alpha = 0.0
    if n:
        gyro_m[0] = stream.gyro[0] - np.array([0.0, 0.0, stream.gyro[0][2]])
        accel_m[0] = stream.accel[0]
    for k in range(1, n):
        dt = t[k] - t[k - 1]
        alpha += stream.gyro[k][2] * dt
        t_wb = wheel_phase_rotation(alpha).T
        gyro_m[k] = t_wb @ stream.gyro[k] - np.array([0.0, 0.0, stream.gyro[k][2]])
        accel_m[k] = t_wb @ stream.accel[k]
    return _run_strapdown(
        t, gyro_m, accel_m, config.gravity, {"method": "wmi", "wheel": wheel_index}
    )


def _empty_solution(t: np.ndarray, diagnostics: dict) -> NavSolution:
    n = t.size
    return NavSolution(
        t=t.copy(),
        pos_n=np.zeros((n, 3)),
        vel_b=np.zeros((n, 3)),
        vel_n=np.zeros((n, 3)),
        euler=np.zeros((n, 3)),
        yaw_rate=np.zeros(n),
        diagnostics=diagnostics,
    )


def _run_strapdown(
    t: np.ndarray,
    gyro: np.ndarray,
    accel: np.ndarray,
    gravity: float,
    diagnostics: dict,
) -> NavSolution:
    n = t.size
    sol = _empty_solution(t, diagnostics)
    if n == 0:
        return sol
    mask = t < t[0] + LEVELING_WINDOW_S
    euler0 = leveling_init(accel[mask] if mask.any() else accel[:1])
    state = StrapdownState(t_bn=body_to_nav(euler0))
    sol.euler[0] = euler0
    sol.yaw_rate[:] = gyro[:, 2]
    for k in range(1, n):
        state = strapdown_step(state, gyro[k], accel[k], t[k] - t[k - 1], gravity)
        sol.pos_n[k] = state.pos
        sol.vel_n[k] = state.vel
        sol.vel_b[k] = state.t_bn.T @ state.vel
        sol.euler[k] = euler_from_matrix(state.t_bn.T)
    return sol
