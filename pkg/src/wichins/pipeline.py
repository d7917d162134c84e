"""Three-stage estimation pipeline and its run-level containers.

Per IMU epoch the stages execute in a fixed order: wheel-filter predict,
orientation predict + accelerometer update, wheel-filter accelerometer
update, velocity predict from fused wheel accelerometers, wheel-gyro
velocity update, forward-Euler position integration. Parameters flow
between stages exactly once per step (the orientation update consumes the
previous step's velocity estimate).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    Recording,
    apply_calibration,
    calibrate,
)
from .errors import ConfigError, DataError
from .frames import body_to_nav, nav_to_body
from .kinematics import WheelGeometry
from .ori_ekf import OriEkf, OriParams, leveling_init
from .pos_ekf import (
    PosEkf,
    PosParams,
    compensate_wheel_accel,
    fuse_wheel_accels,
    fusion_weights,
    linear_and_forward_accel,
)
from .sensors import (
    DEFAULT_ACCEL_DENSITY,
    DEFAULT_GYRO_DENSITY,
    GRAVITY,
    per_sample_std,
)
from .wheel_ekf import WheelEkfParams, WheelFilterBank

#: Streams must agree on epochs within this tolerance (seconds).
SYNC_TOLERANCE_S = 2e-3

#: Seconds of initial accelerometer data used for coarse leveling.
LEVELING_WINDOW_S = 2.0


@dataclass
class VehicleConfig:
    """Wheel layout and chassis-IMU mounting for one vehicle.

    The chassis mount rotation is applied to the IMU readings; the mount
    position is carried for completeness but has no effect at the modeled
    fidelity (lever-arm accelerations are neglected like the other
    angular-acceleration terms).
    """

    wheels: list[WheelGeometry]
    gravity: float = GRAVITY
    chassis_mount_euler: np.ndarray = field(default_factory=lambda: np.zeros(3))
    chassis_mount_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    two_wheel_indices: tuple[int, ...] | None = None  # override for the 2-wheel mode


def default_vehicle(
    wheelbase: float = 2.62,
    track: float = 1.46,
    radius: float = 0.295,
    rho: float = 0.0,
) -> VehicleConfig:
    """Four-wheel passenger-car layout, body origin at the rear-axle center.

    Wheel order: front-left, front-right, rear-left, rear-right. Fronts are
    steerable; rears sit on the origin axle so fixed wheels roll without
    lateral slip.
    """
    half = track / 2.0
    wheels = [
        WheelGeometry(np.array([wheelbase, -half, 0.0]), radius, rho, +1, True),
        WheelGeometry(np.array([wheelbase, half, 0.0]), radius, rho, -1, True),
        WheelGeometry(np.array([0.0, -half, 0.0]), radius, rho, +1, False),
        WheelGeometry(np.array([0.0, half, 0.0]), radius, rho, -1, False),
    ]
    return VehicleConfig(wheels)


def vehicle_from_manifest(manifest: dict[str, str]) -> VehicleConfig | None:
    """Vehicle configuration declared in a recording manifest, if any."""
    from .dataset import wheel_geometry_from_manifest

    wheels = wheel_geometry_from_manifest(manifest)
    if not wheels:
        return None
    return VehicleConfig(wheels, gravity=float(manifest.get("gravity", GRAVITY)))


def select_wheels(config: VehicleConfig, mode: str) -> list[int]:
    """Active wheel indices for a pipeline mode.

    ``"2w"`` picks the non-steerable pair (conventionally the rear axle)
    unless the config overrides it; ``"4w"`` uses every wheel.
    """
    mode = mode.lower()
    if mode in ("4w", "4wichins"):
        if len(config.wheels) < 2:
            raise ConfigError("4-wheel mode needs at least 2 configured wheels")
        return list(range(len(config.wheels)))
    if mode in ("2w", "2wichins"):
        if config.two_wheel_indices is not None:
            idx = list(config.two_wheel_indices)
        else:
            idx = [i for i, w in enumerate(config.wheels) if not w.steerable]
        if len(idx) < 2:
            raise ConfigError(
                f"2-wheel mode needs two non-steerable wheels or an override, got {idx}"
            )
        return idx[:2]
    raise ConfigError(f"unknown mode {mode!r}; expected '2w' or '4w'")


@dataclass
class PipelineOptions:
    """Run-level switches; defaults follow the reference behavior."""

    calibration_window_s: float | None = None  # None: manifest hint, else skip
    joint_wheel_filter: bool = False
    wheel_accel_updates: bool = True
    vz_prior_std: float | None = None  # optional vertical-velocity damper, off
    wheel_accel_rms: list[float] | None = None  # fusion weights; None = equal


@dataclass
class NavSolution:
    """Estimated trajectory time series plus per-stage diagnostics."""

    t: np.ndarray
    pos_n: np.ndarray
    vel_b: np.ndarray
    vel_n: np.ndarray
    euler: np.ndarray
    yaw_rate: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.size


def _match_indices(master_t: np.ndarray, stream_t: np.ndarray, label: str) -> np.ndarray:
    """Nearest-epoch indices of ``stream_t`` for every master epoch."""
    if stream_t.size == 0:
        raise DataError(f"{label}: empty sensor stream")
    right = np.searchsorted(stream_t, master_t)
    left = np.clip(right - 1, 0, stream_t.size - 1)
    right = np.clip(right, 0, stream_t.size - 1)
    pick_right = np.abs(stream_t[right] - master_t) < np.abs(stream_t[left] - master_t)
    idx = np.where(pick_right, right, left)
    err = np.abs(stream_t[idx] - master_t)
    if err.size and err.max() > SYNC_TOLERANCE_S:
        k = int(np.argmax(err))
        raise DataError(
            f"{label}: epoch {master_t[k]:.6f}s has no sample within "
            f"{SYNC_TOLERANCE_S * 1e3:.0f} ms (nearest {err.max() * 1e3:.2f} ms away)"
        )
    return idx


def _rotated_chassis(recording: Recording, config: VehicleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Chassis gyro/accel rotated from the mount frame into the body frame."""
    gyro = recording.chassis.gyro
    accel = recording.chassis.accel
    if np.any(config.chassis_mount_euler):
        r = nav_to_body(config.chassis_mount_euler)  # body -> sensor
        gyro = gyro @ r  # == (r.T @ gyro.T).T
        accel = accel @ r
    return gyro, accel


def run_wichins(
    recording: Recording,
    config: VehicleConfig | None = None,
    mode: str = "2w",
    options: PipelineOptions | None = None,
) -> NavSolution:
    """Run the full three-stage pipeline over one recording.

    Parameters
    ----------
    recording : Recording
        Chassis stream plus at least the active wheels, on a common 120 Hz
        timebase (nearest-epoch matched within 2 ms).
    config : VehicleConfig, optional
        Defaults to the manifest geometry, else the standard car layout.
    mode : str
        ``"2w"`` (rear pair) or ``"4w"`` (all wheels).
    options : PipelineOptions, optional

    Returns
    -------
    NavSolution
        One sample per chassis IMU epoch; deterministic for fixed inputs.
    """
    options = options or PipelineOptions()
    if config is None:
        config = vehicle_from_manifest(recording.manifest) or default_vehicle()

    active = select_wheels(config, mode)
    if max(active) >= len(recording.wheels):
        raise DataError(
            f"recording provides {len(recording.wheels)} wheel streams, "
            f"mode needs wheel index {max(active)}"
        )

    window = options.calibration_window_s
    if window is None and "calibration_window_s" in recording.manifest:
        window = float(recording.manifest["calibration_window_s"])
    if window:
        recording = apply_calibration(recording, calibrate(recording, window))

    geoms = [config.wheels[i] for i in active]
    chassis_t = recording.chassis.t
    n = chassis_t.size
    gyro_b, accel_b = _rotated_chassis(recording, config)
    if n >= 2 and np.any(np.diff(chassis_t) <= 0.0):
        raise DataError("chassis timestamps are not strictly increasing")

    sol = NavSolution(
        t=chassis_t.copy(),
        pos_n=np.zeros((n, 3)),
        vel_b=np.zeros((n, 3)),
        vel_n=np.zeros((n, 3)),
        euler=np.zeros((n, 3)),
        yaw_rate=gyro_b[:, 2].copy() if n else np.zeros(0),
        diagnostics={"mode": mode, "active_wheels": active},
    )
    if n == 0:
        return sol

    wheel_idx = [
        _match_indices(chassis_t, recording.wheels[i].t, f"wheel{i}") for i in active
    ]

    rate = recording.imu_rate
    gravity = config.gravity
    gyro_std = per_sample_std(DEFAULT_GYRO_DENSITY, rate)
    accel_std = per_sample_std(DEFAULT_ACCEL_DENSITY, rate)
    ori_params = OriParams(gravity=gravity, gyro_noise=gyro_std, accel_noise=accel_std)
    wheel_params = WheelEkfParams(gyro_noise=gyro_std, accel_noise=accel_std)
    pos_params = PosParams(gravity=gravity, gyro_noise=gyro_std, accel_noise=accel_std)

    level_mask = chassis_t < chassis_t[0] + LEVELING_WINDOW_S
    euler0 = leveling_init(accel_b[level_mask] if level_mask.any() else accel_b[:1])
    ori = OriEkf(ori_params, euler0=euler0)
    bank = WheelFilterBank(geoms, wheel_params, joint=options.joint_wheel_filter)
    pos = PosEkf(pos_params, n_wheels=len(geoms))
    weights = (
        fusion_weights(options.wheel_accel_rms) if options.wheel_accel_rms is not None else None
    )

    def emit(k: int) -> None:
        sol.pos_n[k] = pos.position
        sol.vel_b[k] = pos.velocity
        sol.euler[k] = ori.euler
        sol.vel_n[k] = body_to_nav(ori.euler) @ pos.velocity

    def wheel_samples(k: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
        gyros = [recording.wheels[active[j]].gyro[wheel_idx[j][k]] for j in range(len(active))]
        accels = [recording.wheels[active[j]].accel[wheel_idx[j][k]] for j in range(len(active))]
        return gyros, accels

    def forward_accel(f_wheels, omega_wheels, omega_b) -> np.ndarray:
        states = bank.states
        f_body = [
            compensate_wheel_accel(f_wheels[j], omega_wheels[j][2], states[j], omega_b, geoms[j])
            for j in range(len(geoms))
        ]
        fused = fuse_wheel_accels(f_body, weights)
        _, a_fwd = linear_and_forward_accel(fused, ori.euler, gravity)
        return a_fwd

    emit(0)
    last_vz_prior = chassis_t[0]
    omega_wheels_prev, _ = wheel_samples(0)
    # No previous fused acceleration exists at the first step; the wheel
    # phase is acquired from the first accelerometer updates before the
    # compensation is trusted.
    a_fwd_prev = np.zeros(3)
    for k in range(1, n):
        # Predictions integrate the previous sample over [t_{k-1}, t_k];
        # measurements at t_k update.
        dt = chassis_t[k] - chassis_t[k - 1]
        omega_b = gyro_b[k]
        f_b = accel_b[k]
        omega_wheels, f_wheels = wheel_samples(k)

        bank.predict(omega_wheels_prev, gyro_b[k - 1][2], dt)
        ori.predict(gyro_b[k - 1], dt)
        ori.update(f_b, omega_b, pos.velocity)
        if options.wheel_accel_updates:
            bank.update(f_wheels, f_b, omega_b)

        pos.predict(a_fwd_prev, dt)
        pos.update(omega_wheels, omega_b, bank.states, geoms)
        pos.integrate_position(ori.euler, dt)
        if options.vz_prior_std is not None and chassis_t[k] - last_vz_prior >= 1.0:
            pos.apply_vz_prior(options.vz_prior_std)
            last_vz_prior = chassis_t[k]

        a_fwd_prev = forward_accel(f_wheels, omega_wheels, omega_b)
        omega_wheels_prev = omega_wheels
        emit(k)

    sol.diagnostics.update(
        {
            "ori_gate_count": ori.gate_count,
            "pitch_saturations": ori.pitch_saturations,
            "wheel_gate_count": bank.gate_count,
            "pos_gate_counts": dict(pos.gate_counts),
            "rate_hz": rate,
        }
    )
    return sol


# ---------------------------------------------------------------------------
# Solution CSV interchange

SOLUTION_HEADER = (
    "t_s,rn_m,re_m,rd_m,vbx_ms,vby_ms,vbz_ms,vn_ms,ve_ms,vd_ms,"
    "roll_rad,pitch_rad,yaw_rad,yawrate_rads"
)


def save_solution(sol: NavSolution, path: str | Path) -> None:
    """Write a navigation solution as CSV (column order is part of the format)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(SOLUTION_HEADER + "\n")
        for k in range(len(sol)):
            row = [
                sol.t[k],
                *sol.pos_n[k],
                *sol.vel_b[k],
                *sol.vel_n[k],
                *sol.euler[k],
                sol.yaw_rate[k],
            ]
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_solution(path: str | Path) -> NavSolution:
    """Read a navigation solution CSV written by :func:`save_solution`."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != SOLUTION_HEADER:
        raise DataError(f"{path}: expected header '{SOLUTION_HEADER}'")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:] if line.strip()])
    if data.size == 0:
        data = np.zeros((0, 14))
    return NavSolution(
        t=data[:, 0],
        pos_n=data[:, 1:4],
        vel_b=data[:, 4:7],
        vel_n=data[:, 7:10],
        euler=data[:, 10:13],
        yaw_rate=data[:, 13],
    )
