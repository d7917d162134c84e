"""Recording ingestion, static calibration and ground-truth alignment.

A recording is a directory of plain CSV files bound together by a flat
``key = value`` manifest:

* one IMU stream per sensor, columns ``t_s,gx_rads,gy_rads,gz_rads,ax_ms2,ay_ms2,az_ms2``
* optional ground truth, columns ``t_s,rn_m,re_m,rd_m,vn_ms,ve_ms,vd_ms``
* ``manifest.txt`` keys: ``imu_rate_hz``, ``gt_rate_hz``, ``gravity``,
  ``chassis_file``, ``gt_file``, ``calibration_window_s``, ``name``,
  ``wheel_count`` and per wheel ``wheel{i}_file``, ``wheel{i}_position``
  (comma-separated x,y,z in m), ``wheel{i}_radius``, ``wheel{i}_rho``,
  ``wheel{i}_side`` (+1 left / -1 right), ``wheel{i}_steerable`` (0/1).

Timestamps are seconds; files whose median sample interval exceeds 1.0 are
assumed to be milliseconds and converted. Simulated and recorded data share
this format so they are interchangeable downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .frames import nav_to_body, roll_pitch_from_accel
from .kinematics import WheelGeometry
from .sensors import (
    DEFAULT_ACCEL_DENSITY,
    DEFAULT_GYRO_DENSITY,
    GRAVITY,
    GT_RATE_HZ,
    IMU_RATE_HZ,
)

IMU_HEADER = "t_s,gx_rads,gy_rads,gz_rads,ax_ms2,ay_ms2,az_ms2"
GT_HEADER = "t_s,rn_m,re_m,rd_m,vn_ms,ve_ms,vd_ms"
RATE_TOLERANCE = 0.01


@dataclass
class ImuSeries:
    """One sensor's time series: gyro in rad/s, accel in m/s^2."""

    t: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray

    def __len__(self) -> int:
        return self.t.size

    def copy(self) -> "ImuSeries":
        return ImuSeries(self.t.copy(), self.gyro.copy(), self.accel.copy())


@dataclass
class GroundTruthSeries:
    """Reference position/velocity in the navigation frame."""

    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray

    def __len__(self) -> int:
        return self.t.size


@dataclass
class Recording:
    """Five IMU streams plus optional ground truth and the manifest."""

    chassis: ImuSeries
    wheels: list[ImuSeries]
    ground_truth: GroundTruthSeries | None = None
    manifest: dict[str, str] = field(default_factory=dict)

    @property
    def imu_rate(self) -> float:
        return float(self.manifest.get("imu_rate_hz", IMU_RATE_HZ))

    @property
    def gravity(self) -> float:
        return float(self.manifest.get("gravity", GRAVITY))


@dataclass
class CalibrationResult:
    """Per-sensor biases estimated from a stationary window."""

    chassis_gyro_bias: np.ndarray
    chassis_accel_bias: np.ndarray
    wheel_gyro_bias: list[np.ndarray]
    wheel_accel_bias: list[np.ndarray]
    window_s: float
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings


@dataclass
class AlignedSeries:
    """Estimate interpolated to ground-truth epochs, pose-aligned at start."""

    t: np.ndarray
    est_pos: np.ndarray
    est_vel: np.ndarray
    gt_pos: np.ndarray
    gt_vel: np.ndarray


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def _read_csv(path: Path, header: str, n_cols: int) -> np.ndarray:
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != header:
        raise DataError(f"{path}: expected header '{header}'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != n_cols:
            raise DataError(f"{path}:{lineno}: expected {n_cols} columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return np.array(rows) if rows else np.zeros((0, n_cols))


def _normalize_time(t: np.ndarray, path: Path) -> np.ndarray:
    if t.size >= 2:
        dt = np.diff(t)
        bad = np.nonzero(dt <= 0.0)[0]
        if bad.size:
            # +3: 1-based, header row, and the offender is the second of the pair
            raise DataError(
                f"{path}: non-monotonic or duplicated timestamp at row {bad[0] + 3}"
            )
        if float(np.median(dt)) > 1.0:  # milliseconds heuristic
            t = t / 1000.0
    return t


def _check_rate(t: np.ndarray, declared: float, label: str) -> None:
    if t.size < 2:
        return
    actual = 1.0 / float(np.median(np.diff(t)))
    if abs(actual - declared) > RATE_TOLERANCE * declared:
        raise DataError(
            f"{label}: sample rate {actual:.3f} Hz outside {declared} Hz +-{RATE_TOLERANCE:.0%}"
        )


def _load_imu(path: Path, declared_rate: float) -> ImuSeries:
    data = _read_csv(path, IMU_HEADER, 7)
    t = _normalize_time(data[:, 0], path)
    _check_rate(t, declared_rate, str(path))
    return ImuSeries(t, data[:, 1:4].copy(), data[:, 4:7].copy())


def parse_manifest(path: Path) -> dict[str, str]:
    manifest: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        manifest[key.strip()] = value.strip()
    return manifest


def wheel_geometry_from_manifest(manifest: dict[str, str]) -> list[WheelGeometry]:
    """Wheel geometry entries declared in a recording manifest."""
    count = int(manifest.get("wheel_count", 0))
    wheels = []
    for i in range(count):
        pos = [float(v) for v in manifest[f"wheel{i}_position"].split(",")]
        wheels.append(
            WheelGeometry(
                position=np.array(pos),
                radius=float(manifest.get(f"wheel{i}_radius", 0.295)),
                rho=float(manifest.get(f"wheel{i}_rho", 0.0)),
                sigma=int(manifest.get(f"wheel{i}_side", 1)),
                steerable=bool(int(manifest.get(f"wheel{i}_steerable", 0))),
            )
        )
    return wheels


def load_recording(path: str | Path) -> Recording:
    """Load a recording from a directory (or direct manifest path).

    Validates headers, timestamp monotonicity and sample rates; converts
    millisecond timestamps to seconds.
    """
    path = Path(path)
    manifest_path = path if path.is_file() else path / "manifest.txt"
    if not manifest_path.exists():
        raise DataError(f"no manifest found at {manifest_path}")
    base = manifest_path.parent
    manifest = parse_manifest(manifest_path)

    imu_rate = float(manifest.get("imu_rate_hz", IMU_RATE_HZ))
    chassis = _load_imu(base / manifest.get("chassis_file", "chassis.csv"), imu_rate)
    wheels = []
    for i in range(int(manifest.get("wheel_count", 0))):
        wheels.append(_load_imu(base / manifest[f"wheel{i}_file"], imu_rate))

    ground_truth = None
    gt_file = manifest.get("gt_file")
    if gt_file and (base / gt_file).exists():
        data = _read_csv(base / gt_file, GT_HEADER, 7)
        t = _normalize_time(data[:, 0], base / gt_file)
        _check_rate(t, float(manifest.get("gt_rate_hz", GT_RATE_HZ)), gt_file)
        ground_truth = GroundTruthSeries(t, data[:, 1:4].copy(), data[:, 4:7].copy())

    return Recording(chassis, wheels, ground_truth, manifest)


def save_recording(recording: Recording, out_dir: str | Path) -> Path:
    """Write a recording in the interchange CSV layout; returns the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = dict(recording.manifest)
    manifest.setdefault("chassis_file", "chassis.csv")
    manifest["wheel_count"] = str(len(recording.wheels))

    def write_imu(series: ImuSeries, name: str) -> None:
        with open(out / name, "w") as fh:
            fh.write(IMU_HEADER + "\n")
            for k in range(len(series)):
                fh.write(
                    _format_row(
                        [series.t[k], *series.gyro[k], *series.accel[k]]
                    )
                    + "\n"
                )

    write_imu(recording.chassis, manifest["chassis_file"])
    for i, series in enumerate(recording.wheels):
        manifest.setdefault(f"wheel{i}_file", f"wheel{i}.csv")
        write_imu(series, manifest[f"wheel{i}_file"])

    if recording.ground_truth is not None:
        manifest.setdefault("gt_file", "gt.csv")
        gt = recording.ground_truth
        with open(out / manifest["gt_file"], "w") as fh:
            fh.write(GT_HEADER + "\n")
            for k in range(len(gt)):
                fh.write(_format_row([gt.t[k], *gt.pos[k], *gt.vel[k]]) + "\n")

    with open(out / "manifest.txt", "w") as fh:
        for key in sorted(manifest):
            fh.write(f"{key} = {manifest[key]}\n")
    return out


def calibrate(
    recording: Recording,
    window_s: float = 5.0,
    gyro_density: float = DEFAULT_GYRO_DENSITY,
    accel_density: float = DEFAULT_ACCEL_DENSITY,
) -> CalibrationResult:
    """Estimate constant sensor biases from an initial stationary window.

    Gyro bias is the window mean. Chassis accelerometer bias is the mean
    minus the gravity reading expected at the coarse-leveled attitude. A
    wheel accelerometer's bias is inseparable from its unknown phase angle
    at standstill, so the phase is estimated from the mean gravity
    direction and the residual (mostly the axial/norm component) is
    reported as bias.

    Raises
    ------
    DataError
        If any gyro stream shows motion in the window (std above 5x the
        expected noise floor) or the window holds too few samples.
    """
    chassis = recording.chassis
    if len(chassis) == 0:
        raise DataError("empty recording cannot be calibrated")
    rate = recording.imu_rate
    gravity = recording.gravity
    t0 = chassis.t[0]
    floor = gyro_density * math.sqrt(rate)
    accel_floor = accel_density * math.sqrt(rate)
    warnings: list[str] = []

    def window(series: ImuSeries) -> np.ndarray:
        mask = series.t < t0 + window_s
        if mask.sum() < 10:
            raise DataError("calibration window holds fewer than 10 samples")
        return mask

    def check_static(series: ImuSeries, mask: np.ndarray, label: str) -> None:
        std = series.gyro[mask].std(axis=0)
        if np.any(std > 5.0 * floor):
            raise DataError(
                f"motion detected in calibration window of {label}: "
                f"gyro std {std.max():.3e} > {5.0 * floor:.3e} rad/s"
            )

    def check_residual(residual_std: np.ndarray, label: str) -> None:
        if np.any(residual_std > 3.0 * accel_floor):
            warnings.append(
                f"{label}: accel residual std {residual_std.max():.3e} exceeds "
                f"3x noise floor {3.0 * accel_floor:.3e}"
            )

    mask = window(chassis)
    check_static(chassis, mask, "chassis")
    chassis_gyro_bias = chassis.gyro[mask].mean(axis=0)
    mean_f = chassis.accel[mask].mean(axis=0)
    roll, pitch = roll_pitch_from_accel(mean_f)
    expected = nav_to_body(np.array([roll, pitch, 0.0])) @ np.array([0.0, 0.0, -gravity])
    chassis_accel_bias = mean_f - expected
    check_residual(chassis.accel[mask].std(axis=0), "chassis")

    geoms = wheel_geometry_from_manifest(recording.manifest)
    wheel_gyro_bias, wheel_accel_bias = [], []
    for i, series in enumerate(recording.wheels):
        mask = window(series)
        check_static(series, mask, f"wheel{i}")
        wheel_gyro_bias.append(series.gyro[mask].mean(axis=0))
        mean_f = series.accel[mask].mean(axis=0)
        sigma = geoms[i].sigma if i < len(geoms) else 1
        alpha = math.atan2(-mean_f[0], -sigma * mean_f[1])
        expected = np.array(
            [-gravity * math.sin(alpha), -sigma * gravity * math.cos(alpha), 0.0]
        )
        wheel_accel_bias.append(mean_f - expected)
        check_residual(series.accel[mask].std(axis=0), f"wheel{i}")

    return CalibrationResult(
        chassis_gyro_bias,
        chassis_accel_bias,
        wheel_gyro_bias,
        wheel_accel_bias,
        window_s,
        warnings,
    )


def apply_calibration(recording: Recording, cal: CalibrationResult) -> Recording:
    """Return a copy of the recording with estimated biases subtracted."""
    chassis = recording.chassis.copy()
    chassis.gyro -= cal.chassis_gyro_bias
    chassis.accel -= cal.chassis_accel_bias
    wheels = []
    for i, series in enumerate(recording.wheels):
        w = series.copy()
        w.gyro -= cal.wheel_gyro_bias[i]
        w.accel -= cal.wheel_accel_bias[i]
        wheels.append(w)
    return Recording(chassis, wheels, recording.ground_truth, dict(recording.manifest))


def _interp_columns(t_new: np.ndarray, t: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.column_stack([np.interp(t_new, t, values[:, j]) for j in range(values.shape[1])])


def align_ground_truth(nav, gt: GroundTruthSeries, min_travel: float = 2.0) -> AlignedSeries:
    """Pair a navigation solution with ground truth at the GT epochs.

    The solution is linearly interpolated to the GT timestamps, translated
    to the GT start point, and rotated in the horizontal plane so its
    initial course (over the first ``min_travel`` meters of GT travel)
    matches the GT course; heading is unobservable without a magnetometer,
    so unaligned yaw would otherwise dominate the position error.

    Parameters
    ----------
    nav : object with ``t``, ``pos_n``, ``vel_n`` arrays (a NavSolution).
    gt : GroundTruthSeries
    """
    if len(nav.t) < 2:
        raise DataError("navigation solution too short to align")
    mask = (gt.t >= nav.t[0] - 1e-9) & (gt.t <= nav.t[-1] + 1e-9)
    if mask.sum() < 2:
        raise DataError("fewer than 2 ground-truth samples overlap the solution")
    t = gt.t[mask]
    gt_pos = gt.pos[mask].copy()
    gt_vel = gt.vel[mask].copy()
    est_pos = _interp_columns(t, nav.t, nav.pos_n)
    est_vel = _interp_columns(t, nav.t, nav.vel_n)

    est_pos += gt_pos[0] - est_pos[0]

    hor = np.linalg.norm(np.diff(gt_pos[:, :2], axis=0), axis=1)
    travel = np.concatenate([[0.0], np.cumsum(hor)])
    beyond = np.nonzero(travel >= min_travel)[0]
    if beyond.size:
        j = int(beyond[0])
        d_gt = gt_pos[j, :2] - gt_pos[0, :2]
        d_est = est_pos[j, :2] - est_pos[0, :2]
        if np.linalg.norm(d_est) > 1e-9:
            dpsi = math.atan2(d_gt[1], d_gt[0]) - math.atan2(d_est[1], d_est[0])
            c, s = math.cos(dpsi), math.sin(dpsi)
            rot = np.array([[c, -s], [s, c]])
            rel = est_pos[:, :2] - gt_pos[0, :2]
            est_pos[:, :2] = rel @ rot.T + gt_pos[0, :2]
            est_vel[:, :2] = est_vel[:, :2] @ rot.T
    return AlignedSeries(t, est_pos, est_vel, gt_pos, gt_vel)
