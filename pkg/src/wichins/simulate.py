"""Synthetic trajectories and IMU measurement synthesis.

Ground truth is built from piecewise segments (constant yaw rate, linearly
ramped speed) with closed-form position integrals, so position, velocity
and acceleration are mutually consistent to machine precision. Chassis and
wheel IMU streams are synthesized as the exact inverse of the estimation
measurement models, then white noise and per-sensor constant biases are
added from seeded, per-sensor RNG streams. Noise-free synthesis therefore
round-trips through the filters' measurement models exactly, which is the
master sign-convention check for the whole package.

Wheel slip can be injected as a fault (scaling one wheel's axial gyro over
an interval) without touching the ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import GroundTruthSeries, ImuSeries, Recording
from .errors import ConfigError
from .kinematics import WheelGeometry
from .sensors import (
    DEFAULT_ACCEL_BIAS,
    DEFAULT_ACCEL_DENSITY,
    DEFAULT_GYRO_BIAS,
    DEFAULT_GYRO_DENSITY,
    GRAVITY,
    IMU_RATE_HZ,
)


@dataclass
class Segment:
    """One motion segment: constant yaw rate, linearly ramped speed.

    ``speed_start=None`` continues the previous segment's end speed (0 for
    the first segment); ``speed_end=None`` holds ``speed_start``.
    """

    duration: float
    yaw_rate: float = 0.0
    speed_start: float | None = None
    speed_end: float | None = None


@dataclass
class TrajectorySpec:
    """Segment list plus sampling parameters."""

    segments: list[Segment]
    rate_hz: float = IMU_RATE_HZ
    initial_heading: float = 0.0

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)


@dataclass
class NoiseSpec:
    """White-noise densities, constant-bias magnitudes and the RNG seed.

    Per-sample noise std is ``density * sqrt(rate)``; each sensor draws a
    constant bias of the stated magnitude with random sign per axis from
    its own seeded stream.
    """

    gyro_density: float = DEFAULT_GYRO_DENSITY
    accel_density: float = DEFAULT_ACCEL_DENSITY
    gyro_bias: float = DEFAULT_GYRO_BIAS
    accel_bias: float = DEFAULT_ACCEL_BIAS
    seed: int = 0

    def __post_init__(self):
        for name in ("gyro_density", "accel_density", "gyro_bias", "accel_bias"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be non-negative")

    @classmethod
    def off(cls, seed: int = 0) -> "NoiseSpec":
        return cls(0.0, 0.0, 0.0, 0.0, seed)


@dataclass
class SkidEvent:
    """Injected slip: one wheel's axial gyro scaled by (1 + slip) over [t_start, t_end]."""

    wheel: int
    t_start: float
    t_end: float
    slip: float


@dataclass
class GroundTruth:
    """Dense kinematic truth at the IMU rate."""

    t: np.ndarray
    pos: np.ndarray  # (N,3) navigation frame, m
    vel_n: np.ndarray  # (N,3) m/s
    accel_n: np.ndarray  # (N,3) m/s^2
    euler: np.ndarray  # (N,3) rad; roll = pitch = 0 for planar motion
    omega_b: np.ndarray  # (N,3) rad/s
    speed: np.ndarray  # (N,) forward speed, m/s
    accel_fwd: np.ndarray  # (N,) dv/dt, m/s^2

    @property
    def vel_b(self) -> np.ndarray:
        out = np.zeros_like(self.pos)
        out[:, 0] = self.speed
        return out


@dataclass
class WheelTruth:
    """True per-wheel state series implied by the ground truth."""

    omega: np.ndarray  # rolling speed, rad/s
    alpha: np.ndarray  # phase angle (unwrapped), rad
    beta: np.ndarray  # steering angle, rad
    beta_dot: np.ndarray  # rad/s
    omega_dot: np.ndarray  # rad/s^2

    def state(self, k: int) -> np.ndarray:
        """4-vector (Omega, alpha, beta_dot, beta) at sample ``k``."""
        return np.array([self.omega[k], self.alpha[k], self.beta_dot[k], self.beta[k]])


def generate_ground_truth(spec: TrajectorySpec) -> GroundTruth:
    """Evaluate a trajectory spec into dense, kinematically consistent truth.

    Raises
    ------
    ConfigError
        On empty specs, negative speeds/durations, or a speed jump between
        segments.
    """
    if not spec.segments:
        raise ConfigError("trajectory spec has no segments")

    # Resolve per-segment start conditions.
    starts, speeds = [], []
    t0, psi0 = 0.0, spec.initial_heading
    n0, e0 = 0.0, 0.0
    prev_end = 0.0
    for i, seg in enumerate(spec.segments):
        if seg.duration <= 0.0:
            raise ConfigError("segment duration must be positive")
        v0 = prev_end if seg.speed_start is None else float(seg.speed_start)
        v1 = v0 if seg.speed_end is None else float(seg.speed_end)
        if i > 0 and abs(v0 - prev_end) > 1e-9:
            raise ConfigError(
                f"discontinuous speed: segment starts at {v0} m/s, previous ended at {prev_end}"
            )
        if v0 < 0.0 or v1 < 0.0:
            raise ConfigError("speeds must be non-negative")
        starts.append((t0, psi0, n0, e0))
        speeds.append((v0, (v1 - v0) / seg.duration))
        n1, e1, psi1 = _advance(n0, e0, psi0, v0, (v1 - v0) / seg.duration, seg.yaw_rate, seg.duration)
        t0, psi0, n0, e0, prev_end = t0 + seg.duration, psi1, n1, e1, v1

    duration = spec.duration
    n_samples = int(math.floor(duration * spec.rate_hz + 1e-9)) + 1
    t = np.arange(n_samples) / spec.rate_hz
    boundaries = np.array([s[0] for s in starts])
    seg_idx = np.minimum(np.searchsorted(boundaries, t, side="right") - 1, len(starts) - 1)

    pos = np.zeros((n_samples, 3))
    vel_n = np.zeros((n_samples, 3))
    accel_n = np.zeros((n_samples, 3))
    euler = np.zeros((n_samples, 3))
    omega_b = np.zeros((n_samples, 3))
    speed = np.zeros(n_samples)
    accel_fwd = np.zeros(n_samples)

    for i, seg in enumerate(spec.segments):
        mask = seg_idx == i
        if not np.any(mask):
            continue
        ts, psi_s, n_s, e_s = starts[i]
        v0, a = speeds[i]
        w = seg.yaw_rate
        tau = t[mask] - ts
        v = v0 + a * tau
        psi = psi_s + w * tau
        cp, sp = np.cos(psi), np.sin(psi)
        if w == 0.0:
            dist = v0 * tau + 0.5 * a * tau * tau
            pos[mask, 0] = n_s + math.cos(psi_s) * dist
            pos[mask, 1] = e_s + math.sin(psi_s) * dist
        else:
            pos[mask, 0] = n_s + (v * sp - v0 * math.sin(psi_s)) / w + a * (cp - math.cos(psi_s)) / w**2
            pos[mask, 1] = e_s + (-v * cp + v0 * math.cos(psi_s)) / w + a * (sp - math.sin(psi_s)) / w**2
        vel_n[mask, 0] = v * cp
        vel_n[mask, 1] = v * sp
        accel_n[mask, 0] = a * cp - v * w * sp
        accel_n[mask, 1] = a * sp + v * w * cp
        euler[mask, 2] = np.mod(psi + math.pi, 2.0 * math.pi) - math.pi
        omega_b[mask, 2] = w
        speed[mask] = v
        accel_fwd[mask] = a

    return GroundTruth(t, pos, vel_n, accel_n, euler, omega_b, speed, accel_fwd)


def _advance(n, e, psi, v0, a, w, tau):
    """Closed-form segment end point."""
    v = v0 + a * tau
    psi1 = psi + w * tau
    if w == 0.0:
        dist = v0 * tau + 0.5 * a * tau * tau
        return n + math.cos(psi) * dist, e + math.sin(psi) * dist, psi1
    n1 = n + (v * math.sin(psi1) - v0 * math.sin(psi)) / w + a * (math.cos(psi1) - math.cos(psi)) / w**2
    e1 = e + (-v * math.cos(psi1) + v0 * math.cos(psi)) / w + a * (math.sin(psi1) - math.sin(psi)) / w**2
    return n1, e1, psi1


def _nav_to_body_stack(euler: np.ndarray) -> np.ndarray:
    """(N,3,3) nav-to-body rotation matrices (vectorized ZYX)."""
    sx, cx = np.sin(euler[:, 0]), np.cos(euler[:, 0])
    sy, cy = np.sin(euler[:, 1]), np.cos(euler[:, 1])
    sz, cz = np.sin(euler[:, 2]), np.cos(euler[:, 2])
    t = np.empty((euler.shape[0], 3, 3))
    t[:, 0, 0] = cy * cz
    t[:, 0, 1] = cy * sz
    t[:, 0, 2] = -sy
    t[:, 1, 0] = sx * sy * cz - cx * sz
    t[:, 1, 1] = sx * sy * sz + cx * cz
    t[:, 1, 2] = sx * cy
    t[:, 2, 0] = cx * sy * cz + sx * sz
    t[:, 2, 1] = cx * sy * sz - sx * cz
    t[:, 2, 2] = cx * cy
    return t


def _body_to_wheel_stack(alpha: np.ndarray, beta: np.ndarray, sigma: int) -> np.ndarray:
    """(N,3,3) body-to-wheel rotation matrices (vectorized)."""
    sa, ca = np.sin(alpha), np.cos(alpha)
    sb, cb = np.sin(beta), np.cos(beta)
    s = float(sigma)
    t = np.empty((alpha.shape[0], 3, 3))
    t[:, 0, 0] = cb * ca
    t[:, 0, 1] = sb * ca
    t[:, 0, 2] = sa
    t[:, 1, 0] = -s * cb * sa
    t[:, 1, 1] = -s * sb * sa
    t[:, 1, 2] = s * ca
    t[:, 2, 0] = s * sb
    t[:, 2, 1] = -s * cb
    t[:, 2, 2] = 0.0
    return t


def body_specific_force(gt: GroundTruth, gravity: float = GRAVITY) -> np.ndarray:
    """Noise-free chassis specific force series: T_bn (a_n - g_n)."""
    g_n = np.array([0.0, 0.0, gravity])
    return np.einsum("nij,nj->ni", _nav_to_body_stack(gt.euler), gt.accel_n - g_n)


def wheel_truth(gt: GroundTruth, geom: WheelGeometry) -> WheelTruth:
    """True rolling speed, phase, steering angle/rate for one wheel.

    Non-steerable wheels must sit on the body-origin axle line (x = 0) or
    the no-skid construction fails for turning trajectories.
    """
    x_w, y_w = geom.position[0], geom.position[1]
    omega_z = gt.omega_b[:, 2]
    hub_x = gt.speed - omega_z * y_w
    hub_y = omega_z * x_w

    if geom.steerable:
        beta = np.zeros_like(hub_x)
        prev = 0.0
        for k in range(hub_x.size):
            if hub_x[k] == 0.0 and hub_y[k] == 0.0:
                beta[k] = prev
            else:
                beta[k] = math.atan2(hub_y[k], hub_x[k])
                prev = beta[k]
        beta = np.unwrap(beta)
    else:
        if np.max(np.abs(hub_y)) > 1e-9:
            raise ConfigError(
                "non-steerable wheel off the body-origin axle violates no-skid; "
                "place fixed wheels at x = 0"
            )
        beta = np.zeros_like(hub_x)

    omega = (hub_x * np.cos(beta) + hub_y * np.sin(beta)) / geom.radius
    dt = np.diff(gt.t)
    alpha = np.concatenate([[0.0], np.cumsum(0.5 * (omega[1:] + omega[:-1]) * dt)])
    if gt.t.size >= 2:
        beta_dot = np.gradient(beta, gt.t)
        omega_dot = np.gradient(omega, gt.t)
    else:
        beta_dot = np.zeros_like(beta)
        omega_dot = np.zeros_like(omega)
    return WheelTruth(omega, alpha, beta, beta_dot, omega_dot)


def _sensor_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([abs(int(seed)), int(stream)])


def _add_noise(
    rng: np.random.Generator,
    values: np.ndarray,
    density: float,
    bias_mag: float,
    rate: float,
) -> np.ndarray:
    bias = bias_mag * (2 * rng.integers(0, 2, size=3) - 1)
    std = density * math.sqrt(rate)
    return values + bias + std * rng.standard_normal(values.shape)


def synthesize_chassis_imu(
    gt: GroundTruth, noise: NoiseSpec, gravity: float = GRAVITY, stream: int = 0
) -> ImuSeries:
    """Chassis IMU stream implied by the ground truth, plus seeded noise."""
    rng = _sensor_rng(noise.seed, stream)
    gyro = _add_noise(rng, gt.omega_b.copy(), noise.gyro_density, noise.gyro_bias, _rate(gt))
    accel = _add_noise(
        rng, body_specific_force(gt, gravity), noise.accel_density, noise.accel_bias, _rate(gt)
    )
    return ImuSeries(gt.t.copy(), gyro, accel)


def wheel_measurements(
    gt: GroundTruth,
    truth: WheelTruth,
    geom: WheelGeometry,
    gravity: float = GRAVITY,
    tangential_accel: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free wheel IMU series implied by a ground truth + wheel truth.

    The gyro is the total wheel angular velocity (body rates + steering
    rate + rolling spin about the axle) rotated into the wheel frame; the
    accelerometer is the hub specific force rotated into the wheel frame
    minus the spin centripetal term. With ``tangential_accel`` the terms
    the estimators deliberately neglect (angular-acceleration tangentials)
    are included for robustness studies.
    """
    t_wb = _body_to_wheel_stack(truth.alpha, truth.beta, geom.sigma)

    spin_b = np.zeros((gt.t.size, 3))
    spin_b[:, 0] = truth.omega * np.sin(truth.beta)
    spin_b[:, 1] = -truth.omega * np.cos(truth.beta)
    total_b = gt.omega_b + spin_b
    total_b[:, 2] += truth.beta_dot
    gyro = np.einsum("nij,nj->ni", t_wb, total_b)

    r_b = geom.position
    f_b = body_specific_force(gt, gravity)
    hub = f_b + np.cross(gt.omega_b, np.cross(gt.omega_b, r_b[None, :]))
    if tangential_accel:
        omega_b_dot = np.gradient(gt.omega_b, gt.t, axis=0)
        hub = hub + np.cross(omega_b_dot, r_b[None, :])
    accel = np.einsum("nij,nj->ni", t_wb, hub)
    accel[:, 0] -= geom.rho * truth.omega**2
    if tangential_accel:
        accel[:, 1] += geom.sigma * geom.rho * truth.omega_dot
    return gyro, accel


def synthesize_wheel_imu(
    gt: GroundTruth,
    geom: WheelGeometry,
    noise: NoiseSpec,
    gravity: float = GRAVITY,
    stream: int = 1,
    skid_events: tuple[SkidEvent, ...] = (),
    tangential_accel: bool = False,
) -> tuple[ImuSeries, WheelTruth]:
    """One wheel IMU stream implied by the ground truth, plus seeded noise.

    Skid events scale the axial gyro component by (1 + slip) over their
    interval without touching the ground truth.
    """
    truth = wheel_truth(gt, geom)
    gyro, accel = wheel_measurements(gt, truth, geom, gravity, tangential_accel)

    for ev in skid_events:
        mask = (gt.t >= ev.t_start) & (gt.t <= ev.t_end)
        gyro[mask, 2] *= 1.0 + ev.slip

    rng = _sensor_rng(noise.seed, stream)
    rate = _rate(gt)
    gyro = _add_noise(rng, gyro, noise.gyro_density, noise.gyro_bias, rate)
    accel = _add_noise(rng, accel, noise.accel_density, noise.accel_bias, rate)
    return ImuSeries(gt.t.copy(), gyro, accel), truth


def _rate(gt: GroundTruth) -> float:
    if gt.t.size < 2:
        return IMU_RATE_HZ
    return 1.0 / float(np.median(np.diff(gt.t)))


def simulate_recording(
    spec: TrajectorySpec,
    wheels: list[WheelGeometry],
    noise: NoiseSpec,
    gravity: float = GRAVITY,
    name: str = "sim",
    skid_events: tuple[SkidEvent, ...] = (),
    gt_rate_hz: float = 5.0,
) -> Recording:
    """Full synthetic recording: chassis + wheel streams + 5 Hz ground truth.

    The manifest carries the wheel geometry and, when the spec starts with
    a standstill segment, a calibration window hint.
    """
    gt = generate_ground_truth(spec)
    chassis = synthesize_chassis_imu(gt, noise, gravity, stream=0)
    wheel_series = []
    for i, geom in enumerate(wheels):
        events = tuple(ev for ev in skid_events if ev.wheel == i)
        series, _ = synthesize_wheel_imu(
            gt, geom, noise, gravity, stream=i + 1, skid_events=events
        )
        wheel_series.append(series)

    step = max(1, int(round(spec.rate_hz / gt_rate_hz)))
    gt_series = GroundTruthSeries(
        gt.t[::step].copy(), gt.pos[::step].copy(), gt.vel_n[::step].copy()
    )

    manifest = {
        "name": name,
        "imu_rate_hz": repr(float(spec.rate_hz)),
        "gt_rate_hz": repr(spec.rate_hz / step),
        "gravity": repr(float(gravity)),
        "wheel_count": str(len(wheels)),
        "seed": str(noise.seed),
    }
    first = spec.segments[0]
    v0 = first.speed_start or 0.0
    v1 = v0 if first.speed_end is None else first.speed_end
    if v0 == 0.0 and v1 == 0.0 and first.yaw_rate == 0.0:
        manifest["calibration_window_s"] = repr(min(5.0, first.duration))
    for i, g in enumerate(wheels):
        manifest[f"wheel{i}_file"] = f"wheel{i}.csv"
        manifest[f"wheel{i}_position"] = ",".join(repr(float(v)) for v in g.position)
        manifest[f"wheel{i}_radius"] = repr(float(g.radius))
        manifest[f"wheel{i}_rho"] = repr(float(g.rho))
        manifest[f"wheel{i}_side"] = str(g.sigma)
        manifest[f"wheel{i}_steerable"] = str(int(g.steerable))
    return Recording(chassis, wheel_series, gt_series, manifest)


# ---------------------------------------------------------------------------
# Standard trajectory builders


def _dwell(duration: float) -> Segment:
    return Segment(duration, 0.0, 0.0, 0.0)


def straight_spec(
    speed: float = 5.0,
    cruise_s: float = 20.0,
    dwell_s: float = 6.0,
    ramp_s: float = 2.0,
    rate_hz: float = IMU_RATE_HZ,
) -> TrajectorySpec:
    """Standstill, ramp up, cruise straight ahead."""
    return TrajectorySpec(
        [
            _dwell(dwell_s),
            Segment(ramp_s, 0.0, 0.0, speed),
            Segment(cruise_s, 0.0),
        ],
        rate_hz=rate_hz,
    )


def circle_spec(
    radius: float = 20.0,
    speed: float = 5.0,
    cruise_s: float = 110.0,
    dwell_s: float = 6.0,
    ramp_s: float = 2.0,
    direction: int = 1,
    rate_hz: float = IMU_RATE_HZ,
) -> TrajectorySpec:
    """Standstill, straight ramp-in, then a constant-rate circular arc."""
    return TrajectorySpec(
        [
            _dwell(dwell_s),
            Segment(ramp_s, 0.0, 0.0, speed),
            Segment(cruise_s, direction * speed / radius),
        ],
        rate_hz=rate_hz,
    )


def figure_eight_spec(
    radius: float = 20.0,
    speed: float = 5.0,
    laps: int = 2,
    dwell_s: float = 6.0,
    ramp_s: float = 2.0,
    rate_hz: float = IMU_RATE_HZ,
) -> TrajectorySpec:
    """Alternating full circles left and right."""
    lap_s = 2.0 * math.pi * radius / speed
    segs = [_dwell(dwell_s), Segment(ramp_s, 0.0, 0.0, speed)]
    for i in range(laps):
        sign = 1 if i % 2 == 0 else -1
        segs.append(Segment(lap_s, sign * speed / radius))
    return TrajectorySpec(segs, rate_hz=rate_hz)


def benchmark_scenario(
    rate_hz: float = IMU_RATE_HZ, with_skid: bool = True
) -> tuple[TrajectorySpec, tuple[SkidEvent, ...]]:
    """The ~500 m / ~140 s mixed circuit used by the seeded benchmark runs.

    Includes two brief wheel-slip episodes on the rear wheels (indices 2
    and 3 of the default vehicle) during the turns; slip is what separates
    gyro-only odometry from the skid-gated filter pipeline.
    """
    w = 0.21  # rad/s, ~20 m radius at 4.2 m/s
    spec = TrajectorySpec(
        [
            _dwell(6.0),
            Segment(3.0, 0.0, 0.0, 4.2),
            Segment(30.0, 0.0),
            Segment(math.pi / w, w),  # half turn right
            Segment(25.0, 0.0),
            Segment(math.pi / w, -w),  # half turn left
            Segment(18.0, 0.0),
            Segment(0.5 * math.pi / w, w),  # quarter turn right
            Segment(12.0, 0.0),
            Segment(3.0, 0.0, 4.2, 0.0),
            Segment(4.0, 0.0, 0.0, 0.0),
        ],
        rate_hz=rate_hz,
    )
    skids: tuple[SkidEvent, ...] = ()
    if with_skid:
        skids = (
            SkidEvent(wheel=2, t_start=43.0, t_end=44.5, slip=0.08),
            SkidEvent(wheel=3, t_start=84.0, t_end=85.5, slip=0.06),
        )
    return spec, skids
