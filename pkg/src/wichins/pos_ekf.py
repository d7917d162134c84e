"""Body velocity and navigation-frame position EKF.

Velocity is predicted from the fused wheel accelerometers: each wheel's
specific force is spin-compensated, rotated into the body frame, stripped
of the hub centripetal term, averaged across wheels by inverse-variance
weights, gravity-compensated, and masked to its forward component (a
wheeled platform accelerates along x; lateral/vertical acceleration is
treated as disturbance). Wheel gyros correct the velocity through no-skid
inverse kinematics, with per-wheel innovation gating rejecting skid events.
Position integrates forward-Euler after the update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ekf
from .frames import body_to_wheel, cross3, nav_to_body
from .kinematics import WheelGeometry, inverse_kinematics_speed
from .sensors import DEFAULT_ACCEL_STD, DEFAULT_GYRO_STD, GRAVITY

# State layout: body velocity then nav position.
VX, VY, VZ, RX, RY, RZ = range(6)


@dataclass
class PosParams:
    """Tuning for the position filter (per-sample sensor std devs)."""

    gravity: float = GRAVITY
    gyro_noise: float = DEFAULT_GYRO_STD
    accel_noise: float = DEFAULT_ACCEL_STD
    gyro_inflation: float = 10.0
    process_scale: float = 4.0
    gate_sigma: float = 6.0


def fusion_weights(accel_rms: list[float]) -> np.ndarray:
    """Inverse-variance weights from per-wheel accelerometer noise RMS."""
    rms = np.asarray(accel_rms, dtype=float)
    if np.any(rms <= 0.0):
        raise ValueError("accelerometer RMS values must be positive")
    return 1.0 / (rms * rms)


def compensate_wheel_accel(
    f_wheel_cal: np.ndarray,
    omega_wheel_z: float,
    wheel_state: np.ndarray,
    omega_b: np.ndarray,
    geom: WheelGeometry,
) -> np.ndarray:
    """One wheel's accelerometer reading expressed as body specific force.

    Adds back the sensor's spin centripetal term, rotates into the body
    frame with the estimated phase/steering angles, and removes the hub
    centripetal acceleration due to body rotation.
    """
    f = np.asarray(f_wheel_cal, dtype=float).copy()
    f[0] += geom.rho * omega_wheel_z * omega_wheel_z
    t_bw = body_to_wheel(wheel_state[1], wheel_state[3], geom.sigma).T
    return t_bw @ f - cross3(omega_b, cross3(omega_b, geom.position))


def fuse_wheel_accels(f_list: list[np.ndarray], weights: np.ndarray | None = None) -> np.ndarray:
    """Weighted average of per-wheel body specific forces.

    Equal weights reduce to the arithmetic mean.
    """
    if len(f_list) == 0:
        raise ValueError("at least one wheel specific force is required")
    stack = np.asarray(f_list, dtype=float)
    if weights is None:
        return stack.mean(axis=0)
    w = np.asarray(weights, dtype=float)
    return (w[:, None] * stack).sum(axis=0) / w.sum()


def linear_and_forward_accel(
    fused: np.ndarray, euler: np.ndarray, gravity: float = GRAVITY
) -> tuple[np.ndarray, np.ndarray]:
    """Remove gravity from the fused specific force and mask to forward x.

    Returns (linear acceleration, forward-masked acceleration), both in the
    body frame.
    """
    a_lin = np.asarray(fused, dtype=float) - nav_to_body(euler) @ np.array(
        [0.0, 0.0, -gravity]
    )
    a_fwd = a_lin * np.array([1.0, 0.0, 0.0])
    return a_lin, a_fwd


def expected_wheel_gyros(
    v_b: np.ndarray,
    omega_b: np.ndarray,
    wheel_states: list[np.ndarray],
    geoms: list[WheelGeometry],
) -> list[np.ndarray]:
    """Wheel gyro vectors implied by a body velocity under no-skid rolling.

    Rolling speed comes from inverse kinematics at each wheel's estimated
    steering angle; body rates plus the steering rate are rotated into the
    wheel frame and added on the axial axis with the side sign.
    """
    out = []
    omega_b = np.asarray(omega_b, dtype=float)
    for x, g in zip(wheel_states, geoms):
        omega_hat = inverse_kinematics_speed(v_b, omega_b[2], x[3], g)
        t_wb = body_to_wheel(x[1], x[3], g.sigma)
        w = t_wb @ (omega_b + np.array([0.0, 0.0, x[2]]))
        w[2] += g.sigma * omega_hat
        out.append(w)
    return out


#: Consecutive fully-gated updates after which the velocity uncertainty is
#: reset so the filter can reacquire (prevents gate deadlock).
GATE_RESET_STREAK = 120

#: Initial horizontal velocity std, m/s; wide enough for recordings that
#: start in motion.
INIT_VEL_STD = 10.0


class PosEkf:
    """Sequential velocity/position estimator for one run."""

    def __init__(self, params: PosParams | None = None, n_wheels: int = 2):
        self.params = params or PosParams()
        self.n_wheels = n_wheels
        mean = np.zeros(6)
        self.state = ekf.GaussianState(mean, self._initial_cov())
        # Fused-accelerometer noise shrinks with the wheel count.
        self._sigma_fused = self.params.accel_noise / math.sqrt(n_wheels)
        sg = self.params.gyro_noise
        self._r_wheel = np.eye(3) * (sg * sg) * self.params.gyro_inflation
        self._r_stacks: dict[int, np.ndarray] = {}
        self._q_predict: tuple[float, np.ndarray] | None = None
        self._q_integrate: tuple[float, np.ndarray] | None = None
        self.gate_counts: dict[int, int] = {}
        self._gate_streak = 0

    @staticmethod
    def _initial_cov() -> np.ndarray:
        v2 = INIT_VEL_STD * INIT_VEL_STD
        return np.diag([v2, v2, 1.0, 1e-6, 1e-6, 1e-6])

    @property
    def velocity(self) -> np.ndarray:
        return self.state.mean[:3]

    @property
    def position(self) -> np.ndarray:
        return self.state.mean[3:]

    def predict(self, a_fwd: np.ndarray, dt: float) -> None:
        """Advance velocity with the forward-masked acceleration."""
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        a = np.asarray(a_fwd, dtype=float)
        if self._q_predict is None or self._q_predict[0] != dt:
            var_v = (self._sigma_fused * dt) ** 2 * self.params.process_scale
            q = np.zeros((6, 6))
            q[0, 0] = q[1, 1] = q[2, 2] = var_v
            self._q_predict = (dt, q)
        mean = self.state.mean.copy()
        mean[:3] += a * dt
        self.state = ekf.GaussianState(mean, self.state.cov + self._q_predict[1])

    def update(
        self,
        omega_wheels_cal: list[np.ndarray],
        omega_b: np.ndarray,
        wheel_states: list[np.ndarray],
        geoms: list[WheelGeometry],
    ) -> list[bool]:
        """Correct velocity against measured wheel gyros; gate per wheel.

        Returns the per-wheel acceptance flags (False = gated, e.g. skid).
        """
        state = self.state
        omega_b = np.asarray(omega_b, dtype=float)
        predictions = expected_wheel_gyros(state.mean[:3], omega_b, wheel_states, geoms)
        accepted = [True] * len(geoms)
        rows_z, rows_zhat, rows_h = [], [], []
        for i, (g, x, z_hat) in enumerate(zip(geoms, wheel_states, predictions)):
            h = np.zeros((3, 6))
            sb, cb = math.sin(x[3]), math.cos(x[3])
            h[2, VX] = g.sigma * cb / g.radius
            h[2, VY] = g.sigma * sb / g.radius
            z = np.asarray(omega_wheels_cal[i], dtype=float)
            nu = z - z_hat
            s = h @ state.cov @ h.T + self._r_wheel
            if np.any(np.abs(nu) > self.params.gate_sigma * np.sqrt(s.diagonal())):
                accepted[i] = False
                self.gate_counts[i] = self.gate_counts.get(i, 0) + 1
                continue
            rows_z.append(z)
            rows_zhat.append(z_hat)
            rows_h.append(h)
        if not rows_z:
            self._gate_streak += 1
            if self._gate_streak >= GATE_RESET_STREAK:
                # Every wheel rejected for a sustained period: the velocity
                # estimate is lost; widen it and reacquire.
                cov = self.state.cov.copy()
                cov[:3, :] = 0.0
                cov[:, :3] = 0.0
                cov[:3, :3] = self._initial_cov()[:3, :3]
                self.state = ekf.GaussianState(self.state.mean.copy(), cov)
                self._gate_streak = 0
            return accepted
        self._gate_streak = 0
        z = np.concatenate(rows_z)
        z_hat = np.concatenate(rows_zhat)
        h = np.vstack(rows_h)
        m = len(rows_z)
        r = self._r_stacks.get(m)
        if r is None:
            r = np.kron(np.eye(m), self._r_wheel)
            self._r_stacks[m] = r
        nu = z - z_hat
        s = h @ state.cov @ h.T + r
        try:
            k = np.linalg.solve(s, h @ state.cov).T
        except np.linalg.LinAlgError:
            return accepted
        mean = state.mean + k @ nu
        a = np.eye(6) - k @ h
        cov = a @ state.cov @ a.T + k @ r @ k.T
        self.state = ekf.GaussianState(mean, 0.5 * (cov + cov.T))
        return accepted

    def integrate_position(self, euler: np.ndarray, dt: float) -> None:
        """Forward-Euler position step with the post-update velocity."""
        t_bn = nav_to_body(euler).T
        f = np.eye(6)
        f[3:, :3] = t_bn * dt
        if self._q_integrate is None or self._q_integrate[0] != dt:
            var_r = (0.5 * self._sigma_fused * dt * dt) ** 2 * self.params.process_scale
            q = np.zeros((6, 6))
            q[3, 3] = q[4, 4] = q[5, 5] = var_r
            self._q_integrate = (dt, q)
        q = self._q_integrate[1]
        mean = self.state.mean.copy()
        mean[3:] += t_bn @ mean[:3] * dt
        cov = f @ self.state.cov @ f.T + q
        self.state = ekf.GaussianState(mean, 0.5 * (cov + cov.T))

    def apply_vz_prior(self, std: float = 0.5) -> None:
        """Optional weak zero pseudo-measurement on vertical velocity."""
        model = ekf.MeasurementModel(
            predict=lambda x: np.array([x[VZ]]),
            noise=np.array([[std * std]]),
            jacobian=lambda x: np.array([[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]]),
        )
        result = ekf.update(self.state, np.zeros(1), model)
        if result.accepted:
            self.state = result.state
