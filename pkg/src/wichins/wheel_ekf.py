"""Per-wheel state EKF: rolling speed, phase angle, steering rate and angle.

The wheel gyro drives the prediction (the axial axis reads the rolling
rate, the in-plane axes expose the steering rate); the wheel accelerometer
updates the state because the gravity direction in the spinning sensor
frame depends on the phase angle. Non-steerable wheels have their steering
components pinned to zero exactly (zero covariance rows, zero gain).

Wheels run as independent 4-state filters by default; a vectorized bank
stacks all wheels into one EKF for the joint variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ekf
from .frames import angle_wrap, body_to_wheel, cross3
from .kinematics import WheelGeometry
from .sensors import DEFAULT_ACCEL_STD, DEFAULT_GYRO_STD

# State layout
OMEGA, ALPHA, BETA_DOT, BETA = 0, 1, 2, 3
ANGLE_INDICES = (ALPHA, BETA)

#: Phase angle is unknown at start-up; variance of a uniform angle.
ALPHA_PRIOR_VAR = math.pi**2 / 3.0


@dataclass
class WheelEkfParams:
    """Noise tuning shared by all wheel filters (per-sample std devs)."""

    gyro_noise: float = DEFAULT_GYRO_STD
    accel_noise: float = DEFAULT_ACCEL_STD
    accel_inflation: float = 10.0
    process_scale: float = 4.0
    gate_sigma: float = 6.0


def wheel_predict_mean(
    x: np.ndarray,
    omega_wheel: np.ndarray,
    omega_b_z: float,
    geom: WheelGeometry,
    dt: float,
) -> np.ndarray:
    """Propagate (Omega, alpha, beta_dot, beta) one step from wheel gyro rates.

    The rolling speed is read directly off the axial gyro with the
    left/right sign applied; the phase integrates it. For steerable wheels
    the in-plane gyro axes minus the body yaw rate give the steering rate.
    """
    q = 1.0 if geom.steerable else 0.0
    sigma = float(geom.sigma)
    omega_hat = sigma * omega_wheel[2]
    alpha_hat = angle_wrap(x[ALPHA] + omega_hat * dt)
    beta_dot_hat = q * (
        omega_wheel[0] * math.sin(alpha_hat)
        + sigma * omega_wheel[1] * math.cos(alpha_hat)
        - omega_b_z
    )
    beta_hat = q * angle_wrap(x[BETA] + beta_dot_hat * dt)
    return np.array([omega_hat, alpha_hat, beta_dot_hat, beta_hat])


def wheel_predict_jacobian(
    x: np.ndarray, omega_wheel: np.ndarray, geom: WheelGeometry, dt: float
) -> np.ndarray:
    """Analytic transition Jacobian of :func:`wheel_predict_mean`."""
    q = 1.0 if geom.steerable else 0.0
    sigma = float(geom.sigma)
    alpha_hat = x[ALPHA] + sigma * omega_wheel[2] * dt
    dbdot_dalpha = q * (
        omega_wheel[0] * math.cos(alpha_hat) - sigma * omega_wheel[1] * math.sin(alpha_hat)
    )
    f = np.zeros((4, 4))
    f[ALPHA, ALPHA] = 1.0
    f[BETA_DOT, ALPHA] = dbdot_dalpha
    f[BETA, ALPHA] = q * dt * dbdot_dalpha
    f[BETA, BETA] = q
    return f


def expected_wheel_specific_force(
    x: np.ndarray, f_b: np.ndarray, omega_b: np.ndarray, geom: WheelGeometry
) -> np.ndarray:
    """Specific force a wheel-mounted accelerometer should read.

    Body specific force plus the hub centripetal term rotated into the
    wheel frame, minus the sensor's own spin centripetal acceleration
    along the radial axis. Tangential terms from angular acceleration are
    neglected (short-term noise).
    """
    t_wb = body_to_wheel(x[ALPHA], x[BETA], geom.sigma)
    hub = f_b + cross3(omega_b, cross3(omega_b, geom.position))
    out = t_wb @ hub
    out[0] -= geom.rho * x[OMEGA] * x[OMEGA]
    return out


def _update_jacobian(x: np.ndarray, u: np.ndarray, geom: WheelGeometry) -> np.ndarray:
    """d(expected wheel specific force)/d(state); ``u`` is the hub vector."""
    sa, ca = math.sin(x[ALPHA]), math.cos(x[ALPHA])
    sb, cb = math.sin(x[BETA]), math.cos(x[BETA])
    s = float(geom.sigma)
    dt_dalpha = np.array(
        [
            [-cb * sa, -sb * sa, ca],
            [-s * cb * ca, -s * sb * ca, -s * sa],
            [0.0, 0.0, 0.0],
        ]
    )
    dt_dbeta = np.array(
        [
            [-sb * ca, cb * ca, 0.0],
            [s * sb * sa, -s * cb * sa, 0.0],
            [s * cb, s * sb, 0.0],
        ]
    )
    h = np.zeros((3, 4))
    h[0, OMEGA] = -2.0 * geom.rho * x[OMEGA]
    h[:, ALPHA] = dt_dalpha @ u
    h[:, BETA] = dt_dbeta @ u
    return h


#: Consecutive gated accelerometer updates after which the phase-angle
#: uncertainty is reset so the filter reacquires the phase from gravity
#: (needed after skid events corrupt the integrated phase).
GATE_RESET_STREAK = 120


class WheelEkf:
    """4-state filter for a single wheel."""

    def __init__(
        self,
        geom: WheelGeometry,
        params: WheelEkfParams | None = None,
        alpha0: float = 0.0,
    ):
        self.geom = geom
        self.params = params or WheelEkfParams()
        q = 1.0 if geom.steerable else 0.0
        mean = np.array([0.0, alpha0, 0.0, 0.0])
        cov = np.diag([1.0, ALPHA_PRIOR_VAR, 0.01 * q, 0.01 * q])
        self.state = ekf.GaussianState(mean, cov)
        sa = self.params.accel_noise
        self._r = np.eye(3) * (sa * sa) * self.params.accel_inflation
        self.gate_count = 0
        self._gate_streak = 0
        self._prev_inputs: np.ndarray | None = None

    def _process_noise(self, dt: float, omega_wheel: np.ndarray, omega_b_z: float) -> np.ndarray:
        # The rolling rate and steering rate are read directly off the
        # gyros, so their prediction error is the per-sample gyro noise;
        # the angles integrate it over one step. On top of that, the
        # zero-order hold of a changing rate lags the true integral by
        # half the rate change per step; without that term the angle
        # covariance collapses and the gate locks out during speed ramps.
        sg = self.params.gyro_noise
        q = 1.0 if self.geom.steerable else 0.0
        rate_var = sg * sg * self.params.process_scale
        inputs = np.array([self.geom.sigma * omega_wheel[2], omega_wheel[0], omega_wheel[1], omega_b_z])
        if self._prev_inputs is None:
            hold_alpha = hold_beta = 0.0
        else:
            d_omega = inputs[0] - self._prev_inputs[0]
            d_rates = np.abs(inputs[1:] - self._prev_inputs[1:]).sum()
            hold_alpha = (0.5 * d_omega * dt) ** 2
            hold_beta = (0.5 * d_rates * dt) ** 2
        self._prev_inputs = inputs
        alpha_var = (sg * dt) ** 2 + hold_alpha
        beta_var = (sg * dt) ** 2 + hold_beta
        return np.diag([rate_var, alpha_var, q * rate_var, q * beta_var])

    def predict(self, omega_wheel_cal: np.ndarray, omega_b_z: float, dt: float) -> None:
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        omega_wheel_cal = np.asarray(omega_wheel_cal, dtype=float)
        self.state = ekf.predict(
            self.state,
            lambda x: wheel_predict_mean(x, omega_wheel_cal, omega_b_z, self.geom, dt),
            self._process_noise(dt, omega_wheel_cal, omega_b_z),
            jacobian=lambda x: wheel_predict_jacobian(x, omega_wheel_cal, self.geom, dt),
            angle_indices=ANGLE_INDICES,
        )

    def update(
        self, f_wheel_cal: np.ndarray, f_b: np.ndarray, omega_b: np.ndarray
    ) -> ekf.UpdateResult:
        """Correct the state with a wheel accelerometer reading.

        ``f_b`` is the chassis-derived body specific force (parameter, not
        part of the state), ``omega_b`` the calibrated body rates.
        """
        f_b = np.asarray(f_b, dtype=float)
        omega_b = np.asarray(omega_b, dtype=float)
        u = f_b + cross3(omega_b, cross3(omega_b, self.geom.position))
        geom = self.geom

        def h(x: np.ndarray) -> np.ndarray:
            out = body_to_wheel(x[ALPHA], x[BETA], geom.sigma) @ u
            out[0] -= geom.rho * x[OMEGA] * x[OMEGA]
            return out

        model = ekf.MeasurementModel(
            predict=h,
            noise=self._r,
            jacobian=lambda x: _update_jacobian(x, u, geom),
        )
        result = ekf.update(
            self.state,
            np.asarray(f_wheel_cal, dtype=float),
            model,
            gate_sigma=self.params.gate_sigma,
            angle_indices=ANGLE_INDICES,
        )
        if result.gated:
            self.gate_count += 1
            self._gate_streak += 1
            if self._gate_streak >= GATE_RESET_STREAK:
                # Persistent rejection means the phase estimate is lost
                # (e.g. the axial gyro lied during a skid); reacquire it.
                self.state.cov[ALPHA, :] = 0.0
                self.state.cov[:, ALPHA] = 0.0
                self.state.cov[ALPHA, ALPHA] = ALPHA_PRIOR_VAR
                self._gate_streak = 0
        else:
            self._gate_streak = 0
        if result.accepted:
            self.state = result.state
        return result


class WheelFilterBank:
    """All wheel filters of a vehicle, independent or vectorized.

    In ``joint`` mode the per-wheel states are stacked into a single EKF
    (block-diagonal covariance at start); with block initialization the
    two modes produce identical estimates, the joint variant just pays for
    the larger matrices.
    """

    def __init__(
        self,
        geoms: list[WheelGeometry],
        params: WheelEkfParams | None = None,
        joint: bool = False,
    ):
        self.geoms = geoms
        self.params = params or WheelEkfParams()
        self.joint = joint
        self.filters = [WheelEkf(g, self.params) for g in geoms]
        if joint:
            n = 4 * len(geoms)
            mean = np.concatenate([f.state.mean for f in self.filters])
            cov = np.zeros((n, n))
            for i, f in enumerate(self.filters):
                cov[4 * i : 4 * i + 4, 4 * i : 4 * i + 4] = f.state.cov
            self._joint_state = ekf.GaussianState(mean, cov)

    @property
    def states(self) -> list[np.ndarray]:
        if self.joint:
            m = self._joint_state.mean
            return [m[4 * i : 4 * i + 4] for i in range(len(self.geoms))]
        return [f.state.mean for f in self.filters]

    @property
    def gate_count(self) -> int:
        return sum(f.gate_count for f in self.filters)

    def predict(self, omega_wheels: list[np.ndarray], omega_b_z: float, dt: float) -> None:
        if not self.joint:
            for f, w in zip(self.filters, omega_wheels):
                f.predict(w, omega_b_z, dt)
            return
        n = len(self.geoms)
        omega_wheels = [np.asarray(w, dtype=float) for w in omega_wheels]

        def transition(x: np.ndarray) -> np.ndarray:
            return np.concatenate(
                [
                    wheel_predict_mean(x[4 * i : 4 * i + 4], omega_wheels[i], omega_b_z, g, dt)
                    for i, g in enumerate(self.geoms)
                ]
            )

        def jacobian(x: np.ndarray) -> np.ndarray:
            f = np.zeros((4 * n, 4 * n))
            for i, g in enumerate(self.geoms):
                f[4 * i : 4 * i + 4, 4 * i : 4 * i + 4] = wheel_predict_jacobian(
                    x[4 * i : 4 * i + 4], omega_wheels[i], g, dt
                )
            return f

        q = np.zeros((4 * n, 4 * n))
        for i, f in enumerate(self.filters):
            q[4 * i : 4 * i + 4, 4 * i : 4 * i + 4] = f._process_noise(
                dt, omega_wheels[i], omega_b_z
            )
        angle_idx = tuple(4 * i + j for i in range(n) for j in ANGLE_INDICES)
        self._joint_state = ekf.predict(
            self._joint_state, transition, q, jacobian=jacobian, angle_indices=angle_idx
        )

    def update(
        self, f_wheels: list[np.ndarray], f_b: np.ndarray, omega_b: np.ndarray
    ) -> list[bool]:
        """Accelerometer update for every wheel; returns per-wheel acceptance."""
        if not self.joint:
            return [
                f.update(fw, f_b, omega_b).accepted for f, fw in zip(self.filters, f_wheels)
            ]
        n = len(self.geoms)
        f_b = np.asarray(f_b, dtype=float)
        omega_b = np.asarray(omega_b, dtype=float)
        accepted = [True] * n
        state = self._joint_state
        # Gate per wheel against its own block, then stack accepted blocks.
        blocks = []
        for i, g in enumerate(self.geoms):
            sl = slice(4 * i, 4 * i + 4)
            u = f_b + cross3(omega_b, cross3(omega_b, g.position))
            z_hat = expected_wheel_specific_force(state.mean[sl], f_b, omega_b, g)
            h_block = _update_jacobian(state.mean[sl], u, g)
            h = np.zeros((3, 4 * n))
            h[:, sl] = h_block
            nu = np.asarray(f_wheels[i], dtype=float) - z_hat
            s = h @ state.cov @ h.T + self._r_block()
            if np.any(np.abs(nu) > self.params.gate_sigma * np.sqrt(np.diag(s))):
                accepted[i] = False
                self.filters[i].gate_count += 1
                continue
            blocks.append((np.asarray(f_wheels[i], dtype=float), z_hat, h))
        if not blocks:
            return accepted
        z = np.concatenate([b[0] for b in blocks])
        z_hat = np.concatenate([b[1] for b in blocks])
        h = np.vstack([b[2] for b in blocks])
        r = np.kron(np.eye(len(blocks)), self._r_block())
        nu = z - z_hat
        s = h @ state.cov @ h.T + r
        k = np.linalg.solve(s, h @ state.cov).T
        mean = state.mean + k @ nu
        a = np.eye(mean.size) - k @ h
        cov = a @ state.cov @ a.T + k @ r @ k.T
        cov = 0.5 * (cov + cov.T)
        for i in range(n):
            mean[4 * i + ALPHA] = angle_wrap(mean[4 * i + ALPHA])
            mean[4 * i + BETA] = angle_wrap(mean[4 * i + BETA])
        self._joint_state = ekf.GaussianState(mean, cov)
        return accepted

    def _r_block(self) -> np.ndarray:
        sa = self.params.accel_noise
        return np.eye(3) * (sa * sa) * self.params.accel_inflation
