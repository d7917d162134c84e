"""Discrete-time extended Kalman filter primitives.

The stage estimators are thin wrappers around two functions: :func:`predict`
with a user-supplied transition and :func:`update` with a user-supplied
measurement model. Jacobians default to central finite differences; a stage
may pass an analytic Jacobian instead. Covariances are kept symmetric and
the update uses the Joseph form.

State or measurement components that are circular (angles) are declared by
index; means are wrapped after every step and innovations on angular
measurements are wrapped too, so filters survive phase wrap-around.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError
from .frames import angle_wrap, wrap_angles


@dataclass
class GaussianState:
    """Mean vector and covariance matrix of a Gaussian belief."""

    mean: np.ndarray
    cov: np.ndarray

    def copy(self) -> "GaussianState":
        return GaussianState(self.mean.copy(), self.cov.copy())


@dataclass
class MeasurementModel:
    """Measurement prediction function plus its noise covariance.

    Attributes
    ----------
    predict : callable
        Maps a state mean to the predicted measurement vector.
    noise : ndarray
        Measurement noise covariance R (symmetric positive definite).
    jacobian : callable, optional
        Maps a state mean to dh/dx; finite differences when omitted.
    angle_indices : sequence of int
        Measurement components whose innovation must be angle-wrapped.
    """

    predict: Callable[[np.ndarray], np.ndarray]
    noise: np.ndarray
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    angle_indices: Sequence[int] = field(default_factory=tuple)


@dataclass
class UpdateResult:
    """Outcome of one measurement update."""

    state: GaussianState
    innovation: np.ndarray
    accepted: bool
    gated: bool = False


def numeric_jacobian(
    f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h_step: float | None = None
) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``.

    Column j uses step ``h = h_step`` or ``1e-6 * max(1, |x_j|)``.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    jac = np.zeros((f0.size, x.size))
    for j in range(x.size):
        h = h_step if h_step is not None else 1e-6 * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        fp = np.asarray(f(xp), dtype=float)
        fm = np.asarray(f(xm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise DivergenceError("non-finite probe in numeric Jacobian")
        jac[:, j] = (fp - fm) / (2.0 * h)
    return jac


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


_EYE_CACHE: dict[int, np.ndarray] = {}


def _eye(n: int) -> np.ndarray:
    m = _EYE_CACHE.get(n)
    if m is None:
        m = np.eye(n)
        _EYE_CACHE[n] = m
    return m


def predict(
    state: GaussianState,
    transition: Callable[[np.ndarray], np.ndarray],
    process_noise: np.ndarray,
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None,
    angle_indices: Sequence[int] = (),
) -> GaussianState:
    """EKF time update: propagate mean through ``transition``, covariance
    through its Jacobian, and add process noise.

    Raises
    ------
    DivergenceError
        If the propagated mean is non-finite.
    """
    mean = np.asarray(transition(state.mean), dtype=float)
    if not np.all(np.isfinite(mean)):
        raise DivergenceError("transition produced non-finite state")
    f = jacobian(state.mean) if jacobian is not None else numeric_jacobian(transition, state.mean)
    cov = _symmetrize(f @ state.cov @ f.T + process_noise)
    wrap_angles(mean, angle_indices)
    return GaussianState(mean, cov)


def update(
    state: GaussianState,
    z: np.ndarray,
    model: MeasurementModel,
    gate_sigma: float | None = None,
    angle_indices: Sequence[int] = (),
) -> UpdateResult:
    """EKF measurement update with Joseph-form covariance.

    Parameters
    ----------
    state : GaussianState
    z : ndarray
        Measurement vector; its length must match the model output.
    model : MeasurementModel
    gate_sigma : float, optional
        Per-axis innovation gate; the update is skipped (``gated=True``)
        when any |innovation_i| exceeds ``gate_sigma * sqrt(S_ii)``.
    angle_indices : sequence of int
        Circular state components, wrapped after the update.

    Returns
    -------
    UpdateResult
        ``accepted`` is False when the update was gated or the innovation
        covariance was singular; the state is then returned unchanged.
    """
    z = np.asarray(z, dtype=float)
    z_hat = np.asarray(model.predict(state.mean), dtype=float)
    if z.shape != z_hat.shape:
        raise ValueError(f"measurement shape {z.shape} != model output {z_hat.shape}")
    nu = z - z_hat
    for i in model.angle_indices:
        nu[i] = angle_wrap(nu[i])

    h = (
        model.jacobian(state.mean)
        if model.jacobian is not None
        else numeric_jacobian(model.predict, state.mean)
    )
    s = h @ state.cov @ h.T + model.noise

    if gate_sigma is not None:
        s_diag = np.diag(s)
        if np.any(np.abs(nu) > gate_sigma * np.sqrt(np.maximum(s_diag, 0.0))):
            return UpdateResult(state, nu, accepted=False, gated=True)

    try:
        k = np.linalg.solve(s, h @ state.cov).T
    except np.linalg.LinAlgError:
        return UpdateResult(state, nu, accepted=False)
    if not np.all(np.isfinite(k)):
        return UpdateResult(state, nu, accepted=False)

    mean = state.mean + k @ nu
    if not np.all(np.isfinite(mean)):
        raise DivergenceError("update produced non-finite state")
    a = _eye(state.mean.size) - k @ h
    cov = _symmetrize(a @ state.cov @ a.T + k @ model.noise @ k.T)
    wrap_angles(mean, angle_indices)
    return UpdateResult(GaussianState(mean, cov), nu, accepted=True)


def is_psd(p: np.ndarray, tol: float = 1e-12) -> bool:
    """True when ``p`` is symmetric and PSD within ``tol`` (diagnostic aid)."""
    if not np.allclose(p, p.T, atol=1e-10):
        return False
    return bool(np.linalg.eigvalsh(_symmetrize(p)).min() >= -tol)
