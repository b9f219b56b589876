"""Linear Kalman filter: the closed-form Bayes recursion for linear
Gaussian models.

predict:  mean' = F mean,  cov' = F cov F^T + Q
update:   K = cov H^T S^-1 with S = H cov H^T + R
          mean' = mean + K (z - H mean)
          cov'  = (I - K H) cov (I - K H)^T + K R K^T   (Joseph form)

The Joseph form costs a little more than (I - KH) cov but preserves
positive semidefiniteness under rounding.  S is always handled through a
symmetric positive-definite factorization so that a degenerate configuration
surfaces as SingularInnovation instead of silently garbage gains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SingularInnovation
from .state import GaussianState, NoiseParams, Parameterization, embed_measurement

# Condition number of S above which the innovation is treated as singular.
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class Innovation:
    """Measurement residual z - H mean, its covariance S and the squared
    Mahalanobis distance residual^T S^-1 residual."""

    residual: np.ndarray
    S: np.ndarray
    mahalanobis_sq: float


def _check_operator(name: str, M: np.ndarray, rows: int, cols: int) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (rows, cols):
        raise DimensionMismatch(f"{name} must have shape ({rows}, {cols}), got {M.shape}")
    return M


def predict(state: GaussianState, F: np.ndarray, Q: np.ndarray) -> GaussianState:
    """Propagate a Gaussian state through the linear transition model."""
    n = state.dim
    F = _check_operator("F", F, n, n)
    Q = _check_operator("Q", Q, n, n)
    mean = F @ state.mean
    cov = F @ state.cov @ F.T + Q
    return GaussianState(mean, cov)


def _factor_innovation(state: GaussianState, z: np.ndarray, H: np.ndarray, R: np.ndarray):
    n = state.dim
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise DimensionMismatch(f"z must be a vector, got shape {z.shape}")
    m = z.size
    H = _check_operator("H", H, m, n)
    R = _check_operator("R", R, m, m)
    residual = z - H @ state.mean
    S = H @ state.cov @ H.T + R
    S = 0.5 * (S + S.T)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularInnovation(f"innovation covariance condition number {cond:g}")
    try:
        factor = scipy.linalg.cho_factor(S, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SingularInnovation(f"innovation covariance is not positive definite: {exc}")
    maha = float(residual @ scipy.linalg.cho_solve(factor, residual))
    innovation = Innovation(residual=residual, S=S, mahalanobis_sq=max(maha, 0.0))
    return innovation, factor


def update(
    state: GaussianState, z: np.ndarray, H: np.ndarray, R: np.ndarray
) -> tuple[GaussianState, Innovation]:
    """Condition a predicted state on one measurement.

    Returns the posterior state together with the innovation that produced
    it.  Raises SingularInnovation when S = H cov H^T + R has condition
    number above ``MAX_CONDITION``.
    """
    innovation, factor = _factor_innovation(state, z, H, R)
    H = np.asarray(H, dtype=float)
    R = np.asarray(R, dtype=float)
    # K = cov H^T S^-1, computed as S^-1 (H cov)^T transposed back.
    gain = scipy.linalg.cho_solve(factor, H @ state.cov).T
    mean = state.mean + gain @ innovation.residual
    I_KH = np.eye(state.dim) - gain @ H
    cov = I_KH @ state.cov @ I_KH.T + gain @ R @ gain.T
    return GaussianState(mean, cov), innovation


def gating_distance(state: GaussianState, z: np.ndarray, H: np.ndarray, R: np.ndarray) -> float:
    """Squared Mahalanobis distance of a measurement from the predicted
    state, identical to the distance an update with the same inputs would
    report.  Used for association gating."""
    innovation, _ = _factor_innovation(state, z, H, R)
    return innovation.mahalanobis_sq


def initial_covariance(
    param: Parameterization, noise: NoiseParams, velocity_prior_scale: float = 10.0
) -> np.ndarray:
    """Diagonal covariance for a track seen exactly once.

    Observed components carry the matching measurement variance; velocity
    components are weakly informative at (velocity_prior_scale * sigma / dt)^2.
    """
    diag = np.zeros(param.state_dim)
    for axis, (pos, vel) in enumerate(zip(param.observed_indices, param.velocity_indices)):
        sigma = noise.sigma_meas[axis]
        diag[pos] = sigma * sigma
        if vel is not None:
            v = velocity_prior_scale * sigma / noise.dt
            diag[vel] = v * v
    return np.diag(diag)


def initiate(
    z: np.ndarray,
    param: Parameterization,
    noise: NoiseParams,
    velocity_prior_scale: float = 10.0,
) -> GaussianState:
    """Create the state for a newly observed target from its first
    measurement: observed components equal the measurement, velocities zero."""
    mean = embed_measurement(z, param)
    return GaussianState(mean, initial_covariance(param, noise, velocity_prior_scale))
