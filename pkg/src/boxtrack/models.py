"""Model matrices for the constant-velocity and random-walk box motion models.

The constant-velocity model treats each coordinate as uniform rectilinear
motion relaxed by piecewise-constant white acceleration: over one sampling
period dt an acceleration draw w adds dt^2/2 * w to the coordinate and
dt * w to its velocity.  That single shared draw is what produces the rank-1
position/velocity blocks of the process covariance

    Q_block = sigma^2 * g g^T,   g = [dt^2/2, dt]^T
            = sigma^2 * [[dt^4/4, dt^3/2],
                         [dt^3/2, dt^2  ]]

with no correlation between different axes.  Components modeled without a
velocity receive a plain sigma^2 on the diagonal; the random-walk model uses
diffusion scaling sigma^2 * dt instead so that multi-rate sequences remain
consistent.  Measurements observe a 0/1 selection of the state with
independent per-axis noise, so R is diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDt
from .state import NoiseParams, Parameterization


@dataclass(frozen=True, eq=False)
class ModelMatrices:
    """The four matrices driving one filter: transition F, process noise Q,
    measurement H and measurement noise R."""

    F: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    R: np.ndarray


def _check_dt(dt: float) -> float:
    dt = float(dt)
    if not math.isfinite(dt) or dt <= 0:
        raise InvalidDt(f"dt must be positive and finite, got {dt}")
    return dt


def build_transition_matrix(param: Parameterization, dt: float) -> np.ndarray:
    """State transition matrix: identity plus dt coupling each velocity to
    its component.  The random walk has no velocities, so F is the identity."""
    dt = _check_dt(dt)
    F = np.eye(param.state_dim)
    for pos, vel in zip(param.observed_indices, param.velocity_indices):
        if vel is not None:
            F[pos, vel] = dt
    return F


def build_process_noise(param: Parameterization, noise: NoiseParams) -> np.ndarray:
    """Process noise covariance.

    Velocity-coupled components contribute sigma^2 * g g^T with
    g = [dt^2/2, dt]^T embedded at their (position, velocity) indices; the
    factored outer-product form keeps each block exactly rank 1 and PSD.
    Velocity-free components get sigma^2 on the diagonal (sigma^2 * dt for
    the random walk).
    """
    dt = noise.dt
    Q = np.zeros((param.state_dim, param.state_dim))
    for axis, (pos, vel) in enumerate(zip(param.observed_indices, param.velocity_indices)):
        var = noise.sigma_process[axis] ** 2
        if vel is not None:
            g = np.zeros(param.state_dim)
            g[pos] = 0.5 * dt * dt
            g[vel] = dt
            Q += var * np.outer(g, g)
        elif param is Parameterization.RANDOM_WALK:
            Q[pos, pos] += var * dt
        else:
            Q[pos, pos] += var
    return Q


def build_measurement_matrix(param: Parameterization) -> np.ndarray:
    """0/1 selector mapping the state onto the four observed components."""
    H = np.zeros((param.meas_dim, param.state_dim))
    for row, pos in enumerate(param.observed_indices):
        H[row, pos] = 1.0
    return H


def build_measurement_noise(noise: NoiseParams) -> np.ndarray:
    """Diagonal measurement covariance: the per-axis noises are uncorrelated.

    For CXCYSR/CXCYHA the configured sigmas are read directly in the
    transformed units (area/ratio or ratio/height); no linearization from
    pixel sigmas is attempted.
    """
    return np.diag([s * s for s in noise.sigma_meas])


def build_model(param: Parameterization, noise: NoiseParams) -> ModelMatrices:
    """Bundle F, Q, H, R for one parameterization and noise configuration."""
    return ModelMatrices(
        F=build_transition_matrix(param, noise.dt),
        Q=build_process_noise(param, noise),
        H=build_measurement_matrix(param),
        R=build_measurement_noise(noise),
    )
