"""State-vector layouts, box representations and the Gaussian state container.

Every tracked target is a bounding box whose estimated quantities depend on
the chosen parameterization: the box centre is always part of the state,
size enters either directly (width/height), as area and aspect ratio, or as
aspect ratio and height, with or without velocity components.  All other
modules consume the layout metadata defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidDt, NonPositiveSize

# Tolerances for validating covariance matrices on construction.
SYMMETRY_RTOL = 1e-9
PSD_RTOL = 1e-9


class _Layout(NamedTuple):
    state_dim: int
    # State index of each of the four measured components, in measurement order.
    observed: tuple[int, int, int, int]
    # State index of the velocity of each measured component, None if the
    # component is modeled without velocity.
    velocity: tuple[int | None, int | None, int | None, int | None]
    labels: tuple[str, ...]


class Parameterization(Enum):
    """Supported state layouts.

    CXCYWH       [cx, cy, vcx, vcy, w, h]            centre velocities only
    CXCYWH_V     [cx, cy, vcx, vcy, w, vw, h, vh]    size velocities too
    CXCYSR       [cx, cy, s, r, vcx, vcy, vs]        s = w*h, r = w/h (no vr)
    CXCYHA       [cx, cy, a, h, vcx, vcy, va, vh]    a = w/h
    RANDOM_WALK  [cx, cy, w, h]                      no velocities at all

    The measurement vector is always 4-dimensional: the four observed
    components in the order given by ``observed_indices``.
    """

    CXCYWH = "cxcywh"
    CXCYWH_V = "cxcywh-v"
    CXCYSR = "cxcysr"
    CXCYHA = "cxcyha"
    RANDOM_WALK = "rw"

    @property
    def state_dim(self) -> int:
        return _LAYOUTS[self].state_dim

    @property
    def meas_dim(self) -> int:
        return 4

    @property
    def observed_indices(self) -> tuple[int, int, int, int]:
        """State indices of the four measured components."""
        return _LAYOUTS[self].observed

    @property
    def velocity_indices(self) -> tuple[int | None, int | None, int | None, int | None]:
        """State indices of each measured component's velocity (None if absent)."""
        return _LAYOUTS[self].velocity

    @property
    def state_labels(self) -> tuple[str, ...]:
        return _LAYOUTS[self].labels


_LAYOUTS = {
    Parameterization.CXCYWH: _Layout(
        6, (0, 1, 4, 5), (2, 3, None, None), ("cx", "cy", "vcx", "vcy", "w", "h")
    ),
    Parameterization.CXCYWH_V: _Layout(
        8, (0, 1, 4, 6), (2, 3, 5, 7), ("cx", "cy", "vcx", "vcy", "w", "vw", "h", "vh")
    ),
    Parameterization.CXCYSR: _Layout(
        7, (0, 1, 2, 3), (4, 5, 6, None), ("cx", "cy", "s", "r", "vcx", "vcy", "vs")
    ),
    Parameterization.CXCYHA: _Layout(
        8, (0, 1, 2, 3), (4, 5, 6, 7), ("cx", "cy", "a", "h", "vcx", "vcy", "va", "vh")
    ),
    Parameterization.RANDOM_WALK: _Layout(
        4, (0, 1, 2, 3), (None, None, None, None), ("cx", "cy", "w", "h")
    ),
}


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, centre-based.

    (cx, cy) is the geometric centre of the box; corner-based inputs are
    converted at the I/O boundary only.
    """

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            v = getattr(self, name)
            object.__setattr__(self, name, float(v))
        if not all(math.isfinite(getattr(self, n)) for n in ("cx", "cy", "w", "h")):
            raise ValueError(f"box fields must be finite, got {self}")
        if self.w <= 0 or self.h <= 0:
            raise NonPositiveSize(f"box size must be positive, got w={self.w}, h={self.h}")


@dataclass(frozen=True)
class NoiseParams:
    """Process and measurement noise levels plus the sampling period.

    ``sigma_process`` holds the per-axis process standard deviations in the
    order of the measured components (centre x, centre y, then the two size
    components of the active parameterization).  ``sigma_meas`` holds the
    measurement standard deviations in the same order.  Either may be given
    as a single scalar, which is broadcast to all four axes.
    """

    dt: float = 1.0
    sigma_process: float | Sequence[float] = 1.0
    sigma_meas: float | Sequence[float] = 1.0

    def __post_init__(self):
        dt = float(self.dt)
        if not math.isfinite(dt) or dt <= 0:
            raise InvalidDt(f"dt must be positive and finite, got {dt}")
        object.__setattr__(self, "dt", dt)
        for name in ("sigma_process", "sigma_meas"):
            object.__setattr__(self, name, _as_sigma_tuple(getattr(self, name), name))


def _as_sigma_tuple(value, name: str) -> tuple[float, float, float, float]:
    if np.isscalar(value):
        values = (float(value),) * 4
    else:
        values = tuple(float(v) for v in value)
        if len(values) != 4:
            raise ValueError(f"{name} needs exactly 4 values, got {len(values)}")
    for v in values:
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{name} entries must be finite and >= 0, got {v}")
    return values


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Mean and covariance of one target's state.

    The covariance is validated on construction (finite, symmetric to within
    ``SYMMETRY_RTOL`` relative tolerance, eigenvalues no smaller than
    ``-PSD_RTOL * trace``) and then symmetrized, since floating-point drift
    in F P F^T products is unavoidable.  Both arrays are stored read-only so
    instances can be shared freely.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1:
            raise ValueError(f"mean must be a vector, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        if not np.all(np.isfinite(mean)):
            raise ValueError("mean must be finite")
        if not np.all(np.isfinite(cov)):
            raise ValueError("cov must be finite")
        scale = float(np.max(np.abs(cov))) if cov.size else 0.0
        asym = float(np.max(np.abs(cov - cov.T))) if cov.size else 0.0
        if asym > SYMMETRY_RTOL * max(scale, 1.0):
            raise ValueError(f"cov is not symmetric (max asymmetry {asym:g})")
        cov = 0.5 * (cov + cov.T)
        trace = float(np.trace(cov))
        min_eig = float(np.linalg.eigvalsh(cov).min()) if cov.size else 0.0
        if min_eig < -PSD_RTOL * max(trace, 0.0) - 1e-300:
            raise ValueError(f"cov is not positive semidefinite (min eigenvalue {min_eig:g})")
        mean = mean.copy()
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class Detection:
    """One detector output: a box, a confidence and its 1-based frame index."""

    frame: int
    box: BoundingBox
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "frame", int(self.frame))
        object.__setattr__(self, "confidence", float(self.confidence))
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        if not math.isfinite(self.confidence):
            raise ValueError("confidence must be finite")


def to_measurement(box: BoundingBox, param: Parameterization) -> np.ndarray:
    """Convert a box to the 4-vector observed under ``param``.

    CXCYWH, CXCYWH_V and RANDOM_WALK observe [cx, cy, w, h]; CXCYSR observes
    [cx, cy, w*h, w/h]; CXCYHA observes [cx, cy, w/h, h].
    """
    if param is Parameterization.CXCYSR:
        return np.array([box.cx, box.cy, box.w * box.h, box.w / box.h])
    if param is Parameterization.CXCYHA:
        return np.array([box.cx, box.cy, box.w / box.h, box.h])
    return np.array([box.cx, box.cy, box.w, box.h])


def measurement_to_box(z: np.ndarray, param: Parameterization) -> BoundingBox:
    """Invert :func:`to_measurement`.

    Raises NonPositiveSize when the measurement does not describe a valid
    box (recovered width or height <= 0).
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (4,):
        raise ValueError(f"measurement must have shape (4,), got {z.shape}")
    cx, cy = float(z[0]), float(z[1])
    if param is Parameterization.CXCYSR:
        s, r = float(z[2]), float(z[3])
        if s <= 0 or r <= 0:
            raise NonPositiveSize(f"degenerate scale/ratio state: s={s}, r={r}")
        return BoundingBox(cx, cy, math.sqrt(s * r), math.sqrt(s / r))
    if param is Parameterization.CXCYHA:
        a, h = float(z[2]), float(z[3])
        if a <= 0 or h <= 0:
            raise NonPositiveSize(f"degenerate aspect/height state: a={a}, h={h}")
        return BoundingBox(cx, cy, a * h, h)
    return BoundingBox(cx, cy, float(z[2]), float(z[3]))


def embed_measurement(z: np.ndarray, param: Parameterization) -> np.ndarray:
    """Place a measurement into a full state vector with zero velocities."""
    z = np.asarray(z, dtype=float)
    if z.shape != (4,):
        raise ValueError(f"measurement must have shape (4,), got {z.shape}")
    mean = np.zeros(param.state_dim)
    mean[list(param.observed_indices)] = z
    return mean


def from_state(mean: np.ndarray, param: Parameterization) -> BoundingBox:
    """Read the bounding box out of a state vector.

    Raises NonPositiveSize when the state has left the region where it
    decodes to a valid box, which the tracker layer treats as a deletion
    signal.
    """
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (param.state_dim,):
        raise ValueError(f"state must have shape ({param.state_dim},), got {mean.shape}")
    return measurement_to_box(mean[list(param.observed_indices)], param)
