"""Propagation of delay-measurement error into position error.

The three balancing delays define the user position implicitly; for small
measurement errors the position error is governed by the inverse of the
forward delay Jacobian. With equal, independent Gaussian errors sigma_s
on the three delays, each position-component standard deviation is
sigma_s times the Euclidean norm of the corresponding row of that
inverse, and the scalar figure of merit is the weighted spherical-error
metric

    r_xyz = 1.538 * sqrt((sigma_x^2 + sigma_y^2 + sigma_z^2) / 3).

Where the Jacobian is singular (e.g. on the symmetry axis of an
axis-aligned ground layout) the position error is effectively unbounded;
such points are reported with a ``degenerate`` flag instead of numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError
from .geometry import Constellation, Point3

#: Spherical-error-probable radius per unit standard deviation for a
#: spherically symmetric Gaussian position distribution.
SEP_COEFFICIENT = 1.538

#: Condition-number threshold marking the geometry as degenerate.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class SensitivityMatrix:
    """Derivatives of position with respect to the three delays.

    ``m[i, j]`` is d(position component i) / d(delay j), dimensionless;
    it is the inverse of the forward delay Jacobian at the user position.
    """

    m: np.ndarray
    condition_number: float

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (3, 3):
            raise InvalidInputError(f"sensitivity matrix must be 3x3, got shape {m.shape}")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class ErrorEstimate:
    """Propagated position error at one user position.

    When ``degenerate`` is set the sigma fields and ``r_xyz_m`` are NaN
    and only the condition number is meaningful.
    """

    sigma_x_m: float
    sigma_y_m: float
    sigma_z_m: float
    r_xyz_m: float
    degenerate: bool
    condition_number: float

    def to_json_dict(self) -> dict:
        def clean(v: float) -> float | None:
            return float(v) if math.isfinite(v) else None

        return {
            "sigma_x_m": clean(self.sigma_x_m),
            "sigma_y_m": clean(self.sigma_y_m),
            "sigma_z_m": clean(self.sigma_z_m),
            "r_xyz_m": clean(self.r_xyz_m),
            "degenerate": self.degenerate,
            "condition_number": clean(self.condition_number),
        }


def forward_jacobian(constellation: Constellation, user: Point3) -> np.ndarray:
    """Exact gradient of the forward delay model, one row per baseline.

    Row i is ``unit(user - A_i) - unit(user - B_i)``: the rate of change
    of baseline i's balancing delay per unit user displacement.

    Raises:
        InvalidInputError: The user coincides with a baseline endpoint,
            where the gradient is undefined.
    """
    xyz = user.as_array()
    d_a = xyz - constellation.endpoints_a
    d_b = xyz - constellation.endpoints_b
    n_a = np.linalg.norm(d_a, axis=1)
    n_b = np.linalg.norm(d_b, axis=1)
    if np.any(n_a == 0.0) or np.any(n_b == 0.0):
        raise InvalidInputError("user coincides with a baseline endpoint")
    return d_a / n_a[:, None] - d_b / n_b[:, None]


def sensitivity(constellation: Constellation, user: Point3) -> SensitivityMatrix:
    """Invert the forward Jacobian at the user position.

    Raises:
        DegenerateGeometryError: The Jacobian condition number exceeds
            ``CONDITION_LIMIT``; position error there is unbounded.
    """
    jac = forward_jacobian(constellation, user)
    svals = np.linalg.svd(jac, compute_uv=False)
    cond = math.inf if svals[-1] == 0.0 else float(svals[0] / svals[-1])
    if cond > CONDITION_LIMIT:
        raise DegenerateGeometryError(
            f"delay Jacobian condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}",
            condition_number=cond,
        )
    return SensitivityMatrix(m=np.linalg.inv(jac), condition_number=cond)


def propagate_errors(
    sens: SensitivityMatrix, sigma_s: float | Sequence[float]
) -> ErrorEstimate:
    """Propagate delay standard deviations through the sensitivity matrix.

    ``sigma_s`` is a single value applied to all three delays (the default
    modeling assumption) or a per-baseline triple. Component variances add
    in quadrature: sigma_x^2 = sum_j (m[0, j] * sigma_s_j)^2, and likewise
    for y and z.
    """
    sig = np.asarray(sigma_s, dtype=float)
    if sig.ndim == 0:
        sig = np.full(3, float(sig))
    if sig.shape != (3,):
        raise InvalidInputError(f"sigma_s must be a scalar or length-3, got shape {sig.shape}")
    if not np.all(np.isfinite(sig)) or np.any(sig < 0.0):
        raise InvalidInputError("sigma_s must be finite and >= 0")

    sigma_xyz = np.linalg.norm(sens.m * sig[None, :], axis=1)
    r_xyz = SEP_COEFFICIENT / math.sqrt(3.0) * float(np.linalg.norm(sigma_xyz))
    return ErrorEstimate(
        sigma_x_m=float(sigma_xyz[0]),
        sigma_y_m=float(sigma_xyz[1]),
        sigma_z_m=float(sigma_xyz[2]),
        r_xyz_m=r_xyz,
        degenerate=False,
        condition_number=sens.condition_number,
    )


def sep_radius(sigma: float) -> float:
    """Radius containing half the position estimates for a spherically
    symmetric Gaussian error of standard deviation ``sigma``."""
    if not (math.isfinite(sigma) and sigma >= 0.0):
        raise InvalidInputError(f"sigma must be finite and >= 0, got {sigma!r}")
    return SEP_COEFFICIENT * sigma


def point_error(
    constellation: Constellation, user: Point3, sigma_s: float | Sequence[float]
) -> ErrorEstimate:
    """Full error-propagation chain at one user position.

    Degenerate geometry is reported as a flagged estimate rather than an
    exception, so field scans can record it per point.
    """
    try:
        sens = sensitivity(constellation, user)
    except DegenerateGeometryError as exc:
        return ErrorEstimate(
            sigma_x_m=math.nan,
            sigma_y_m=math.nan,
            sigma_z_m=math.nan,
            r_xyz_m=math.nan,
            degenerate=True,
            condition_number=exc.condition_number,
        )
    return propagate_errors(sens, sigma_s)
