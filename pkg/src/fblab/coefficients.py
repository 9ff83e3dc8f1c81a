"""Diffusion-matrix models with a point discontinuity at the origin.

Three models are supported:

* ``identity``   -- the Laplacian, a = I.
* ``planar2d``   -- 2D model a = I + eps * (x_perp (x) x_perp) / |x|^2, i.e.
                    entries [[1 + eps*x2^2/|x|^2, -eps*x1*x2/|x|^2],
                             [-eps*x1*x2/|x|^2,   1 + eps*x1^2/|x|^2]].
* ``radial_nd``  -- nD model a_ij = delta_ij + eps * x_i x_j / |x|^2.

All models are homogeneous of degree zero in x and hence discontinuous at the
origin; evaluation at x = 0 is an explicit error rather than a limit.  The
quadratic form of the planar model collapses to
|xi|^2 + eps*(x1*xi2 - x2*xi1)^2/|x|^2, which pins the ellipticity constants
at min(1, 1+eps) and max(1, 1+eps).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EllipticityError, OriginEvaluationError

IDENTITY = "identity"
PLANAR2D = "planar2d"
RADIAL_ND = "radial_nd"

_KINDS = (IDENTITY, PLANAR2D, RADIAL_ND)


@dataclass(frozen=True)
class CoefficientModel:
    """A diffusion matrix model: which perturbation and its strength epsilon.

    ``n`` is the ambient dimension and is only meaningful for ``radial_nd``
    (the planar model is intrinsically 2D).  Identity ignores epsilon.
    """

    kind: str
    epsilon: float = 0.0
    n: int = 2

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == IDENTITY:
            object.__setattr__(self, "epsilon", 0.0)
        elif 1.0 + self.epsilon <= 0.0:
            raise EllipticityError(
                f"model requires 1 + epsilon > 0, got epsilon = {self.epsilon}"
            )
        if self.kind == PLANAR2D:
            object.__setattr__(self, "n", 2)
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got n = {self.n}")


@dataclass(frozen=True)
class EllipticityBounds:
    """Uniform ellipticity constants 0 < lam <= Lam of a model."""

    lam: float
    Lam: float

    def __post_init__(self):
        if not (0.0 < self.lam <= self.Lam):
            raise EllipticityError(f"invalid bounds ({self.lam}, {self.Lam})")


def _check_point(model: CoefficientModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1D point")
    if model.kind == PLANAR2D and x.size != 2:
        raise ValueError("planar2d model is two-dimensional")
    if model.kind == RADIAL_ND and x.size != model.n:
        raise ValueError(f"expected a point in dimension {model.n}, got {x.size}")
    if model.kind != IDENTITY and not np.any(x != 0.0):
        raise OriginEvaluationError("matrix is undefined at x = 0 for discontinuous models")
    return x


def evaluate_matrix(model: CoefficientModel, x) -> np.ndarray:
    """Evaluate the diffusion matrix a(x).

    Symmetric, homogeneous of degree zero in x, eigenvalues within the
    ellipticity bounds.  Raises OriginEvaluationError at x = 0 for the
    discontinuous models.
    """
    x = _check_point(model, x)
    n = x.size
    if model.kind == IDENTITY:
        return np.eye(n)
    r2 = float(x @ x)
    if model.kind == PLANAR2D:
        x1, x2 = x
        e = model.epsilon / r2
        return np.array(
            [
                [1.0 + e * x2 * x2, -e * x1 * x2],
                [-e * x1 * x2, 1.0 + e * x1 * x1],
            ]
        )
    # radial_nd: rank-one perturbation along x
    return np.eye(n) + (model.epsilon / r2) * np.outer(x, x)


def quadratic_form(model: CoefficientModel, x, xi) -> float:
    """Evaluate a_ij(x) xi_i xi_j through the closed-form identity.

    planar2d:  |xi|^2 + eps*(x1*xi2 - x2*xi1)^2 / |x|^2
    radial_nd: |xi|^2 + eps*(x . xi)^2 / |x|^2
    """
    x = _check_point(model, x)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != x.shape:
        raise ValueError("xi must have the same dimension as x")
    base = float(xi @ xi)
    if model.kind == IDENTITY:
        return base
    r2 = float(x @ x)
    if model.kind == PLANAR2D:
        cross = x[0] * xi[1] - x[1] * xi[0]
        return base + model.epsilon * cross * cross / r2
    dot = float(x @ xi)
    return base + model.epsilon * dot * dot / r2


def ellipticity_bounds(model: CoefficientModel) -> EllipticityBounds:
    """Tight uniform ellipticity constants (attained by radial/tangential xi)."""
    lam = min(1.0, 1.0 + model.epsilon)
    Lam = max(1.0, 1.0 + model.epsilon)
    return EllipticityBounds(lam, Lam)
