"""Polar-coordinate forms of the operator and the log-polar cylinder residual.

In polar coordinates the three coefficient models produce mixed-derivative-free
operators:

    identity   L v = v_rr + v_r/r + v_tt/r^2                  (Laplacian)
    planar2d   L v = v_rr + (1+eps)*(v_r/r + v_tt/r^2)
    radial_nd  L v = (1+eps)*v_rr + v_r/r + v_tt/r^2          (on-axis form)

(v_tt denotes the second angular derivative.)  The absence of a mixed stencil
is what makes a plain 5-point discretization possible.  On log-polar grids the
same operators are differenced in s = ln r, where they read

    identity   r^2 L v = v_ss + v_tt
    planar2d   r^2 L v = v_ss + eps*v_s + (1+eps)*v_tt
    radial_nd  r^2 L v = (1+eps)*v_ss - eps*v_s + v_tt

Substituting r = e^{-t}, w(t,theta) = v/r^beta with beta = 2/(1-p) turns
L v = v^p into an autonomous cylinder equation; for the planar model

    R(w) = w_tt - (2*beta+eps)*w_t + (1+eps)*w_theta_theta
           + beta*(beta+eps)*w - w^p = 0,

and the defining identity R(w) = r^{2-beta} * (L v - v^p) is what the tests
check (the residual of the constant w = 1/(2*(2+eps)) at p = 0 vanishes, which
fixes the sign and coefficient pattern).
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator

from .coefficients import IDENTITY, PLANAR2D, RADIAL_ND, CoefficientModel
from .errors import GridResolutionError, MissingBetaError
from .grids import LOGPOLAR, UNIFORM_R, FieldMeta, PolarField, PolarGrid


def power_rhs(values: np.ndarray, p: float) -> np.ndarray:
    """v^p with the convention v^0 = indicator of {v > 0}; 0 on {v <= 0}."""
    if p == 0.0:
        return (values > 0.0).astype(float)
    return np.where(values > 0.0, np.maximum(values, 0.0) ** p, 0.0)


def stencil_coefficients(grid: PolarGrid, model: CoefficientModel):
    """Radial profiles of the 5-point stencil on the interior rows.

    Returns (c_lo, c_center, c_hi, c_th) with shape (n_r - 2,): the weights of
    the lower/upper radial neighbor, the center node, and each angular
    neighbor.  The center weight already includes the -2*c_th angular part.
    """
    if grid.n_r < 3:
        raise GridResolutionError("need at least 3 radial rows for the stencil")
    eps = model.epsilon
    r = grid.r_values[1:-1]
    if grid.kind == LOGPOLAR:
        ds = grid.radial_spacing
        dth = grid.dtheta
        inv_r2 = 1.0 / (r * r)
        if model.kind == RADIAL_ND:
            a_ss, a_s, a_th = 1.0 + eps, -eps, 1.0
        else:  # planar2d; identity is its eps = 0 case
            a_ss, a_s, a_th = 1.0, eps, 1.0 + eps
        c_lo = inv_r2 * (a_ss / ds**2 - a_s / (2.0 * ds))
        c_hi = inv_r2 * (a_ss / ds**2 + a_s / (2.0 * ds))
        c_th = inv_r2 * (a_th / dth**2)
        c_center = -2.0 * inv_r2 * a_ss / ds**2 - 2.0 * c_th
        return c_lo, c_center, c_hi, c_th
    dr = grid.radial_spacing
    dth = grid.dtheta
    if model.kind == RADIAL_ND:
        a_rr, a_r, a_th = 1.0 + eps, 1.0, 1.0
    else:
        a_rr, a_r, a_th = 1.0, 1.0 + eps, 1.0 + eps
    c_lo = a_rr / dr**2 - a_r / (2.0 * r * dr)
    c_hi = a_rr / dr**2 + a_r / (2.0 * r * dr)
    c_th = a_th / (r * r * dth**2)
    c_center = -2.0 * a_rr / dr**2 - 2.0 * c_th
    return c_lo, c_center, c_hi, c_th


def apply_stencil(values: np.ndarray, grid: PolarGrid, model: CoefficientModel) -> np.ndarray:
    """Second-order centered approximation of L v on the interior rows.

    Returns an (n_r - 2, n_theta) array aligned with grid.r_values[1:-1].
    """
    c_lo, c_center, c_hi, c_th = stencil_coefficients(grid, model)
    v = values
    th_neighbors = np.roll(v[1:-1], 1, axis=1) + np.roll(v[1:-1], -1, axis=1)
    return (
        c_lo[:, None] * v[:-2]
        + c_center[:, None] * v[1:-1]
        + c_hi[:, None] * v[2:]
        + c_th[:, None] * th_neighbors
    )


def apply_polar(field: PolarField, model: CoefficientModel) -> PolarField:
    """Apply the polar form of L to a field; boundary rows come back as NaN."""
    out = np.full_like(field.values, np.nan)
    out[1:-1] = apply_stencil(field.values, field.grid, model)
    return field.with_values(
        out,
        description=f"L[{field.meta.description or 'v'}]",
        boundary_invalid=True,
    )


def to_logpolar(field: PolarField) -> PolarField:
    """Transform v on the disk to w = v / r^beta on the log-polar cylinder.

    Exact pointwise when the source grid is already log-polar; r-uniform
    sources are resampled by monotone cubic interpolation in ln r onto a
    log-polar grid with the same node counts and r_min.
    """
    beta = field.meta.beta
    if beta is None:
        raise MissingBetaError("to_logpolar needs meta.beta")
    grid = field.grid
    if grid.kind == LOGPOLAR:
        w = field.values / grid.r_values[:, None] ** beta
        return PolarField(
            grid,
            w,
            FieldMeta(field.meta.p, field.meta.epsilon, beta,
                      f"w = ({field.meta.description or 'v'})/r^beta"),
        )
    target = PolarGrid.logpolar(grid.r_min, grid.n_r, grid.n_theta)
    interp = PchipInterpolator(np.log(grid.r_values), field.values, axis=0)
    v_resampled = interp(np.log(target.r_values))
    w = v_resampled / target.r_values[:, None] ** beta
    return PolarField(
        target,
        w,
        FieldMeta(field.meta.p, field.meta.epsilon, beta,
                  f"w = ({field.meta.description or 'v'})/r^beta (resampled)"),
    )


def w_residual(wfield: PolarField, model: CoefficientModel, p: float) -> PolarField:
    """Residual of the cylinder equation for w = v/r^beta, beta = 2/(1-p).

    Satisfies R(w) = r^{2-beta} * (L v - v^p) up to discretization error,
    which is the correctness oracle tying this form back to the polar one.
    Boundary rows are NaN.
    """
    grid = wfield.grid
    if grid.kind != LOGPOLAR:
        raise GridResolutionError("w_residual expects a log-polar grid")
    if grid.n_r < 3:
        raise GridResolutionError("need at least 3 radial rows for the stencil")
    beta = 2.0 / (1.0 - p)
    eps = model.epsilon
    w = wfield.values
    ds = grid.radial_spacing
    dth = grid.dtheta
    # rows are ordered by increasing r, i.e. decreasing t: d/dt = -d/ds
    w_ss = (w[2:] - 2.0 * w[1:-1] + w[:-2]) / ds**2
    w_s = (w[2:] - w[:-2]) / (2.0 * ds)
    w_tt = w_ss
    w_t = -w_s
    w_thth = (np.roll(w[1:-1], 1, axis=1) - 2.0 * w[1:-1] + np.roll(w[1:-1], -1, axis=1)) / dth**2
    w0 = w[1:-1]
    if model.kind == RADIAL_ND:
        res = (
            (1.0 + eps) * w_tt
            - ((1.0 + eps) * (2.0 * beta - 1.0) + 1.0) * w_t
            + w_thth
            + ((1.0 + eps) * beta * (beta - 1.0) + beta) * w0
            - power_rhs(w0, p)
        )
    else:
        res = (
            w_tt
            - (2.0 * beta + eps) * w_t
            + (1.0 + eps) * w_thth
            + beta * (beta + eps) * w0
            - power_rhs(w0, p)
        )
    out = np.full_like(w, np.nan)
    out[1:-1] = res
    return PolarField(
        grid,
        out,
        FieldMeta(p, wfield.meta.epsilon, beta, "cylinder residual R(w)"),
        boundary_invalid=True,
    )
