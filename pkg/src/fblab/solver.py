"""Penalized finite-difference solver for  L v = v^p  on the truncated disk.

The nonlinearity (v^0 meaning the indicator of {v > 0}) is smoothed by a
monotone family phi_delta with phi_delta(s) = 0 for s <= 0 and = s^p for
s >= delta; the solver fixes the equation and continues in the smoothing
scale delta instead, warm-starting each stage.  Each stage runs a damped
Newton iteration on  F(v) = L_h v - phi_delta(v)  whose Jacobian keeps the
M-matrix sign pattern (phi' >= 0 only strengthens the diagonal), with a
Picard under-relaxation fallback.  Dirichlet data g >= 0 is imposed at r = 1;
the artificial inner circle at r_min defaults to degree-beta homogeneous
extrapolation off the first interior row, with plain zero as the degenerate
alternative.

The discrete maximum principle of the M-matrix stencil keeps iterates within
barrier bounds: L(r^2) = 4 + 2*eps makes r^2/(4+2*eps) the natural barrier,
and the exact discrete solution is nonnegative, so any undershoot is residual
noise rather than scheme failure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .coefficients import IDENTITY, PLANAR2D, CoefficientModel
from .errors import GridResolutionError, SolverConvergenceError
from .grids import LOGPOLAR, FieldMeta, PolarField, PolarGrid
from .polar_operator import apply_stencil, power_rhs, stencil_coefficients
from .profiles import beta_exponent, closed_form_p0

INNER_HOMOGENEOUS = "homogeneous"
INNER_ZERO = "zero"


# ---------------------------------------------------------------------------
# penalty family
# ---------------------------------------------------------------------------

def _smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _smoothstep_prime(u: np.ndarray) -> np.ndarray:
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 6.0 * u * (1.0 - u), 0.0)


@dataclass(frozen=True)
class PenaltyFamily:
    """Monotone smoothing phi_delta of s -> s^p (indicator of s > 0 for p = 0).

    phi_delta(s) = s^p * sigma(s/delta) with sigma a cubic smoothstep, so
    phi_delta vanishes for s <= 0, equals s^p beyond delta, and is C^1 and
    nondecreasing in between (the qualitative properties the penalization
    needs; smoother bump choices change nothing downstream).
    """

    delta: float
    p: float

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")

    def phi(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        sigma = _smoothstep(s / self.delta)
        if self.p == 0.0:
            return sigma
        return np.where(s > 0.0, np.maximum(s, 0.0) ** self.p, 0.0) * sigma

    def dphi(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        u = s / self.delta
        sigma = _smoothstep(u)
        dsigma = _smoothstep_prime(u) / self.delta
        if self.p == 0.0:
            return dsigma
        pos = s > 0.0
        s_safe = np.where(pos, s, 1.0)
        power = np.where(pos, s_safe**self.p, 0.0)
        dpower = np.where(pos, self.p * s_safe ** (self.p - 1.0), 0.0)
        return dpower * sigma + power * dsigma


# ---------------------------------------------------------------------------
# boundary data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryData:
    """Named nonnegative trace generator for r = 1.

    kinds: ``closed_form`` (the p = 0 cone profile for the model's epsilon),
    ``half_plane`` (the one-dimensional profile c_p * (sin theta)_+^beta),
    ``tabulated`` (periodic linear interpolation of given samples), ``zero``.
    """

    kind: str
    epsilon: float | None = None
    p: float | None = None
    theta: np.ndarray | None = None
    values: np.ndarray | None = None

    def resolved(self, p: float, epsilon: float) -> "BoundaryData":
        """Fill parameters left unset from the solve configuration."""
        if self.kind == "closed_form" and self.epsilon is None:
            return BoundaryData(self.kind, epsilon=epsilon)
        if self.kind == "half_plane" and self.p is None:
            return BoundaryData(self.kind, p=p)
        return self

    def trace(self, theta_values: np.ndarray) -> np.ndarray:
        th = np.asarray(theta_values, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(th)
        if self.kind == "closed_form":
            prof = closed_form_p0(self.epsilon, n_samples=9)
            a, omega, alpha = prof.a_eps, prof.omega_eps, prof.alpha
            return np.where((th > 0.0) & (th < alpha),
                            a * (1.0 - np.cos(omega * th)), 0.0)
        if self.kind == "half_plane":
            beta = beta_exponent(self.p)
            c = (beta * (beta - 1.0)) ** (-1.0 / (1.0 - self.p))
            return c * np.maximum(np.sin(th), 0.0) ** beta
        if self.kind == "tabulated":
            return np.interp(th, self.theta, self.values, period=2.0 * np.pi)
        raise ValueError(f"unknown boundary kind {self.kind!r}")


def closed_form_boundary(epsilon: float | None = None) -> BoundaryData:
    return BoundaryData("closed_form", epsilon=epsilon)


def half_plane_boundary(p: float | None = None) -> BoundaryData:
    return BoundaryData("half_plane", p=p)


def tabulated_boundary(theta, values) -> BoundaryData:
    theta = np.asarray(theta, dtype=float)
    values = np.asarray(values, dtype=float)
    if theta.shape != values.shape or theta.ndim != 1:
        raise ValueError("tabulated boundary needs matching 1D theta/values")
    if np.min(values) < 0.0:
        raise ValueError("boundary data must be nonnegative")
    return BoundaryData("tabulated", theta=theta, values=values)


def zero_boundary() -> BoundaryData:
    return BoundaryData("zero")


def profile_boundary(profile) -> BoundaryData:
    """Tabulated trace of r^beta * g(theta) at r = 1 from an angular profile."""
    return tabulated_boundary(profile.theta_samples, profile.g_samples)


# ---------------------------------------------------------------------------
# configuration and solution records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveConfig:
    model: CoefficientModel
    p: float
    grid: PolarGrid
    boundary: BoundaryData
    penalty_schedule: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    residual_tol: float = 1e-8
    max_iters: int = 60
    damping: float = 0.5
    inner_bc: str = INNER_HOMOGENEOUS
    kappa: float = 1.0

    def __post_init__(self):
        if self.model.kind not in (IDENTITY, PLANAR2D):
            raise ValueError("solve supports the 2D models (identity, planar2d) only")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")
        if self.grid.r_min > 0.05:
            raise ValueError(f"truncation radius must be <= 0.05, got {self.grid.r_min}")
        sched = tuple(float(d) for d in self.penalty_schedule)
        if not sched or any(d <= 0.0 for d in sched):
            raise ValueError("penalty schedule must be positive")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("penalty schedule must be strictly decreasing")
        object.__setattr__(self, "penalty_schedule", sched)
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if self.inner_bc not in (INNER_HOMOGENEOUS, INNER_ZERO):
            raise ValueError(f"unknown inner boundary policy {self.inner_bc!r}")
        boundary = self.boundary.resolved(self.p, self.model.epsilon)
        g = boundary.trace(self.grid.theta_values)
        if np.min(g) < 0.0:
            raise ValueError("boundary data must be nonnegative")
        object.__setattr__(self, "boundary", boundary)

    @property
    def beta(self) -> float:
        return beta_exponent(self.p)


@dataclass(frozen=True)
class FreeBoundary:
    """Per-radius threshold crossings: arcs[i] lists (entry, exit) angle pairs."""

    radii: np.ndarray
    arcs: tuple

    def widths(self) -> list:
        out = []
        for pairs in self.arcs:
            out.append([
                float((b - a) % (2.0 * np.pi)) for (a, b) in pairs
            ])
        return out


@dataclass(frozen=True)
class Solution:
    field: PolarField
    stage_deltas: tuple
    stage_residuals: tuple
    stage_iterations: tuple
    converged: bool
    monotone_continuation: bool
    positivity_fraction: float
    positivity_mask: np.ndarray
    free_boundary: FreeBoundary
    min_value_raw: float
    iteration_log: tuple = dc_field(default=(), repr=False)


# ---------------------------------------------------------------------------
# operator assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorHandle:
    """Assembled linear system: stencil rows at interior nodes, Dirichlet row
    at r = 1, extrapolation (or zero) row at r_min."""

    grid: PolarGrid
    model: CoefficientModel
    matrix: sp.csr_matrix
    rhs: np.ndarray
    interior_mask: np.ndarray
    row_scale: np.ndarray

    @property
    def n(self) -> int:
        return self.grid.n_r * self.grid.n_theta

    def flatten(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float).reshape(self.n)

    def unflatten(self, vec: np.ndarray) -> np.ndarray:
        return vec.reshape(self.grid.n_r, self.grid.n_theta)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Matrix action reshaped to the grid (stencil at interior rows)."""
        return self.unflatten(self.matrix @ self.flatten(values))


def assemble_operator(config: SolveConfig) -> OperatorHandle:
    """Build the sparse system for the 5-point polar stencil plus boundary rows.

    Raises GridResolutionError when the centered first-derivative term breaks
    the M-matrix sign pattern (off-diagonals of the stencil must stay
    nonnegative), which happens only on grids too coarse for their r_min.
    """
    grid, model = config.grid, config.model
    n_r, n_th = grid.n_r, grid.n_theta
    c_lo, c_center, c_hi, c_th = stencil_coefficients(grid, model)
    if np.any(c_lo < 0.0) or np.any(c_hi < 0.0) or np.any(c_th < 0.0):
        raise GridResolutionError(
            "stencil loses the M-matrix sign pattern; refine the radial grid"
        )

    rows, cols, data = [], [], []
    j = np.arange(n_th)

    def node(i, jj):
        return i * n_th + jj

    for i in range(1, n_r - 1):
        k = i - 1
        rows.extend([node(i, j)] * 5)
        # order: center, r-down, r-up, theta-minus, theta-plus
        cols.append(node(i, j))
        cols.append(node(i - 1, j))
        cols.append(node(i + 1, j))
        cols.append(node(i, (j - 1) % n_th))
        cols.append(node(i, (j + 1) % n_th))
        data.extend([
            np.full(n_th, c_center[k]),
            np.full(n_th, c_lo[k]),
            np.full(n_th, c_hi[k]),
            np.full(n_th, c_th[k]),
            np.full(n_th, c_th[k]),
        ])

    # outer Dirichlet row: v = g(theta)
    rows.append(node(n_r - 1, j))
    cols.append(node(n_r - 1, j))
    data.append(np.ones(n_th))

    # inner row: homogeneous extrapolation v0 = (r0/r1)^beta * v1, or v0 = 0
    rows.append(node(0, j))
    cols.append(node(0, j))
    data.append(np.ones(n_th))
    if config.inner_bc == INNER_HOMOGENEOUS:
        c_extrap = (grid.r_values[0] / grid.r_values[1]) ** config.beta
        rows.append(node(0, j))
        cols.append(node(1, j))
        data.append(np.full(n_th, -c_extrap))

    rows = np.concatenate([np.asarray(r) for r in _aslist(rows)])
    cols = np.concatenate([np.asarray(c) for c in _aslist(cols)])
    data = np.concatenate(data)
    matrix = sp.csr_matrix((data, (rows, cols)), shape=(n_r * n_th, n_r * n_th))

    g = config.boundary.trace(grid.theta_values)
    rhs = np.zeros(n_r * n_th)
    rhs[(n_r - 1) * n_th:] = g

    interior = np.zeros(n_r * n_th, dtype=bool)
    interior[n_th: (n_r - 1) * n_th] = True

    # equilibration: log-polar stencils carry a 1/r^2 factor; scale it out of
    # the linear solves so the factorization sees O(1/h^2) rows everywhere
    scale = np.ones(n_r * n_th)
    if grid.kind == LOGPOLAR:
        r2 = np.repeat(grid.r_values**2, n_th)
        scale[interior] = r2[interior]
    return OperatorHandle(grid, model, matrix, rhs, interior, scale)


def _aslist(items):
    return [np.asarray(x) for x in items]


def m_matrix_violations(handle: OperatorHandle) -> int:
    """Count sign-pattern violations of -L_h (diag > 0, off-diag <= 0)."""
    A = handle.matrix.tocoo()
    bad = 0
    interior = handle.interior_mask
    for r, c, v in zip(A.row, A.col, A.data):
        if not interior[r]:
            continue
        if r == c:
            if not v < 0.0:
                bad += 1
        elif v < 0.0:
            bad += 1
    return bad


# ---------------------------------------------------------------------------
# nonlinear solves
# ---------------------------------------------------------------------------

def _nonlinear_residual(handle, penalty, v):
    F = handle.matrix @ v - handle.rhs
    F[handle.interior_mask] -= penalty.phi(v[handle.interior_mask])
    return F


def solve_penalized(config: SolveConfig, delta: float,
                    v0: np.ndarray | None = None,
                    handle: OperatorHandle | None = None):
    """Damped-Newton solve of L_h v = phi_delta(v) with Dirichlet data.

    Returns (values, info) where values has the grid's shape and info carries
    the iteration log.  Raises SolverConvergenceError (with the log attached)
    if max_iters is exhausted.
    """
    if handle is None:
        handle = assemble_operator(config)
    penalty = PenaltyFamily(delta, config.p)
    n = handle.n
    if v0 is None:
        v = _default_initial_guess(config, handle)
    else:
        v = handle.flatten(np.array(v0, dtype=float)).copy()

    log = []
    scale = handle.row_scale
    tol = config.residual_tol
    picard_steps = 0
    for it in range(config.max_iters):
        F = _nonlinear_residual(handle, penalty, v)
        res = float(np.max(np.abs(F)))
        log.append((it, res))
        if res <= tol:
            info = {"iterations": it, "residual": res, "log": log,
                    "picard_steps": picard_steps}
            vmin = float(v.min())
            if vmin < -1e-6:
                warnings.warn(
                    f"penalized solve undershoots to {vmin:.3e} (delta={delta:g})",
                    RuntimeWarning,
                )
            return handle.unflatten(v), info

        J = handle.matrix.copy()
        diag_corr = np.zeros(n)
        diag_corr[handle.interior_mask] = penalty.dphi(v[handle.interior_mask])
        J = J - sp.diags(diag_corr)
        step = spsolve(sp.csr_matrix(J.multiply(scale[:, None])), -scale * F)

        lam = 1.0
        accepted = False
        while lam >= config.damping**8:
            v_try = v + lam * step
            res_try = float(np.max(np.abs(_nonlinear_residual(handle, penalty, v_try))))
            if res_try <= (1.0 - 0.25 * lam) * res:
                v = v_try
                accepted = True
                break
            lam *= config.damping
        if not accepted:
            # Picard fallback with fixed under-relaxation 0.5
            rhs = handle.rhs.copy()
            rhs[handle.interior_mask] += penalty.phi(v[handle.interior_mask])
            v_lin = spsolve(
                sp.csr_matrix(handle.matrix.multiply(scale[:, None])), scale * rhs
            )
            v = v + 0.5 * (v_lin - v)
            picard_steps += 1

    raise SolverConvergenceError(
        f"no convergence after {config.max_iters} iterations at delta = {delta:g} "
        f"(last residual {log[-1][1]:.3e})",
        log=log,
    )


def _default_initial_guess(config: SolveConfig, handle: OperatorHandle) -> np.ndarray:
    g = config.boundary.trace(config.grid.theta_values)
    v2d = config.grid.r_values[:, None] ** config.beta * g[None, :]
    return handle.flatten(v2d).copy()


def solve(config: SolveConfig) -> Solution:
    """Run the penalty continuation down the schedule and post-process.

    Produces the clamped nonnegative field, the per-stage residual record,
    the sub-grid positivity mask {v > kappa * h_local^2} and the free-boundary
    crossing angles per radius.  Stage failures propagate with their index.
    """
    handle = assemble_operator(config)
    v = _default_initial_guess(config, handle)
    stage_res, stage_iters, full_log = [], [], []
    for s, delta in enumerate(config.penalty_schedule):
        try:
            v2d, info = solve_penalized(config, delta, v0=v, handle=handle)
        except SolverConvergenceError as exc:
            raise SolverConvergenceError(
                f"stage {s} (delta = {delta:g}) failed: {exc}",
                stage=s,
                log=exc.log,
            ) from exc
        v = handle.flatten(v2d).copy()
        stage_res.append(info["residual"])
        stage_iters.append(info["iterations"])
        full_log.extend((s, it, r) for (it, r) in info["log"])

    min_raw = float(v.min())
    values = np.maximum(handle.unflatten(v), 0.0)
    meta = FieldMeta(config.p, config.model.epsilon, config.beta, "solved field")
    field = PolarField(config.grid, values, meta)

    tol = config.residual_tol
    monotone = all(
        stage_res[i + 1] <= max(stage_res[i], tol) * (1.0 + 1e-12)
        for i in range(len(stage_res) - 1)
    )
    mask = positivity_mask(field, config.kappa)
    fb = extract_free_boundary(field, config.kappa)
    return Solution(
        field=field,
        stage_deltas=tuple(config.penalty_schedule),
        stage_residuals=tuple(stage_res),
        stage_iterations=tuple(stage_iters),
        converged=True,
        monotone_continuation=monotone,
        positivity_fraction=float(mask.mean()),
        positivity_mask=mask,
        free_boundary=fb,
        min_value_raw=min_raw,
        iteration_log=tuple(full_log),
    )


# ---------------------------------------------------------------------------
# post-processing
# ---------------------------------------------------------------------------

def positivity_mask(field: PolarField, kappa: float = 1.0) -> np.ndarray:
    """Sub-grid positivity set {v > kappa * h_local(r)^2}."""
    tau = kappa * field.grid.local_mesh_width() ** 2
    return field.values > tau[:, None]


def extract_free_boundary(field: PolarField, kappa: float = 1.0) -> FreeBoundary:
    """Threshold crossing angles per radius row.

    The mask edge selects the trustworthy nodes (above the penalization
    smear); the crossing itself is the zero of a linear fit to sqrt(v) at the
    two nodes inside the edge, exact for the quadratic contact of the p = 0
    problem.  Rows whose arcs are thinner than three nodes report nothing.
    """
    grid = field.grid
    v = field.values
    tau = kappa * grid.local_mesh_width() ** 2
    dth = grid.dtheta
    two_pi = 2.0 * np.pi
    arcs_per_row = []
    for i in range(grid.n_r):
        row = v[i]
        mask = row > tau[i]
        count = int(mask.sum())
        if count < 3 or count == grid.n_theta:
            arcs_per_row.append(())
            continue
        z = np.sqrt(np.maximum(row, 0.0))
        prev = np.roll(mask, 1)
        entries = np.nonzero(mask & ~prev)[0]
        pairs = []
        for j0 in entries:
            # walk to the arc's exit
            j1 = j0
            while mask[(j1 + 1) % grid.n_theta]:
                j1 = j1 + 1
                if j1 - j0 >= grid.n_theta:
                    break
            if j1 - j0 < 2:
                continue
            entry = _edge_zero(z, grid, j0, +1, dth)
            exit_ = _edge_zero(z, grid, j1 % grid.n_theta, -1, dth)
            pairs.append((entry % two_pi, exit_ % two_pi))
        arcs_per_row.append(tuple(pairs))
    return FreeBoundary(grid.r_values.copy(), tuple(arcs_per_row))


def _edge_zero(z: np.ndarray, grid: PolarGrid, j_edge: int, direction: int,
               dth: float) -> float:
    """Zero of the line through sqrt(v) at the edge node and its inward neighbor."""
    n = grid.n_theta
    j_in = (j_edge + direction) % n
    z0 = z[j_edge]
    z1 = z[j_in]
    theta0 = grid.theta_values[j_edge]
    if z1 > z0:
        offset = z0 * dth / (z1 - z0)
    else:
        offset = 0.5 * dth  # flat data: fall back to the cell midpoint
    return theta0 - direction * offset


@dataclass(frozen=True)
class ResidualReport:
    positive_sup: float
    positive_rms: float
    zero_sup: float
    zero_rms: float
    n_positive: int
    n_zero: int


def residual_check(solution: Solution, model: CoefficientModel, p: float,
                   positive_floor: float | None = None) -> ResidualReport:
    """Norms of L_h v - v^p on {v > floor} and of L_h v on the clamped zero set.

    The floor defaults to the final penalty scale, below which the smoothed
    and exact right-hand sides differ by construction.  RMS is the plain
    root-mean-square over the masked interior nodes.
    """
    field = solution.field
    if positive_floor is None:
        positive_floor = solution.stage_deltas[-1]
    vals = field.values
    L = apply_stencil(vals, field.grid, model)
    v_int = vals[1:-1]
    res = L - power_rhs(v_int, p)
    pos = v_int > positive_floor
    zero = v_int == 0.0

    def norms(arr, mask):
        if не := not np.any(mask):
            return 0.0, 0.0
        m = arr[mask]
        return float(np.max(np.abs(m))), float(np.sqrt(np.mean(m * m)))

    pos_sup, pos_rms = norms(res, pos)
    zero_sup, zero_rms = norms(L, zero)
    return ResidualReport(pos_sup, pos_rms, zero_sup, zero_rms,
                          int(pos.sum()), int(zero.sum()))
