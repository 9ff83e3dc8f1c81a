"""Structured polar grids on the punctured disk and scalar fields on them.

Two grid kinds cover the two regimes of interest:

* ``uniform_r``  -- nodes uniform in r on [r_min, 1]; natural for
                    boundary-value solving near r = 1.
* ``logpolar``   -- nodes uniform in t = -ln r on [0, -ln r_min]; resolves
                    r -> 0 geometrically, which is what blow-up work needs.

Rows are always ordered by increasing radius; the angular axis is a uniform
periodic partition of [0, 2*pi).  Fields are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

UNIFORM_R = "uniform_r"
LOGPOLAR = "logpolar"


@dataclass(frozen=True)
class PolarGrid:
    r_values: np.ndarray
    theta_values: np.ndarray
    kind: str

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=float)
        th = np.asarray(self.theta_values, dtype=float)
        r.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "theta_values", th)
        if self.kind not in (UNIFORM_R, LOGPOLAR):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if r.ndim != 1 or r.size < 2:
            raise ValueError("need at least two radial nodes")
        if r[0] <= 0.0:
            raise ValueError("r_min must be positive")
        if np.any(np.diff(r) <= 0.0):
            raise ValueError("r_values must be strictly increasing")
        if th.ndim != 1 or th.size < 8:
            raise ValueError("need at least 8 angular nodes")
        dth = TWO_PI / th.size
        if not np.allclose(th, dth * np.arange(th.size), rtol=0.0, atol=1e-12):
            raise ValueError("theta_values must be the uniform partition of [0, 2*pi)")
        # spacing records must be consistent with the stored nodes
        if self.kind == UNIFORM_R:
            if not np.allclose(np.diff(r), r[1] - r[0], rtol=1e-10, atol=1e-14):
                raise ValueError("uniform_r grid has non-uniform radial spacing")
        else:
            s = np.log(r)
            if not np.allclose(np.diff(s), s[1] - s[0], rtol=1e-10, atol=1e-14):
                raise ValueError("logpolar grid is not uniform in ln r")

    # -- constructors ------------------------------------------------------

    @classmethod
    def uniform_r(cls, r_min: float, n_r: int, n_theta: int) -> "PolarGrid":
        r = np.linspace(float(r_min), 1.0, int(n_r))
        th = TWO_PI / int(n_theta) * np.arange(int(n_theta))
        return cls(r, th, UNIFORM_R)

    @classmethod
    def logpolar(cls, r_min: float, n_r: int, n_theta: int) -> "PolarGrid":
        s = np.linspace(np.log(float(r_min)), 0.0, int(n_r))
        th = TWO_PI / int(n_theta) * np.arange(int(n_theta))
        return cls(np.exp(s), th, LOGPOLAR)

    # -- bookkeeping -------------------------------------------------------

    @property
    def n_r(self) -> int:
        return self.r_values.size

    @property
    def n_theta(self) -> int:
        return self.theta_values.size

    @property
    def r_min(self) -> float:
        return float(self.r_values[0])

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.n_theta

    @property
    def t_values(self) -> np.ndarray:
        """t = -ln r per row (decreasing with the row index)."""
        return -np.log(self.r_values)

    @property
    def radial_spacing(self) -> float:
        """Spacing in the native radial coordinate: dr, or d(ln r) for logpolar."""
        if self.kind == UNIFORM_R:
            return float(self.r_values[1] - self.r_values[0])
        return float(np.log(self.r_values[1]) - np.log(self.r_values[0]))

    @property
    def h(self) -> float:
        """Nominal mesh parameter, max of the native spacings."""
        return max(self.radial_spacing, self.dtheta)

    def local_mesh_width(self) -> np.ndarray:
        """Physical mesh width per radial row (used for sub-grid thresholds)."""
        r = self.r_values
        if self.kind == LOGPOLAR:
            return r * max(self.radial_spacing, self.dtheta)
        return np.maximum(self.radial_spacing, r * self.dtheta)

    def same_layout(self, other: "PolarGrid") -> bool:
        return (
            self.kind == other.kind
            and self.n_r == other.n_r
            and self.n_theta == other.n_theta
            and np.allclose(self.r_values, other.r_values, rtol=1e-12, atol=0.0)
        )


@dataclass(frozen=True)
class FieldMeta:
    """Problem parameters attached to a field; beta = 2/(1-p) when both set."""

    p: float | None = None
    epsilon: float | None = None
    beta: float | None = None
    description: str = ""

    def __post_init__(self):
        if self.p is not None and self.beta is not None:
            if abs(self.beta - 2.0 / (1.0 - self.p)) > 1e-9:
                raise ValueError(
                    f"inconsistent meta: beta = {self.beta} but p = {self.p} "
                    f"implies {2.0 / (1.0 - self.p)}"
                )


@dataclass(frozen=True)
class PolarField:
    """Scalar samples on a polar grid, shape (n_r, n_theta), row i at r_values[i].

    ``boundary_invalid`` marks fields produced by interior stencils, whose
    first and last radial rows are NaN fill rather than data.
    """

    grid: PolarGrid
    values: np.ndarray
    meta: FieldMeta = field(default_factory=FieldMeta)
    boundary_invalid: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_r, self.grid.n_theta):
            raise ValueError(
                f"values shape {v.shape} does not match grid "
                f"({self.grid.n_r}, {self.grid.n_theta})"
            )
        check = v[1:-1] if self.boundary_invalid else v
        if not np.all(np.isfinite(check)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: PolarGrid, fn, meta: FieldMeta | None = None) -> "PolarField":
        """Sample fn(r, theta) on the grid (fn must broadcast over arrays)."""
        r = grid.r_values[:, None]
        th = grid.theta_values[None, :]
        vals = np.broadcast_to(fn(r, th), (grid.n_r, grid.n_theta))
        return cls(grid, np.array(vals, dtype=float), meta or FieldMeta())

    def with_values(self, values: np.ndarray, description: str | None = None,
                    boundary_invalid: bool | None = None) -> "PolarField":
        meta = self.meta
        if description is not None:
            meta = FieldMeta(meta.p, meta.epsilon, meta.beta, description)
        return PolarField(
            self.grid,
            values,
            meta,
            self.boundary_invalid if boundary_invalid is None else boundary_invalid,
        )

    def interior(self) -> np.ndarray:
        """Values with the first and last radial rows stripped."""
        return self.values[1:-1]
