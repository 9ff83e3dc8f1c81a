"""Exception types shared across the package."""


class FBLabError(Exception):
    """Base class for all package-specific errors."""


class EllipticityError(FBLabError, ValueError):
    """Coefficient model is not uniformly elliptic (requires 1 + epsilon > 0)."""


class OriginEvaluationError(FBLabError, ValueError):
    """Discontinuous coefficient matrix evaluated at x = 0, where it is undefined."""


class GridResolutionError(FBLabError, ValueError):
    """Grid too coarse (or wrong kind) for the requested stencil or analysis."""


class MissingBetaError(FBLabError, ValueError):
    """Field metadata lacks the scaling exponent beta required by the transform."""


class DegenerateWindowError(FBLabError, ValueError):
    """All dyadic suprema in the fit window sit below the floor; point is degenerate."""


class SolverConvergenceError(FBLabError, RuntimeError):
    """Penalized solve failed to reach the residual tolerance.

    Carries the continuation stage index and the per-iteration residual log
    so callers can emit diagnostics.
    """

    def __init__(self, message, stage=None, log=None):
        super().__init__(message)
        self.stage = stage
        self.log = tuple(log) if log is not None else ()


class ProfileError(FBLabError, ValueError):
    """Angular profile construction failed (parameter range or non-returning orbit)."""
