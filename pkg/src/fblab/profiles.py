"""Homogeneous global solutions: angular profiles g(theta) and their arcs.

A degree-beta homogeneous solution v = r^beta g(theta), beta = 2/(1-p),
requires the angular profile to satisfy

    beta*(beta+eps)*g + (1+eps)*g'' = g^p    on the positivity arc (0, alpha),

with g(0) = g(alpha) = 0 and g'(0) = 0.  Multiplying by g' and integrating
gives the first integral

    (1+eps)*g'^2 + beta*(beta+eps)*g^2 = (2/(p+1))*g^(p+1)

(the integration constant vanishes because g and g' vanish together at the
endpoints), which both separates the ODE into a quadrature for the arc length
and serves as a conserved quantity for validating integrated profiles.

For p = 0 everything is elementary:

    g(theta) = a_eps * (1 - cos(omega_eps * theta)),  theta in (0, 2*pi/omega_eps),
    a_eps = 1/(2*(2+eps)),  omega_eps = sqrt(2*(2+eps)/(1+eps)).

The rigidity scan quantifies the integer condition on omega_eps that a
degree-2 homogeneous solution with a differentiable free boundary must
satisfy; within the elliptic range it pins eps = 0 (omega = 2) apart from the
k-branch roots eps_k = -(k^2-4)/(k^2-2) accumulating at eps = -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ProfileError

CLOSED_FORM = "closed_form"
ODE_SHOOTING = "ode_shooting"
QUADRATURE = "quadrature"


def beta_exponent(p: float) -> float:
    """Natural scaling exponent beta = 2/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ProfileError(f"p must lie in [0, 1), got {p}")
    return 2.0 / (1.0 - p)


def _check_params(p: float, epsilon: float) -> None:
    if not 0.0 <= p < 1.0:
        raise ProfileError(f"p must lie in [0, 1), got {p}")
    if 1.0 + epsilon <= 0.0:
        raise ProfileError(f"need 1 + epsilon > 0, got epsilon = {epsilon}")


@dataclass(frozen=True)
class HomogeneousProfile:
    """Angular profile g >= 0 on [0, alpha] with g, g' sampled.

    a_eps and omega_eps carry the p = 0 closed-form parameters and are None
    for p > 0.  Provenance records how the samples were produced.
    """

    p: float
    epsilon: float
    alpha: float
    theta_samples: np.ndarray
    g_samples: np.ndarray
    gprime_samples: np.ndarray
    provenance: str
    a_eps: float | None = None
    omega_eps: float | None = None

    def __post_init__(self):
        th = np.asarray(self.theta_samples, dtype=float)
        g = np.asarray(self.g_samples, dtype=float)
        gp = np.asarray(self.gprime_samples, dtype=float)
        for arr in (th, g, gp):
            arr.setflags(write=False)
        object.__setattr__(self, "theta_samples", th)
        object.__setattr__(self, "g_samples", g)
        object.__setattr__(self, "gprime_samples", gp)
        if not (th.shape == g.shape == gp.shape):
            raise ProfileError("sample arrays must share a shape")
        if g.min() < -1e-12:
            raise ProfileError("profile must be nonnegative on its arc")
        if abs(g[0]) > 1e-10 or abs(g[-1]) > 1e-10:
            raise ProfileError("profile must vanish at both arc endpoints")
        if abs(gp[0]) > 1e-8:
            raise ProfileError("profile must lift off tangentially, g'(0) = 0")

    def max_g(self) -> float:
        return float(self.g_samples.max())


def closed_form_p0(epsilon: float, n_samples: int = 2049) -> HomogeneousProfile:
    """The p = 0 profile a_eps*(1 - cos(omega_eps*theta)) on (0, 2*pi/omega_eps)."""
    _check_params(0.0, epsilon)
    if 2.0 + epsilon <= 0.0:
        raise ProfileError(f"need 2 + epsilon > 0, got epsilon = {epsilon}")
    a = 1.0 / (2.0 * (2.0 + epsilon))
    omega = math.sqrt(2.0 * (2.0 + epsilon) / (1.0 + epsilon))
    alpha = 2.0 * math.pi / omega
    th = np.linspace(0.0, alpha, int(n_samples))
    g = a * (1.0 - np.cos(omega * th))
    gp = a * omega * np.sin(omega * th)
    # exact endpoint zeros (cos(2*pi) rounding would otherwise leave ~1e-16 dust)
    g[0] = g[-1] = 0.0
    gp[0] = gp[-1] = 0.0
    return HomogeneousProfile(0.0, epsilon, alpha, th, g, gp, CLOSED_FORM,
                              a_eps=a, omega_eps=omega)


def _series_liftoff(p: float, epsilon: float):
    """Two-term expansion g = c0*theta^beta*(1 + c2*theta^2) near the lift-off.

    c0 balances (1+eps)*g'' with g^p at the degenerate equilibrium; the theta^2
    correction follows from matching the next order and keeps the start-up
    error below the integrator error.
    """
    beta = beta_exponent(p)
    c0 = ((1.0 + epsilon) * beta * (beta - 1.0)) ** (-1.0 / (1.0 - p))
    denom = (1.0 + epsilon) * ((beta + 2.0) * (beta + 1.0) - p * beta * (beta - 1.0))
    c2 = -beta * (beta + epsilon) / denom

    def g_of(theta: float) -> float:
        return c0 * theta**beta * (1.0 + c2 * theta * theta)

    def gp_of(theta: float) -> float:
        return c0 * (beta * theta ** (beta - 1.0)
                     + (beta + 2.0) * c2 * theta ** (beta + 1.0))

    return c0, g_of, gp_of


def _rk4_to_apex(p: float, epsilon: float, step: float):
    """Integrate (g, g') from the series start until g' crosses zero.

    Returns theta_apex located by linear interpolation of g'.  The crossing is
    transversal (g'' < 0 at the apex), unlike the tangential landing at alpha,
    so this is the robust stopping event.
    """
    beta = beta_exponent(p)
    coef = beta * (beta + epsilon)
    one_eps = 1.0 + epsilon
    _, g_of, gp_of = _series_liftoff(p, epsilon)
    theta = 10.0 * step
    g, gp = g_of(theta), gp_of(theta)

    def acc(g_val: float) -> float:
        rhs = g_val**p if g_val > 0.0 else 0.0
        return (rhs - coef * g_val) / one_eps

    max_theta = 4.0 * math.pi
    while theta < max_theta:
        k1g, k1p = gp, acc(g)
        k2g, k2p = gp + 0.5 * step * k1p, acc(g + 0.5 * step * k1g)
        k3g, k3p = gp + 0.5 * step * k2p, acc(g + 0.5 * step * k2g)
        k4g, k4p = gp + step * k3p, acc(g + step * k3g)
        g_new = g + step / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        gp_new = gp + step / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        theta += step
        if gp_new <= 0.0:
            frac = gp / (gp - gp_new)
            return theta - step + frac * step
        g, gp = g_new, gp_new
    raise ProfileError(
        f"profile did not turn around by theta = 4*pi (p={p}, epsilon={epsilon})"
    )


def ode_integrate(p: float, epsilon: float, step: float = 1e-4) -> HomogeneousProfile:
    """Integrate the angular ODE from the degenerate start; alpha = 2*theta_apex.

    Fixed-step RK4 on (g, g') starting from the nontrivial series branch at
    theta0 = 10*step.  The apex g'=0 is bracketed and the second half of the
    hump is the mirror image of the first (the ODE has no g' term, so the
    reflection through the apex is again a solution and uniqueness glues
    them), which sidesteps the tangential landing g ~ (alpha-theta)^beta that
    a forward integrator cannot resolve.
    """
    _check_params(p, epsilon)
    if not 0.0 < step <= 1e-2:
        raise ProfileError(f"step must lie in (0, 1e-2], got {step}")
    theta_apex = _rk4_to_apex(p, epsilon, step)

    # re-integrate with a step that lands exactly on the apex
    n_half = max(int(math.ceil(theta_apex / step)), 16)
    h = theta_apex / n_half
    beta = beta_exponent(p)
    coef = beta * (beta + epsilon)
    one_eps = 1.0 + epsilon
    _, g_of, gp_of = _series_liftoff(p, epsilon)

    def acc(g_val: float) -> float:
        rhs = g_val**p if g_val > 0.0 else 0.0
        return (rhs - coef * g_val) / one_eps

    n_series = 10
    g_vals = np.empty(n_half + 1)
    gp_vals = np.empty(n_half + 1)
    for j in range(n_series + 1):
        g_vals[j] = g_of(j * h)
        gp_vals[j] = gp_of(j * h)
    g, gp = g_vals[n_series], gp_vals[n_series]
    for j in range(n_series, n_half):
        k1g, k1p = gp, acc(g)
        k2g, k2p = gp + 0.5 * h * k1p, acc(g + 0.5 * h * k1g)
        k3g, k3p = gp + 0.5 * h * k2p, acc(g + 0.5 * h * k2g)
        k4g, k4p = gp + h * k3p, acc(g + h * k3g)
        g = g + h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        gp = gp + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        g_vals[j + 1], gp_vals[j + 1] = g, gp

    alpha = 2.0 * theta_apex
    theta = h * np.arange(2 * n_half + 1)
    theta[-1] = alpha
    g_full = np.concatenate([g_vals, g_vals[-2::-1]])
    gp_full = np.concatenate([gp_vals, -gp_vals[-2::-1]])
    g_full[0] = g_full[-1] = 0.0
    gp_full[0] = gp_full[-1] = 0.0

    a = omega = None
    if p == 0.0:
        a = 1.0 / (2.0 * (2.0 + epsilon))
        omega = math.sqrt(2.0 * (2.0 + epsilon) / (1.0 + epsilon))
    return HomogeneousProfile(p, epsilon, alpha, theta, g_full, gp_full,
                              ODE_SHOOTING, a_eps=a, omega_eps=omega)


def profile_gmax(p: float, epsilon: float) -> float:
    """Turning value of g, where the first-integral radicand vanishes."""
    beta = beta_exponent(p)
    return (2.0 / ((p + 1.0) * beta * (beta + epsilon))) ** (1.0 / (1.0 - p))


def arc_length_quadrature(p: float, epsilon: float) -> float:
    """Arc length alpha from the separated first integral.

    alpha = 2*sqrt(1+eps) * int_0^gmax dg / sqrt((2/(p+1))*g^(p+1)
                                                 - beta*(beta+eps)*g^2).

    The integrand is singular at both ends; the substitution u = g^((1-p)/2)
    removes the g = 0 singularity exactly (the radicand becomes
    u^((p+1)/(1-p))-free), and u = u_max*sin(psi) absorbs the inverse-sqrt
    turning point, after which adaptive quadrature is applied to a bounded
    integrand on [0, pi/2].
    """
    _check_params(p, epsilon)
    beta = beta_exponent(p)
    A = 2.0 / (p + 1.0)
    B = beta * (beta + epsilon)
    u_max = math.sqrt(A / B)

    def integrand(psi: float) -> float:
        u = u_max * math.sin(psi)
        radicand = max(A - B * u * u, 0.0)
        if radicand == 0.0:
            return 1.0 / math.sqrt(A)  # limiting value at the turning point
        return math.cos(psi) / math.sqrt(radicand)

    out = quad(integrand, 0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-13,
               full_output=1)
    val, err = out[0], out[1]
    if err > 1e-8:
        raise ProfileError(f"arc-length quadrature only reached error {err:.2e}")
    scale = 2.0 * math.sqrt(1.0 + epsilon) * (2.0 / (1.0 - p)) * u_max
    return scale * val


@dataclass(frozen=True)
class ConeAngles:
    positivity_arc: float
    coincidence_cone: float
    label: str  # "obtuse" | "acute" | "flat"


def cone_angles(epsilon: float) -> ConeAngles:
    """Opening angles of the p = 0 homogeneous solution and its complement.

    The coincidence cone 2*pi - 2*pi/omega_eps is acute for eps > 0
    (omega_eps < 2) and obtuse for eps < 0; eps = 0 is the flat half-plane.
    """
    _check_params(0.0, epsilon)
    omega = math.sqrt(2.0 * (2.0 + epsilon) / (1.0 + epsilon))
    arc = 2.0 * math.pi / omega
    cone = 2.0 * math.pi - arc
    if epsilon == 0.0:
        label = "flat"
    elif cone < math.pi:
        label = "acute"
    else:
        label = "obtuse"
    return ConeAngles(arc, cone, label)


@dataclass(frozen=True)
class RigidityScan:
    epsilons: np.ndarray
    omegas: np.ndarray
    nearest_integers: np.ndarray
    distances: np.ndarray
    hits: tuple  # epsilon values where omega_eps is an integer to tolerance
    branch_roots: tuple  # (k, eps_k, admissible) for omega_eps = k
    monotone_decreasing: bool


def rigidity_scan(epsilon_grid, tol: float = 1e-9) -> RigidityScan:
    """Distance of omega_eps to the nearest integer across an epsilon grid.

    Also solves omega_eps = k exactly for small integers: 2*(2+eps) = k^2*(1+eps)
    gives eps_k = -(k^2-4)/(k^2-2), admissible only when 1 + eps_k > 0.  For
    k = 1 that root is eps = -3 (inadmissible); k = 2 gives eps = 0; k = 3 gives
    eps = -5/7, at the edge of the perturbative regime.
    """
    eps = np.asarray(epsilon_grid, dtype=float)
    if np.any(1.0 + eps <= 0.0):
        raise ProfileError("epsilon grid must stay inside 1 + epsilon > 0")
    omegas = np.sqrt(2.0 * (2.0 + eps) / (1.0 + eps))
    nearest = np.rint(omegas)
    dist = np.abs(omegas - nearest)
    hits = tuple(float(e) for e, d in zip(eps, dist) if d <= tol)
    roots = []
    for k in (1, 2, 3, 4):
        eps_k = -(k * k - 4.0) / (k * k - 2.0)
        roots.append((k, eps_k, 1.0 + eps_k > 0.0))
    monotone = bool(np.all(np.diff(omegas) < 0.0)) if eps.size > 1 else True
    return RigidityScan(eps, omegas, nearest.astype(int), dist, hits,
                        tuple(roots), monotone)
