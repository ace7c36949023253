"""Refined eigenpairs from the integro-algebraic system (H >= 1/2).

Each admissible frequency nu solves Im{xi(nu) * conj(eta(nu))} = 0, where
xi and eta combine boundary values of the solutions of the auxiliary
integral equations

    p_j^±(t) = ± (1/pi) int_0^inf h(s nu) e^{-nu s} / (s + t) p_j^±(s) ds + t^j

with the weight h from `asymptotics.h_weight`.  The equations are solved by
fixed-point iteration (the operator is a contraction for large nu), the
frequency by bracketed root finding around the first-order guess, and the
eigenfunction by evaluating the inverse-Laplace representation: a residue
oscillation plus a semi-axis layer integral.  Eigenvalues follow from

    lambda = sin(pi H) Gamma(2H+1) nu^{alpha-1} / (beta^2 + nu^2),

the real-root form of the symbol equation.  Only the ratio xi/eta enters
the eigenfunction; no normalization constants are ever computed, the final
function is rescaled to unit weighted-L2 norm.

Substitution w = nu*s maps the integral equations onto a fixed grid on
(0, u_max] with u_max = 37 (e^{-u_max} below 1e-16), so the kernel weights
are h(w) e^{-w} independent of the eventual evaluation points.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._quad import doubling_nodes
from .asymptotics import ThetaProfile, h_weight, lambda_from_nu, nu_first_order
from .exceptions import DomainError, SolverError
from .model import ModelParams, QuadGrid
from .spectral_oracle import EigenPair, Spectrum

U_MAX = 37.0
FP_TOL = 1e-12
FP_MAXIT = 200
DEFAULT_BRACKET = 0.3
DEFAULT_N_MIN = 3
NU_MIN = 1.0
RESIDUAL_REL = 1e-10


@dataclass(frozen=True)
class IARefinement:
    """Solver state for one refined frequency."""

    n: int
    nu: float
    p_grid: QuadGrid = field(repr=False)
    p0_plus: np.ndarray = field(repr=False)
    p0_minus: np.ndarray = field(repr=False)
    p1_plus: np.ndarray = field(repr=False)
    p1_minus: np.ndarray = field(repr=False)
    a_plus_mi: complex   # a_+(-i)
    a_plus_pi: complex   # a_+(+i)
    a_minus_mi: complex
    a_minus_pi: complex
    b_plus_mi: complex   # b_+(-i)
    b_minus_pi: complex  # b_-(+i)
    x_beta_i: complex
    b_alpha_nu: float
    xi: complex
    eta: complex
    residual: float
    fp_iterations: int
    contraction_norm: float


class _QPSolution:
    """Sampled fixed-point solutions plus the machinery to extend them."""

    def __init__(self, nu, profile, grid, kernel_row, p_tilde, iterations,
                 contraction_norm):
        self.nu = nu
        self.profile = profile
        self.grid = grid
        self.kernel_row = kernel_row
        self.p_tilde = p_tilde  # {(j, sign): samples on grid.nodes}
        self.iterations = iterations
        self.contraction_norm = contraction_norm

    def extend(self, z, j, sign):
        """p_j^{sign}(z) for z (t-scale of the w-substitution: w = nu*s, z = t)."""
        w = self.grid.nodes
        return sign * np.sum(self.kernel_row * self.p_tilde[(j, sign)]
                             / (w + self.nu * np.asarray(z))) + np.asarray(z) ** j

    def extend_many(self, z, j, sign):
        z = np.asarray(z)
        w = self.grid.nodes
        core = (self.kernel_row * self.p_tilde[(j, sign)])[None, :] \
            / (w[None, :] + self.nu * z[:, None])
        return sign * core.sum(axis=1) + z ** j


def _check_params(p: ModelParams):
    if p.H < 0.5:
        raise DomainError("the integro-algebraic solver covers H in [1/2, 1)")


def solve_p(nu, p: ModelParams, semigrid: QuadGrid = None) -> _QPSolution:
    """Fixed-point solve of the four auxiliary integral equations at frequency nu.

    Iterates to sup-norm change below 1e-12 (cap 200); aborts with a
    diagnostic if the iterate-change ratio reaches 1 (lost contraction).
    """
    _check_params(p)
    if nu < NU_MIN:
        raise DomainError(f"nu must be >= {NU_MIN}, got {nu}")
    if semigrid is None:
        semigrid = QuadGrid.semi_axis(U_MAX)
    alpha = p.alpha
    profile = ThetaProfile(alpha, p.beta_eff, nu)
    w = semigrid.nodes
    # alpha = 1 makes theta (hence h) vanish identically
    h_vals = np.zeros_like(w) if alpha == 1.0 else h_weight(w / nu, profile)
    ker = h_vals * np.exp(-w) * semigrid.weights / math.pi
    A = ker[None, :] / (w[:, None] + w[None, :])
    norm_est = _power_norm(A)
    p_tilde = {}
    total_it = 0
    for j in (0, 1):
        rhs = (w / nu) ** j
        for sign in (+1, -1):
            x = rhs.copy()
            prev_delta = None
            for it in range(1, FP_MAXIT + 1):
                xn = sign * (A @ x) + rhs
                delta = float(np.max(np.abs(xn - x)))
                x = xn
                if delta < FP_TOL:
                    break
                if prev_delta is not None and prev_delta > 0 and it > 3 \
                        and delta / prev_delta >= 1.0:
                    raise SolverError(
                        f"fixed point not contracting at nu={nu:.4g} "
                        f"(ratio {delta / prev_delta:.3f})", stage="solve_p")
                prev_delta = delta
            else:
                raise SolverError(f"fixed point hit the {FP_MAXIT}-iteration cap "
                                  f"at nu={nu:.4g}", stage="solve_p")
            p_tilde[(j, sign)] = x
            total_it += it
    return _QPSolution(nu, profile, semigrid, ker, p_tilde, total_it, norm_est)


def _power_norm(A, iters=30):
    """Spectral-norm estimate of the (nonnegative) discretized operator."""
    v = np.ones(A.shape[0]) / math.sqrt(A.shape[0])
    s = 0.0
    for _ in range(iters):
        u = A @ v
        un = np.linalg.norm(u)
        if un == 0.0:
            return 0.0
        w = A.T @ (u / un)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = w / s
    return float(s)


def evaluate_abxi(nu, p: ModelParams, solution: _QPSolution = None):
    """Boundary values a_+-, b_+- at +-i, the factor X(i; nu), and xi, eta."""
    _check_params(p)
    if solution is None:
        solution = solve_p(nu, p)
    prof = solution.profile
    r = p.beta_eff / nu
    ba = prof.b_alpha_nu()
    p0p = solution.extend(-1j, 0, +1)
    p0m = solution.extend(-1j, 0, -1)
    p1p = solution.extend(-1j, 1, +1)
    p1m = solution.extend(-1j, 1, -1)
    a_plus_mi = p0p + p0m
    a_minus_mi = p0p - p0m
    b_plus_mi = p1p + p1m
    # p real on the positive axis: values at +i are conjugates of those at -i
    a_plus_pi = np.conj(a_plus_mi)
    a_minus_pi = np.conj(a_minus_mi)
    b_minus_pi = np.conj(p1p - p1m)
    x_i = prof.x_cauchy(1j)
    e = cmath.exp(1j * nu / 2.0)
    xi = e * x_i * (b_plus_mi + (r - ba) * a_plus_mi) \
        + np.conj(e) * np.conj(x_i) * (b_minus_pi + (r - ba) * a_minus_pi)
    eta = e * x_i * a_minus_mi + np.conj(e) * np.conj(x_i) * a_plus_pi
    return {
        "a_plus_mi": complex(a_plus_mi), "a_plus_pi": complex(a_plus_pi),
        "a_minus_mi": complex(a_minus_mi), "a_minus_pi": complex(a_minus_pi),
        "b_plus_mi": complex(b_plus_mi), "b_minus_pi": complex(b_minus_pi),
        "x_beta_i": complex(x_i), "b_alpha_nu": float(ba),
        "xi": complex(xi), "eta": complex(eta),
    }


def find_nu(n, p: ModelParams, bracket=DEFAULT_BRACKET, n_min=DEFAULT_N_MIN,
            semigrid: QuadGrid = None):
    """Refined frequency: root of Im{xi conj(eta)} near the first-order guess.

    The enumeration is already calibrated: initializing at nu_first_order(n)
    reproduces nu_n = (n - 1/2) pi exactly in the degenerate case alpha = 1,
    beta = 0.  Returns (nu, IARefinement).
    """
    _check_params(p)
    if n < n_min:
        raise DomainError(f"refined frequencies start at n = {n_min}")
    guess = nu_first_order(n, p.H)
    if guess - bracket < NU_MIN:
        raise DomainError(f"bracket around nu={guess:.3g} dips below nu_min={NU_MIN}")
    if semigrid is None:
        semigrid = QuadGrid.semi_axis(U_MAX)
    cache = {}

    def imxe(nu):
        sol = solve_p(nu, p, semigrid)
        vals = evaluate_abxi(nu, p, sol)
        cache[nu] = (sol, vals)
        prod = vals["xi"] * np.conj(vals["eta"])
        return prod.imag

    lo, hi = guess - bracket, guess + bracket
    flo, fhi = imxe(lo), imxe(hi)
    if flo == 0.0:
        root = lo
    elif fhi == 0.0:
        root = hi
    elif flo * fhi > 0:
        raise SolverError(f"no sign change of Im(xi eta*) in [{lo:.6g}, {hi:.6g}] "
                          f"(f={flo:.3g}, {fhi:.3g})", stage="find_nu")
    else:
        root = brentq(imxe, lo, hi, xtol=1e-13, rtol=8.9e-16)
    sol, vals = cache[root] if root in cache else (None, None)
    if sol is None:
        sol = solve_p(root, p, semigrid)
        vals = evaluate_abxi(root, p, sol)
    prod = vals["xi"] * np.conj(vals["eta"])
    residual = abs(prod.imag)
    if residual > RESIDUAL_REL * abs(prod):
        raise SolverError(f"root residual {residual:.2e} exceeds "
                          f"{RESIDUAL_REL:.0e} * |xi eta*| = {RESIDUAL_REL * abs(prod):.2e}",
                          stage="find_nu")
    ref = IARefinement(
        n=n, nu=float(root), p_grid=sol.grid,
        p0_plus=sol.p_tilde[(0, 1)], p0_minus=sol.p_tilde[(0, -1)],
        p1_plus=sol.p_tilde[(1, 1)], p1_minus=sol.p_tilde[(1, -1)],
        a_plus_mi=vals["a_plus_mi"], a_plus_pi=vals["a_plus_pi"],
        a_minus_mi=vals["a_minus_mi"], a_minus_pi=vals["a_minus_pi"],
        b_plus_mi=vals["b_plus_mi"], b_minus_pi=vals["b_minus_pi"],
        x_beta_i=vals["x_beta_i"], b_alpha_nu=vals["b_alpha_nu"],
        xi=vals["xi"], eta=vals["eta"], residual=residual,
        fp_iterations=sol.iterations, contraction_norm=sol.contraction_norm,
    )
    return float(root), ref, sol


def _phi_tilde_factories(ref: IARefinement, sol: _QPSolution, p: ModelParams):
    """Normalized forms Phi~_0, Phi~_1 as functions of the t-scale argument."""
    nu = ref.nu
    r = p.beta_eff / nu
    ba = ref.b_alpha_nu
    ratio = (ref.xi * np.conj(ref.eta)).real / abs(ref.eta) ** 2  # xi/eta, real at a root
    prof = sol.profile

    def phi0(zeta):
        zr = -np.asarray(zeta) / nu
        x = prof.x_cauchy(np.asarray(zeta) / nu)
        return x * (sol.extend_many(zr, 1, +1) + sol.extend_many(zr, 1, -1)
                    + (r - ba) * (sol.extend_many(zr, 0, +1) + sol.extend_many(zr, 0, -1))
                    - ratio * (sol.extend_many(zr, 0, +1) - sol.extend_many(zr, 0, -1)))

    def phi1(zeta):
        zr = -np.asarray(zeta) / nu
        x = prof.x_cauchy(np.asarray(zeta) / nu)
        return x * (sol.extend_many(zr, 1, +1) - sol.extend_many(zr, 1, -1)
                    + (r - ba) * (sol.extend_many(zr, 0, +1) - sol.extend_many(zr, 0, -1))
                    - ratio * (sol.extend_many(zr, 0, +1) + sol.extend_many(zr, 0, -1)))

    return phi0, phi1, ratio


def refined_eigenpair(n, p: ModelParams, unit_grid: QuadGrid,
                      bracket=DEFAULT_BRACKET, n_min=DEFAULT_N_MIN):
    """Refined (lambda_n, phi_n) with phi sampled on `unit_grid`.

    The eigenfunction combines the residue oscillation with the layer
    integral of the inverse Laplace transform, is rescaled to unit weighted
    L2 norm and sign-fixed (int phi < 0); phi(1) uses its own closed
    expression -2 (xi/eta)(1 + r^2) under the same normalization.
    """
    if unit_grid.domain != "unit-interval":
        raise DomainError("refined_eigenpair requires a unit-interval grid")
    nu, ref, sol = find_nu(n, p, bracket, n_min)
    alpha = p.alpha
    r = p.beta_eff / nu
    prof = sol.profile
    phi0_f, phi1_f, ratio = _phi_tilde_factories(ref, sol, p)
    x = unit_grid.nodes
    w = unit_grid.weights

    # residue part
    p0_inu = phi0_f(np.array([1j * nu]))[0]
    denom = 2.0 / (r * r + 1.0) - alpha + 1.0
    res = -2.0 * np.real(np.exp(1j * nu * x) * p0_inu * (1.0 - 1j * r) / denom)

    # layer integral over u in (0, inf)
    u, uw, _ = doubling_nodes(2.0 ** -16, 28, 16)
    st = np.sin(prof.theta(u))
    gb = np.abs((u * u - r * r) / (r * r + 1.0)
                + u ** (alpha - 1.0) * np.exp(1j * (1.0 - alpha) * math.pi / 2.0))
    if np.any(gb <= 0.0):
        raise SolverError("gamma_beta vanished on the layer grid", stage="refined_eigenpair")
    p1_m = phi1_f(-u * nu).real
    p0_m = phi0_f(-u * nu).real
    w0 = uw * st / gb * (u + r) * p1_m
    w1 = uw * st / gb * (u - r) * p0_m
    with np.errstate(under="ignore"):
        lay = (np.exp(-np.outer(1.0 - x, nu * u)) @ w0
               - np.exp(-np.outer(x, nu * u)) @ w1) / math.pi
    phi = res + lay
    phi1_val = -2.0 * ratio * (1.0 + r * r)

    norm = math.sqrt(float(w @ phi ** 2))
    if norm == 0.0:
        raise SolverError("assembled eigenfunction has zero norm",
                          stage="refined_eigenpair")
    phi /= norm
    phi1_val /= norm
    integral = float(w @ phi)
    sign = 1.0
    if abs(integral) > 1e-12:
        sign = -1.0 if integral > 0 else 1.0
    elif phi1_val * (-1.0) ** n > 0:
        sign = -1.0
    phi *= sign
    phi1_val *= sign
    integral *= sign

    lam = lambda_from_nu(nu, p.H, p.beta_eff) * p.T ** (2.0 * p.H)
    pair = EigenPair(n=n, lam=float(lam), nu=float(nu), phi=phi,
                     phi1=float(phi1_val), phi_integral=integral)
    return pair, ref


def refined_spectrum(p: ModelParams, n_values, unit_grid: QuadGrid,
                     bracket=DEFAULT_BRACKET, n_min=DEFAULT_N_MIN) -> Spectrum:
    """Refined eigenpairs for each n in `n_values`, packed as a Spectrum.

    Indices below n_min are outside the solver's reach; when a contiguous
    spectrum is required (series summation), fill them from the Nystrom
    oracle, see `error_analysis.build_spectrum`.
    """
    n_values = list(n_values)
    pairs = [refined_eigenpair(n, p, unit_grid, bracket, n_min)[0] for n in n_values]
    lam = np.array([q.lam for q in pairs])
    nu = np.array([q.nu for q in pairs])
    phi = np.column_stack([q.phi for q in pairs])
    phi1 = np.array([q.phi1 for q in pairs])
    integ = np.array([q.phi_integral for q in pairs])
    return Spectrum("refined", p, lam, nu, unit_grid, phi, phi1, integ,
                    n_values=tuple(n_values))
