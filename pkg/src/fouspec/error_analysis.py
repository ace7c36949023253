"""Filtering/interpolation mean squared error and its small-noise asymptotics.

With (lambda_n, phi_n) the eigenpairs of the signal covariance on [0,1]
(T-scaled as stored in `Spectrum`), the optimal-estimation error at the
relative time u and noise intensity eps is the eigen-series

    P(u, eps) = sum_n eps * lambda_n * phi_n(u)^2 / (eps + mu^2 T lambda_n),

which equals (eps/mu^2) h(u,u) for the solution h of the discretized
Wiener-Hopf equation on the same grid; both evaluations are provided and
must agree to rounding.  As eps -> 0,

    P ~ (eps/mu^2)^{2H/(1+2H)} (sin(pi H) Gamma(2H+1))^{1/(1+2H)}
        / sin(pi/(2H+1))  *  { 1/(2H+1) interior, 1 endpoint },

independent of beta, T and of the interior position.  `convergence_study`
sweeps eps and tabulates the ratios to this limit together with tail and
oscillation diagnostics.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gamma as _gamma_fn

from .exceptions import DomainError, SolverError, TruncationError
from .model import CovMatrix, ModelParams, QuadGrid, cov_matrix
from .spectral_oracle import Spectrum, nystrom_eigs, ou_closed_form_eigs

EXCLUDED_TERM_BUDGET = 1e-3  # largest excluded series term, relative to P
TAIL_BUDGET = 2e-2           # estimated excluded series mass, relative to P


@dataclass(frozen=True)
class MseReport:
    """Sweep of estimation errors over (eps, u) with ratios to the asymptote."""

    params: ModelParams
    eps_values: np.ndarray
    u_points: np.ndarray
    P_series: np.ndarray                 # shape (n_eps, n_u)
    P_asymptotic: np.ndarray
    ratios: np.ndarray                   # P_series / P_asymptotic
    spectrum_method: str
    truncation_n: int
    P_wiener_hopf: np.ndarray = None
    diagnostics: dict = field(default_factory=dict, repr=False)


def _series_terms(eps, p: ModelParams, lam):
    # eps*lam/(eps + mu^2 T lam): stable for lam -> 0 of either sign
    return eps * lam / (eps + p.mu ** 2 * p.T * lam)


def mse_series(u, eps, p: ModelParams, spec: Spectrum, return_tail=False):
    """Eigen-series value of P(u, eps) from the given spectrum.

    The truncation tail beyond the available eigenpairs is estimated from
    the power-law decay of the trailing eigenvalues and optionally returned.
    """
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if spec.n_max == 0:
        raise DomainError("empty spectrum")
    phi2 = np.asarray(spec.phi_values(u)) ** 2
    val = float(_series_terms(eps, p, spec.lam) @ phi2)
    if not return_tail:
        return val
    return val, truncation_tail(eps, p, spec, endpoint=(u == 1.0))


def truncation_tail(eps, p: ModelParams, spec: Spectrum, endpoint=False):
    """Estimated series mass beyond n_max, from the lambda decay law."""
    N = spec.n_max
    lam_n = float(spec.lam[-1])
    if lam_n <= 0:
        return 0.0
    decay = 2.0 * p.H + 1.0
    C = lam_n * N ** decay
    phi_bar2 = 2.0 * p.H + 1.0 if endpoint else 1.0

    def mapped(y):
        # x = N/y folds [N, inf) onto (0, 1]
        lam = C * (N / y) ** -decay
        return eps * lam * phi_bar2 / (eps + p.mu ** 2 * p.T * lam) * N / y ** 2

    val, _ = integrate.quad(mapped, 0.0, 1.0, limit=200)
    return float(val)


def largest_excluded_term(eps, p: ModelParams, spec: Spectrum, endpoint=True):
    """Estimate of series term n_max + 1 (the truncation-sufficiency probe)."""
    N = spec.n_max
    lam_next = float(spec.lam[-1]) * (N / (N + 1.0)) ** (2.0 * p.H + 1.0)
    phi_bar2 = 2.0 * p.H + 1.0 if endpoint else 1.0
    return float(_series_terms(eps, p, np.array([lam_next]))[0] * phi_bar2)


def check_truncation(eps, p: ModelParams, spec: Spectrum, u=1.0):
    """Raise TruncationError if eps needs more eigenpairs than available.

    Guards both the largest excluded term and the estimated excluded mass;
    the latter matters for slowly decaying tails (small H), where every
    single excluded term can look negligible while their sum is not.
    """
    P, tail = mse_series(u, eps, p, spec, return_tail=True)
    n_eff = (p.mu ** 2 * p.T ** (2.0 * p.H + 1.0) / eps) ** (1.0 / (2.0 * p.H + 1.0))
    worst = largest_excluded_term(eps, p, spec, endpoint=(u == 1.0))
    if worst > EXCLUDED_TERM_BUDGET * P:
        raise TruncationError(
            f"eps={eps:g} needs ~{n_eff:.0f} effective terms; largest excluded "
            f"term {worst:.2e} exceeds {EXCLUDED_TERM_BUDGET:.0e} * P = "
            f"{EXCLUDED_TERM_BUDGET * P:.2e} with n_max={spec.n_max}")
    if tail > TAIL_BUDGET * P:
        raise TruncationError(
            f"eps={eps:g}: estimated excluded series mass {tail:.2e} exceeds "
            f"{TAIL_BUDGET:.0e} * P = {TAIL_BUDGET * P:.2e} with "
            f"n_max={spec.n_max} (~{n_eff:.0f} effective terms)")


def mse_wiener_hopf(u, eps, p: ModelParams, grid: QuadGrid, cov: CovMatrix = None):
    """P(u, eps) from the dense discretized Wiener-Hopf solve.

    u is snapped to the nearest grid node.  Algebraically identical to
    `mse_series` fed the full spectrum of the same matrix.
    """
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if cov is None:
        cov = cov_matrix(grid, p)
    j = int(np.argmin(np.abs(grid.nodes - u)))
    w = grid.weights
    sw = np.sqrt(w)
    B = sw[:, None] * cov.values * sw[None, :]
    A = p.mu ** 2 * p.T * B
    A[np.diag_indices_from(A)] += eps
    try:
        ch = cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"Wiener-Hopf system not positive definite: {exc}",
                          stage="mse_wiener_hopf")
    rhs = p.mu ** 2 * sw * cov.values[:, j]
    y = cho_solve(ch, rhs)
    h_col = y / sw
    return float(eps / p.mu ** 2 * h_col[j])


def mse_asymptotic(position, eps, p: ModelParams):
    """Leading small-noise term; `position` is "interior" or "endpoint"."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    H = p.H
    C = np.sin(np.pi * H) * _gamma_fn(2.0 * H + 1.0)
    base = (eps / p.mu ** 2) ** (2.0 * H / (1.0 + 2.0 * H)) \
        * C ** (1.0 / (1.0 + 2.0 * H)) / np.sin(np.pi / (2.0 * H + 1.0))
    if position == "endpoint":
        return float(base)
    if position == "interior":
        return float(base / (2.0 * H + 1.0))
    raise DomainError(f"position must be 'interior' or 'endpoint', got {position!r}")


def build_spectrum(p: ModelParams, method="oracle", n_max=200, grid: QuadGrid = None,
                   grid_size=1000, gl_order=None) -> Spectrum:
    """Construct the requested spectrum source for error sweeps.

    oracle         : Nystrom eigensolve on a Gauss-Legendre grid
    closed_form_ou : exact H = 1/2 spectrum (requires H = 1/2)
    first_order    : two-term frequencies and the eigenvalue formula
    refined        : integro-algebraic solver (H >= 1/2, n from n_min up)
    """
    from . import asymptotics, ia_refine

    if method == "oracle":
        if grid is None:
            grid = QuadGrid.gauss_legendre_unit(grid_size)
        kwargs = {} if gl_order is None else {"gl_order": gl_order}
        cov = cov_matrix(grid, p, **kwargs)
        return nystrom_eigs(cov, grid, n_max)
    if method == "closed_form_ou":
        return ou_closed_form_eigs(p.beta_eff, n_max, grid=grid, params=p)
    if method == "first_order":
        n = np.arange(1, n_max + 1)
        nu = asymptotics.nu_first_order(n, p.H)
        lam = asymptotics.lambda_from_nu(nu, p.H, p.beta_eff) * p.T ** (2.0 * p.H)
        phi = None
        if grid is not None:
            phi = np.column_stack([asymptotics.phi_first_order(grid.nodes, int(k), p.H)
                                   for k in n])
        phi1 = asymptotics.phi_first_order_many(1.0, n, p.H)
        integ = asymptotics.phi_integral_first_order(n, p.H)
        return Spectrum("first_order", p, lam, nu, grid, phi, phi1, integ)
    if method == "refined":
        if grid is None:
            grid = QuadGrid.gauss_legendre_unit(grid_size)
        n_min = ia_refine.DEFAULT_N_MIN
        ref = ia_refine.refined_spectrum(p, range(n_min, n_max + 1), grid)
        # the solver starts at n_min; head pairs come from the oracle so the
        # series over the spectrum stays complete
        head = nystrom_eigs(cov_matrix(grid, p), grid, n_min - 1)
        return Spectrum("refined", p,
                        np.concatenate([head.lam, ref.lam]),
                        np.concatenate([np.full(n_min - 1, np.nan), ref.nu]),
                        grid,
                        np.column_stack([head.phi, ref.phi]),
                        np.concatenate([head.phi1, ref.phi1]),
                        np.concatenate([head.phi_integral, ref.phi_integral]),
                        diagnostics={"head_from_oracle": n_min - 1})
    raise DomainError(f"unknown spectrum method {method!r}")


def convergence_study(p: ModelParams, eps_grid, u_points, spec: Spectrum,
                      with_wiener_hopf=False, strict_truncation=True) -> MseReport:
    """Sweep P over decreasing eps and u, with ratios to the asymptote.

    Also records the oscillation diagnostic I2 = P(u) - I1, where I1 is the
    series with phi^2 replaced by its interior mean 1: I2 must stay O(eps),
    i.e. vanish faster than the main term.
    """
    eps_grid = np.asarray(list(eps_grid), dtype=float)
    u_points = np.asarray(list(u_points), dtype=float)
    if len(eps_grid) == 0 or np.any(np.diff(eps_grid) >= 0):
        raise DomainError("eps_grid must be strictly decreasing")
    if np.any((u_points <= 0) | (u_points > 1)):
        raise DomainError("u_points must lie in (0, 1]")
    if strict_truncation:
        for u in u_points:
            check_truncation(eps_grid[-1], p, spec, u=float(u))
    n_eps, n_u = len(eps_grid), len(u_points)
    P_series = np.empty((n_eps, n_u))
    tails = np.empty((n_eps, n_u))
    P_asym = np.empty((n_eps, n_u))
    I2 = np.empty((n_eps, n_u))
    phi2 = {k: np.asarray(spec.phi_values(float(u))) ** 2
            for k, u in enumerate(u_points)}  # hoisted: u-samples shared over eps
    for i, eps in enumerate(eps_grid):
        terms = _series_terms(eps, p, spec.lam)
        i1 = float(np.sum(terms))
        for k, u in enumerate(u_points):
            P_series[i, k] = float(terms @ phi2[k])
            tails[i, k] = truncation_tail(float(eps), p, spec, endpoint=(u == 1.0))
            pos = "endpoint" if u == 1.0 else "interior"
            P_asym[i, k] = mse_asymptotic(pos, float(eps), p)
            I2[i, k] = P_series[i, k] - i1
    P_wh = None
    if with_wiener_hopf:
        if spec.grid is None:
            raise DomainError("Wiener-Hopf route needs a spectrum with a grid")
        cov = cov_matrix(spec.grid, p)
        P_wh = np.array([[mse_wiener_hopf(float(u), float(eps), p, spec.grid, cov)
                          for u in u_points] for eps in eps_grid])
    diagnostics = {
        "tails": tails,
        "I2": I2,
        "I2_over_eps": I2 / eps_grid[:, None],
        "monotone_in_eps": bool(np.all(np.diff(P_series, axis=0) <= 1e-12)),
    }
    return MseReport(params=p, eps_values=eps_grid, u_points=u_points,
                     P_series=P_series, P_asymptotic=P_asym,
                     ratios=P_series / P_asym, spectrum_method=spec.method,
                     truncation_n=spec.n_max, P_wiener_hopf=P_wh,
                     diagnostics=diagnostics)
