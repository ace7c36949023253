"""First-order spectral approximations and the special functions behind them.

For the covariance operator of the fractional OU signal on [0,1] the
frequencies and eigenvalues obey, to first order,

    nu_n     = (n - 1/2) pi - (H - 1/2)^2 / (H + 1/2) * pi/2 + O(1/n),
    lambda_n = sin(pi H) Gamma(2H+1) nu_n^{1-2H} / (nu_n^2 + beta^2),

and the unit-norm eigenfunctions are a shifted sine plus boundary layers
built from the limit density rho0.  The building blocks here are the phase
function theta (argument of the symbol Lambda on the upper lip of the cut),
its nu -> infinity limit theta0, the constant b_alpha = (1/pi) int theta0,
the Cauchy-integral factor X(z) = exp((1/pi) int theta(t)/(t-z) dt), the
Hoelder weight h(t) = exp(-(1/pi) int theta' log|(t+s)/(t-s)|) sin(theta),
and rho0(u) = sin(theta0) X0(-u) / gamma0.

All semi-infinite integrals run on cached geometric panel rules with
analytic head/tail corrections, so every evaluator is vectorized; scalar
scipy.quad routes are kept as independent cross-check strategies.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gamma as _gamma_fn

from ._quad import doubling_nodes, gauss_legendre_01, geometric_edges
from .exceptions import DomainError

_HEAD = 2.0 ** -26  # lower cutoff of the master semi-axis rule


def eta_h(H):
    """Phase constant (H - 1/2)(H - 3/2) / (4(H + 1/2)); the interior
    eigenfunction phase in radians is pi times this value."""
    return 0.25 * (H - 0.5) * (H - 1.5) / (H + 0.5)


def nu_first_order(n, H):
    """Two-term frequency (n - 1/2) pi - (H-1/2)^2/(H+1/2) * pi/2."""
    n = np.asarray(n, dtype=float)
    out = (n - 0.5) * np.pi - (H - 0.5) ** 2 / (H + 0.5) * np.pi / 2.0
    return out if out.ndim else float(out)


def lambda_from_nu(nu, H, beta):
    """Eigenvalue sin(pi H) Gamma(2H+1) nu^{1-2H} / (nu^2 + beta^2)."""
    nu = np.asarray(nu, dtype=float)
    out = np.sin(np.pi * H) * _gamma_fn(2.0 * H + 1.0) * nu ** (1.0 - 2.0 * H) \
        / (nu ** 2 + beta ** 2)
    return out if out.ndim else float(out)


def b_alpha_closed(alpha):
    """Closed form sin(pi/(3-a) * (1-a)/2) / sin(pi/(3-a)), a in (0,2)."""
    return math.sin(math.pi / (3.0 - alpha) * (1.0 - alpha) / 2.0) \
        / math.sin(math.pi / (3.0 - alpha))


@dataclass(frozen=True)
class SpecialConstants:
    """Bundle of the scalar constants entering the asymptotic formulas."""

    alpha: float
    b_alpha: float
    b_alpha_nu: float
    eta_h: float
    x0_at_i: complex


class ThetaProfile:
    """Phase function theta(u; nu) = atan2(sin phi, D(u)) on the u = t/nu scale,

        D(u) = (u^2 - r^2)/(1 + r^2) * u^{1-alpha} + cos phi,
        phi  = (1-alpha) pi / 2,   r = beta/nu.

    nu = inf (the default) gives the limit profile theta0 with
    D = u^{3-alpha} + cos phi.  theta is odd under u -> -u by construction
    and decays like sin(phi) u^{alpha-3}.
    """

    def __init__(self, alpha, beta=0.0, nu=math.inf):
        if not 0.0 < alpha < 2.0:
            raise DomainError(f"alpha must lie in (0,2), got {alpha}")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.nu = float(nu)
        self.phi_angle = (1.0 - alpha) * math.pi / 2.0
        self._sin_phi = math.sin(self.phi_angle)
        self._cos_phi = math.cos(self.phi_angle)
        self._cache = {}
        if self.r != 0.0 and alpha > 1.0:
            raise DomainError("finite-nu profiles are defined for alpha <= 1")

    @property
    def r(self):
        return 0.0 if math.isinf(self.nu) else self.beta / self.nu

    def denominator_min(self):
        """Exact minimum of D over u > 0 (the nu-largeness check)."""
        r = abs(self.r)
        if r == 0.0:
            return self._cos_phi if self._cos_phi < 1.0 else 1.0
        a = self.alpha
        dip = (2.0 / (3.0 - a)) * ((1.0 - a) / (3.0 - a)) ** ((1.0 - a) / 2.0) \
            * r ** (3.0 - a) / (1.0 + r * r)
        return self._cos_phi - dip

    def theta(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0):
            raise DomainError("theta requires u > 0")
        r = self.r
        D = (u * u - r * r) / (1.0 + r * r) * u ** (1.0 - self.alpha) + self._cos_phi
        out = np.arctan2(self._sin_phi, D)
        return out if out.ndim else float(out)

    def dtheta(self, u):
        """Analytic derivative; never finite differences (log-kernel integrals
        amplify noise)."""
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0):
            raise DomainError("dtheta requires u > 0")
        a, r = self.alpha, self.r
        D = (u * u - r * r) / (1.0 + r * r) * u ** (1.0 - a) + self._cos_phi
        Dp = ((3.0 - a) * u ** (2.0 - a) - (1.0 - a) * r * r * u ** (-a)) / (1.0 + r * r)
        out = -self._sin_phi * Dp / (D * D + self._sin_phi ** 2)
        return out if out.ndim else float(out)

    # -- master semi-axis rule shared by the integral transforms ------------
    def _master(self):
        if "master" not in self._cache:
            nodes, weights, u_end = doubling_nodes(_HEAD, 52, 16)
            self._cache["master"] = (nodes, weights, self.theta(nodes), u_end)
        return self._cache["master"]

    def b_alpha_nu(self):
        """(1/pi) int_0^inf theta(u) du with analytic head correction."""
        if self.alpha > 1.0:
            raise DomainError("b_alpha integral requires alpha <= 1")
        dmin = self.denominator_min()
        if dmin <= 0.01:
            raise DomainError("nu too small: theta denominator not bounded away "
                              f"from zero (min {dmin:.3g})")
        nodes, weights, th, _ = self._master()
        return (float(weights @ th) + self.phi_angle * _HEAD) / math.pi

    def x_cauchy(self, z):
        """Sectionally holomorphic factor X(z) = exp((1/pi) int theta(t)/(t-z) dt).

        z (scalar or array) must avoid the cut [0, inf).  Near the cut the
        pole is subtracted and integrated in closed form, so the two boundary
        limits reproduce the jump X+ = e^{2 i theta} X-.
        """
        nodes, weights, th, u_end = self._master()
        z = np.asarray(z, dtype=complex)
        zf = z.reshape(-1)
        if np.any((zf.imag == 0) & (zf.real >= 0)):
            raise DomainError("x_cauchy is undefined on the cut [0, inf)")
        # theta value at the pole abscissa, zero when the pole is off [head, end]
        re = zf.real
        near = (re > 2.0 * _HEAD) & (re < u_end)
        th_r = np.where(near, self.theta(np.where(near, re, 1.0)), 0.0)
        core = ((weights[None, :] * (th[None, :] - th_r[:, None]))
                / (nodes[None, :] - zf[:, None])).sum(axis=1)
        # exact integrals of the subtracted constant and of the head plateau
        la0, lz, lu = np.log(_HEAD - zf), np.log(-zf), np.log(u_end - zf)
        analytic = th_r * (lu - la0) + self.phi_angle * (la0 - lz)
        val = np.exp((core + analytic) / math.pi)
        val = val.reshape(z.shape)
        return complex(val) if val.ndim == 0 else val


def theta0(u, alpha):
    """Limit phase theta0(u) = atan2(sin phi, u^{3-alpha} + cos phi)."""
    return ThetaProfile(alpha).theta(u)


def b_alpha_numeric(beta, nu, alpha):
    """(1/pi) int_0^inf theta(u; nu) du; converges to b_alpha_closed as nu grows."""
    return ThetaProfile(alpha, beta, nu).b_alpha_nu()


def x_cauchy(z, profile: ThetaProfile):
    return profile.x_cauchy(z)


def special_constants(alpha, beta=0.0, nu=math.inf):
    prof = ThetaProfile(alpha, beta, nu)
    limit = prof if math.isinf(nu) and beta == 0.0 else ThetaProfile(alpha)
    return SpecialConstants(alpha=alpha,
                            b_alpha=b_alpha_closed(alpha),
                            b_alpha_nu=prof.b_alpha_nu(),
                            eta_h=eta_h(1.0 - alpha / 2.0),
                            x0_at_i=limit.x_cauchy(1j))


# ---------------------------------------------------------------------------
# Hoelder weight h(t)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4)
def _h_pattern(n_inner=28, n_outer=29, m=16):
    """Master pattern for int_0^inf theta'(t*s) log|(1+s)/(1-s)| t ds.

    Relative nodes s and weights already multiplied by the log kernel; the
    pattern is shared by every target t since the kernel depends on s = v/t
    only.  Panels grade geometrically into the log singularity at s = 1 from
    both sides; the skipped slivers are handled analytically by the caller.
    """
    xg, wg = gauss_legendre_01(m)
    segs = []
    # [head, 1/2]: doubling panels away from 0 (theta' may blow up like v^-alpha)
    nodes, weights, _ = doubling_nodes(_HEAD, 25, m)
    keep = nodes <= 0.5
    segs.append((nodes[keep], weights[keep]))
    # [1/2, 1) and (1, 2]: graded toward the singularity, equal slivers left
    delta = 0.5 * 0.5 ** n_inner  # uncovered sliver half-width (relative)
    for side, length, n in ((-1.0, 0.5, n_inner), (+1.0, 1.0, n_inner + 1)):
        edges = geometric_edges(length, n, 0.5)
        for far, near in zip(edges[:-1], edges[1:]):
            h = far - near
            s = 1.0 + side * (near + h * xg)
            segs.append((s, h * wg))
    # [2, 2^n_outer]
    nodes, weights, _ = doubling_nodes(2.0, n_outer, m)
    segs.append((nodes, weights))
    s = np.concatenate([a for a, _ in segs])
    w = np.concatenate([b for _, b in segs])
    kern = np.log(np.abs((1.0 + s) / (1.0 - s)))
    return s, w * kern, delta


def h_weight(t, profile: ThetaProfile, strategy="split"):
    """Weight h(t) = exp(-(1/pi) int_0^inf theta'(s) log|(t+s)/(t-s)| ds) sin(theta(t)).

    strategy "split" (default) uses the cached panel rule, vectorized over t;
    "parts" integrates by parts into a principal-value form evaluated with
    adaptive quadrature and exists as an independent cross-check.
    """
    if strategy == "parts":
        return _h_parts(float(t), profile)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0):
        raise DomainError("h_weight requires t > 0")
    s, w_log, delta = _h_pattern()
    dth = profile.dtheta(t_arr[:, None] * s[None, :])
    expo = t_arr * (dth @ w_log)
    # slivers [1-delta, 1] and [1, 1+delta]:  theta'(t) * t * delta * (log(2/delta)+1) each
    expo += 2.0 * profile.dtheta(t_arr) * t_arr * delta * (math.log(2.0 / delta) + 1.0)
    out = np.exp(-expo / math.pi) * np.sin(profile.theta(t_arr))
    return out if np.ndim(t) else float(out[0])


def _h_parts(t, profile):
    """Independent route: -(1/pi) int theta' log|..| = (1/pi) int theta(s) 2t/(t^2-s^2) ds (PV)."""
    th_t = profile.theta(t)

    def regular(s):
        return (profile.theta(s) - th_t) * 2.0 * t / (t * t - s * s)

    head = integrate.quad(regular, 0.0, t, limit=200, points=[t])[0]
    head += integrate.quad(regular, t, 2.0 * t, limit=200, points=[t])[0]
    head += th_t * math.log(3.0)  # PV int_0^{2t} 2t/(t^2-s^2) ds
    tail = integrate.quad(lambda s: profile.theta(s) * 2.0 * t / (t * t - s * s),
                          2.0 * t, np.inf, limit=200)[0]
    return math.exp((head + tail) / math.pi) * math.sin(th_t)


# ---------------------------------------------------------------------------
# rho0 and the first-order eigenfunctions
# ---------------------------------------------------------------------------

def gamma0(u, alpha):
    """|u + u^{alpha-2} e^{i(1-alpha)pi/2}|, denominator of rho0."""
    u = np.asarray(u, dtype=float)
    ang = (1.0 - alpha) * math.pi / 2.0
    out = np.abs(u + u ** (alpha - 2.0) * np.exp(1j * ang))
    return out if out.ndim else float(out)


def rho0(u, alpha):
    """Layer density sin(theta0(u)) / gamma0(u) * X0(-u); decays like u^{alpha-4}."""
    prof = ThetaProfile(alpha)
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    if np.any(u <= 0):
        raise DomainError("rho0 requires u > 0")
    x0 = prof.x_cauchy(-u).real
    out = np.sin(prof.theta(u)) / gamma0(u, alpha) * x0
    return float(out[0]) if scalar else out


@lru_cache(maxsize=16)
def _layer_rule(alpha):
    """Cached semi-axis rule with rho0 and the f0/f1 layer densities."""
    nodes, weights, _ = doubling_nodes(2.0 ** -16, 40, 16)
    rho = rho0(nodes, alpha)
    b = b_alpha_closed(alpha)
    sq = math.sqrt(3.0 - alpha)
    f0 = sq / math.pi * rho * (nodes - b) / math.sqrt(1.0 + b * b)
    f1 = sq / math.pi * rho
    return nodes, weights, f0, f1


def phi_first_order(x, n, H):
    """First-order unit-norm eigenfunction at points x in [0,1].

    Interior wave -sqrt(2) sin(nu_n x + pi*eta_H) plus endpoint layers:

        phi_n(x) = -sqrt(2) sin(nu_n x + pi eta_H)
                   - int_0^inf [e^{-x nu_n u} f0(u) - (-1)^n e^{-(1-x) nu_n u} f1(u)] du,

    with f0 = sqrt(2H+1)/pi * rho0(u)(u - b_a)/sqrt(1+b_a^2) and
    f1 = sqrt(2H+1)/pi * rho0(u).  This is the combination validated against
    the Nystrom oracle; it vanishes at x = 0, satisfies the sign convention
    int phi < 0, and gives phi_n(1) -> (-1)^n sqrt(2H+1).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("x must lie in [0,1]")
    nu = nu_first_order(n, H)
    wave = -math.sqrt(2.0) * np.sin(nu * x + math.pi * eta_h(H))
    if abs(H - 0.5) < 1e-14:
        out = wave  # layers vanish identically at H = 1/2
    else:
        alpha = 2.0 - 2.0 * H
        u, w, f0, f1 = _layer_rule(alpha)
        with np.errstate(under="ignore"):
            lay0 = np.exp(-np.outer(x, nu * u)) @ (w * f0)
            lay1 = np.exp(-np.outer(1.0 - x, nu * u)) @ (w * f1)
        out = wave - lay0 + (-1.0) ** n * lay1
    return float(out[0]) if scalar else out


def phi_first_order_many(x, ns, H, chunk=4096):
    """phi_first_order at one point x for a whole index array ns."""
    ns = np.asarray(ns)
    nu = nu_first_order(ns, H)
    wave = -math.sqrt(2.0) * np.sin(nu * x + math.pi * eta_h(H))
    if abs(H - 0.5) < 1e-14:
        return wave
    alpha = 2.0 - 2.0 * H
    u, w, f0, f1 = _layer_rule(alpha)
    out = np.empty(len(ns))
    for lo in range(0, len(ns), chunk):
        hi = min(lo + chunk, len(ns))
        with np.errstate(under="ignore"):
            lay0 = np.exp(-x * np.outer(nu[lo:hi], u)) @ (w * f0)
            lay1 = np.exp(-(1.0 - x) * np.outer(nu[lo:hi], u)) @ (w * f1)
        out[lo:hi] = wave[lo:hi] - lay0 + (-1.0) ** ns[lo:hi] * lay1
    return out


def phi_integral_first_order(n, H):
    """First-order value of int_0^1 phi_n: -sqrt((2H+1)/(1+b_a^2)) / nu_n."""
    alpha = 2.0 - 2.0 * H
    b = b_alpha_closed(alpha)
    return -math.sqrt((3.0 - alpha) / (1.0 + b * b)) / nu_first_order(n, H)
