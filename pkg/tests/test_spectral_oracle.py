import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fouspec.exceptions import DomainError
from fouspec.model import ModelParams, QuadGrid, cov_matrix, fou_cov
from fouspec.spectral_oracle import nystrom_eigs, nystrom_extend, ou_closed_form_eigs


def _bisect(f, lo, hi, steps=200):
    flo = f(lo)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo, flo = mid, f(mid)
    return 0.5 * (lo + hi)


class TestNystrom:
    def test_bm_eigenvalues(self):
        p = ModelParams(H=0.5, beta=0.0)
        g = QuadGrid.gauss_legendre_unit(400)
        spec = nystrom_eigs(cov_matrix(g, p), g, 10)
        exact = ((np.arange(1, 11) - 0.5) * np.pi) ** -2.0
        assert_allclose(spec.lam, exact, rtol=1e-3)

    def test_trace_identity(self):
        p = ModelParams(H=0.7, beta=-1.0)
        g = QuadGrid.gauss_legendre_unit(200)
        cov = cov_matrix(g, p)
        spec = nystrom_eigs(cov, g, 200)
        trace = float(g.weights @ np.diag(cov.values))
        assert_allclose(spec.lam.sum(), trace, rtol=1e-3)

    def test_leading_eigenvalue_grid_stable(self):
        p = ModelParams(H=0.7, beta=-1.0)
        lam1 = []
        for n in (400, 800):
            g = QuadGrid.gauss_legendre_unit(n)
            lam1.append(nystrom_eigs(cov_matrix(g, p), g, 1).lam[0])
        assert abs(lam1[0] / lam1[1] - 1.0) < 1e-4

    def test_ordering_and_sign_convention(self, oracle_07):
        _, _, spec = oracle_07
        assert np.all(np.diff(spec.lam) < 0)
        assert np.all(spec.lam > 0)
        assert np.all(spec.phi_integral < 0)

    def test_weighted_orthonormality(self, oracle_07):
        _, grid, spec = oracle_07
        gram = (spec.phi * grid.weights[:, None]).T @ spec.phi
        assert np.max(np.abs(gram - np.eye(spec.n_max))) <= 1e-8

    def test_mercer_bound(self, oracle_07):
        p, grid, spec = oracle_07
        for j in (100, 400, 700):
            x = grid.nodes[j]
            partial = np.cumsum(spec.lam * spec.phi[j, :] ** 2)
            kxx = fou_cov(x, x, p)
            assert partial[-1] <= kxx * (1.0 + 1e-6)
            assert np.all(np.diff(partial) >= 0)

    def test_n_max_validation(self):
        p = ModelParams(H=0.5)
        g = QuadGrid.gauss_legendre_unit(20)
        with pytest.raises(DomainError):
            nystrom_eigs(cov_matrix(g, p), g, 21)


class TestClosedFormOU:
    def test_bm_case(self):
        spec = ou_closed_form_eigs(0.0, 5)
        assert_allclose(spec.nu[0], math.pi / 2.0, rtol=1e-15)
        assert_allclose(spec.lam[0], 4.0 / math.pi ** 2, rtol=1e-15)

    def test_beta_one_root_against_bisection(self):
        spec = ou_closed_form_eigs(1.0, 3)
        # beta = 1: the top mode is the linear one, lambda = 1, phi ~ x
        assert_allclose(spec.lam[0], 1.0, rtol=1e-14)
        assert spec.nu[0] == 0.0
        # independent oracle: smallest root of tan(nu) = nu lies in (pi, 3pi/2)
        nu1 = _bisect(lambda v: v - math.tan(v), math.pi + 1e-9,
                      1.5 * math.pi - 1e-9)
        assert_allclose(spec.nu[1], nu1, rtol=1e-12)
        assert_allclose(spec.lam[1], 1.0 / (nu1 ** 2 + 1.0), rtol=1e-12)

    def test_beta_above_one_hyperbolic_mode(self):
        spec = ou_closed_form_eigs(2.0, 3)
        kappa = -spec.nu[0]
        assert 0.0 < kappa < 2.0
        assert_allclose(math.tanh(kappa), kappa / 2.0, rtol=1e-12)
        assert_allclose(spec.lam[0], 1.0 / (4.0 - kappa ** 2), rtol=1e-12)

    @pytest.mark.parametrize("beta", [0.5, 1.0, -1.0, 3.0])
    def test_roots_solve_the_equation(self, beta):
        spec = ou_closed_form_eigs(beta, 12)
        osc = spec.nu > 0
        assert_allclose(np.tan(spec.nu[osc]), spec.nu[osc] / beta, rtol=1e-8)
        assert np.all(np.diff(spec.nu[osc]) > 0)
        assert np.all(np.diff(spec.lam) < 0)

    @pytest.mark.parametrize("beta", [-2.0, 0.5, 2.0])
    def test_asymptotic_spacing(self, beta):
        spec = ou_closed_form_eigs(beta, 60)
        n = np.arange(1, 61)
        gap = np.abs(spec.nu - (np.pi * n - np.pi / 2.0))
        tail = gap[spec.nu > 0]
        assert gap[-1] < 0.03
        assert gap[-1] < tail[5] < tail[0] + 1.0

    def test_matches_nystrom(self):
        p = ModelParams(H=0.5, beta=1.0)
        g = QuadGrid.gauss_legendre_unit(600)
        spec = nystrom_eigs(cov_matrix(g, p), g, 10)
        closed = ou_closed_form_eigs(1.0, 10)
        assert_allclose(spec.lam, closed.lam, rtol=1e-3)

    def test_phi_values_and_convention(self):
        spec = ou_closed_form_eigs(1.0, 4)
        assert np.all(spec.phi_integral < 0)
        vals = spec.phi_values(0.5)
        assert_allclose(vals[0], -math.sqrt(3.0) * 0.5, rtol=1e-14)
        nu = spec.nu[1:]
        norm = np.sqrt(1.0 - np.sin(2 * nu) / (2 * nu))
        assert_allclose(vals[1:], -math.sqrt(2.0) * np.sin(nu * 0.5) / norm,
                        rtol=1e-12)


class TestNystromExtend:
    def test_exact_at_grid_nodes(self, oracle_07):
        _, grid, spec = oracle_07
        j = 333
        vals = nystrom_extend(spec, float(grid.nodes[j]))
        assert_allclose(vals, spec.phi[j, :], atol=1e-10)

    def test_bm_endpoint_values(self):
        p = ModelParams(H=0.5, beta=0.0)
        g = QuadGrid.gauss_legendre_unit(400)
        spec = nystrom_eigs(cov_matrix(g, p), g, 8)
        assert_allclose(np.abs(spec.phi1), math.sqrt(2.0), rtol=1e-3)

    def test_outside_domain(self, oracle_07):
        _, _, spec = oracle_07
        with pytest.raises(DomainError):
            nystrom_extend(spec, 1.5)
