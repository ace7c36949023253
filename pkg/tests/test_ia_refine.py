import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fouspec.asymptotics import b_alpha_closed, lambda_from_nu, nu_first_order, phi_first_order
from fouspec.exceptions import DomainError, SolverError
from fouspec.ia_refine import evaluate_abxi, find_nu, refined_eigenpair, solve_p
from fouspec.model import ModelParams, QuadGrid
from fouspec.spectral_oracle import ou_closed_form_eigs


class TestDegenerateAlphaOne:
    def test_p_equals_monomials(self):
        p = ModelParams(H=0.5, beta=0.0)
        sol = solve_p(10.0, p)
        w = sol.grid.nodes
        assert_allclose(sol.p_tilde[(0, 1)], np.ones_like(w), atol=1e-14)
        assert_allclose(sol.p_tilde[(1, -1)], w / 10.0, atol=1e-14)

    def test_boundary_values(self):
        p = ModelParams(H=0.5, beta=0.0)
        vals = evaluate_abxi(12.0, p)
        assert abs(vals["a_plus_mi"] - 2.0) <= 1e-10
        assert abs(vals["a_minus_mi"]) <= 1e-10
        assert abs(vals["b_plus_mi"] - (-2j)) <= 1e-10
        assert abs(vals["b_minus_pi"]) <= 1e-10
        assert abs(vals["x_beta_i"] - 1.0) <= 1e-12

    def test_roots_and_lambda(self):
        p = ModelParams(H=0.5, beta=0.0)
        for n in (3, 4, 7):
            nu, ref, _ = find_nu(n, p)
            assert abs(math.cos(nu)) <= 1e-8
            assert_allclose(nu, (n - 0.5) * math.pi, atol=1e-8)
            lam = lambda_from_nu(nu, 0.5, 0.0)
            assert abs(lam - 1.0 / nu ** 2) <= 1e-8
            assert ref.residual <= 1e-10 * abs(ref.xi * np.conj(ref.eta))

    def test_h_half_nonzero_beta_reproduces_ou(self):
        p = ModelParams(H=0.5, beta=1.0)
        closed = ou_closed_form_eigs(1.0, 6)
        for n in (3, 5):
            nu, _, _ = find_nu(n, p)
            assert_allclose(nu, closed.nu[n - 1], atol=1e-10)


class TestContraction:
    @pytest.mark.parametrize("H,nu", [(0.55, 10.0), (0.7, 10.0), (0.7, 40.0),
                                      (0.9, 15.0)])
    def test_operator_norm_below_one(self, H, nu):
        p = ModelParams(H=H, beta=-1.0)
        sol = solve_p(nu, p)
        assert sol.contraction_norm < 1.0

    def test_iteration_count_recorded(self):
        p = ModelParams(H=0.7, beta=0.0)
        sol = solve_p(20.0, p)
        assert sol.iterations >= 4


class TestBoundaryAsymptotics:
    def test_a_b_rates(self):
        # |a+(-i) - 2| = O(1/nu), |b+(-i) + 2i| = O(1/nu^2)
        p = ModelParams(H=0.7, beta=0.0)
        da, db = [], []
        for nu in (20.0, 40.0):
            vals = evaluate_abxi(nu, p)
            da.append(abs(vals["a_plus_mi"] - 2.0))
            db.append(abs(vals["b_plus_mi"] + 2j))
        assert da[1] < 0.7 * da[0]
        assert db[1] < 0.4 * db[0]

    def test_xi_eta_modulus_limit(self):
        p = ModelParams(H=0.7, beta=-1.0)
        b = b_alpha_closed(p.alpha)
        target = 4.0 * (3.0 - p.alpha) / 2.0 * math.sqrt(1.0 + b * b)
        dev = []
        for nu in (50.0, 200.0):
            vals = evaluate_abxi(nu, p)
            dev.append(abs(abs(vals["xi"] * np.conj(vals["eta"])) / target - 1.0))
        assert dev[1] < dev[0] < 0.01

    def test_xi_eta_argument_form(self):
        p = ModelParams(H=0.7, beta=-1.0)
        b = b_alpha_closed(p.alpha)
        dev = []
        for nu in (100.0, 200.0):
            vals = evaluate_abxi(nu, p)
            prod = vals["xi"] * np.conj(vals["eta"])
            target = nu + (1 - p.alpha) * math.pi / 4.0 - math.pi + cmath.phase(1j + b)
            d = (cmath.phase(prod) - target) % (2.0 * math.pi)
            dev.append(min(d, 2.0 * math.pi - d))
        assert dev[1] < dev[0] < 3.0 / 100.0


class TestFindNu:
    def test_refined_close_to_first_order(self):
        p = ModelParams(H=0.7, beta=-1.0)
        gaps = {}
        for n in (5, 10, 20):
            nu, _, _ = find_nu(n, p)
            gaps[n] = abs(nu - nu_first_order(n, p.H))
        # O(1/n): the scaled gaps stay bounded by the n=5 value
        assert gaps[10] * 10 <= gaps[5] * 5 * 1.5
        assert gaps[20] * 20 <= gaps[5] * 5 * 1.5

    def test_domain_and_bracket_errors(self):
        p = ModelParams(H=0.7, beta=-1.0)
        with pytest.raises(DomainError):
            find_nu(2, p)
        with pytest.raises(DomainError):
            find_nu(5, ModelParams(H=0.3))
        with pytest.raises(SolverError):
            find_nu(10, p, bracket=1e-7)  # no sign change that close in

    def test_dominates_first_order(self, oracle_07):
        p, _, spec = oracle_07
        for n in (5, 8, 10):
            nu, _, _ = find_nu(n, p)
            lam_rf = lambda_from_nu(nu, p.H, p.beta)
            lam_fo = lambda_from_nu(nu_first_order(n, p.H), p.H, p.beta)
            err_rf = abs(lam_rf / spec.lam[n - 1] - 1.0)
            err_fo = abs(lam_fo / spec.lam[n - 1] - 1.0)
            assert err_rf < err_fo


class TestRefinedEigenpair:
    def test_h_half_gives_sine(self):
        p = ModelParams(H=0.5, beta=0.0)
        g = QuadGrid.gauss_legendre_unit(120)
        for n in (3, 4):
            pair, _ = refined_eigenpair(n, p, g)
            nu = (n - 0.5) * math.pi
            assert_allclose(pair.phi, -math.sqrt(2.0) * np.sin(nu * g.nodes),
                            atol=1e-6)
            assert_allclose(pair.phi1, -math.sqrt(2.0) * math.sin(nu), atol=1e-6)

    def test_closer_to_oracle_than_first_order(self, oracle_07):
        p, grid, spec = oracle_07
        n = 10
        pair, ref = refined_eigenpair(n, p, grid)
        fo = phi_first_order(grid.nodes, n, p.H)
        d_ref = math.sqrt(float(grid.weights @ (pair.phi - spec.phi[:, n - 1]) ** 2))
        d_fo = math.sqrt(float(grid.weights @ (fo - spec.phi[:, n - 1]) ** 2))
        assert d_ref < d_fo
        assert d_ref < 0.01

    def test_endpoint_magnitude(self, oracle_07):
        p, grid, _ = oracle_07
        pair, _ = refined_eigenpair(12, p, grid)
        assert abs(pair.phi1 ** 2 / (2 * p.H + 1) - 1.0) <= 0.10

    def test_endpoint_consistent_with_samples(self, oracle_07):
        p, grid, _ = oracle_07
        pair, _ = refined_eigenpair(8, p, grid)
        # the last grid node sits within 1e-4 of x=1
        assert abs(pair.phi[-1] - pair.phi1) < 5e-3

    def test_diagnostics_populated(self, oracle_07):
        p, grid, _ = oracle_07
        pair, ref = refined_eigenpair(6, p, grid)
        assert ref.fp_iterations > 0
        assert ref.contraction_norm < 1.0
        assert ref.residual <= 1e-10 * abs(ref.xi * np.conj(ref.eta))
        assert pair.phi_integral < 0
        assert np.all(np.isfinite(ref.p0_plus))

    def test_gamma_beta_positive_on_grid(self, oracle_07):
        p, _, _ = oracle_07
        nu, _, sol = find_nu(6, p)
        u = np.logspace(-4, 1, 100)
        r = p.beta_eff / nu
        gb = np.abs((u * u - r * r) / (r * r + 1.0)
                    + u ** (p.alpha - 1.0) * np.exp(1j * (1 - p.alpha) * math.pi / 2))
        assert np.all(gb > 0)

    def test_requires_unit_grid(self):
        p = ModelParams(H=0.7, beta=-1.0)
        with pytest.raises(DomainError):
            refined_eigenpair(5, p, QuadGrid.semi_axis())
