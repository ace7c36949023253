import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fouspec.exceptions import DomainError
from fouspec.model import (ModelParams, QuadGrid, c_alpha, cov_matrix, fbm_cov,
                           fou_cov, fou_cov_singular)
from fouspec.model import _fou_cov_raw


def test_params_invariants():
    p = ModelParams(H=0.3, beta=-1.0, T=2.0)
    assert p.alpha == 2.0 - 2.0 * 0.3
    assert p.beta_eff == -2.0
    with pytest.raises(DomainError):
        ModelParams(H=0.0)
    with pytest.raises(DomainError):
        ModelParams(H=1.0)
    with pytest.raises(DomainError):
        ModelParams(H=0.5, T=0.0)
    with pytest.raises(DomainError):
        ModelParams(H=0.5, mu=0.0)


def test_quad_grid_invariants():
    g = QuadGrid.gauss_legendre_unit(64)
    assert abs(g.weights.sum() - 1.0) <= 1e-12
    assert np.all(np.diff(g.nodes) > 0)
    assert 0.0 < g.nodes[0] and g.nodes[-1] < 1.0
    s = QuadGrid.semi_axis(37.0)
    assert s.domain == "semi-axis"
    assert np.all(s.weights > 0)
    with pytest.raises(DomainError):
        QuadGrid([0.2, 0.1], [0.5, 0.5])
    with pytest.raises(DomainError):
        QuadGrid([0.1, 0.2], [0.5, -0.5])
    with pytest.raises(DomainError):
        QuadGrid([0.1, 1.5], [0.5, 0.5])


class TestFbmCov:
    def test_variance_case(self):
        for t, H in [(0.8, 0.3), (1.5, 0.75)]:
            assert_allclose(fbm_cov(t, t, H), t ** (2 * H), rtol=1e-15)

    def test_known_values(self):
        assert fbm_cov(0.5, 1.0, 0.5) == 0.5          # min(s,t) for H = 1/2
        assert_allclose(fbm_cov(1.0, 2.0, 0.75), math.sqrt(2.0), rtol=1e-15)

    def test_symmetry(self):
        assert fbm_cov(0.3, 0.9, 0.7) == fbm_cov(0.9, 0.3, 0.7)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            fbm_cov(0.1, 0.2, 1.0)
        with pytest.raises(DomainError):
            fbm_cov(-0.1, 0.2, 0.5)


class TestFouCov:
    def test_zero_drift_reduces_to_fbm(self):
        rng = np.random.RandomState(0)
        for _ in range(10):
            H = rng.uniform(0.05, 0.95)
            s, t = rng.uniform(0.0, 1.0, 2)
            p = ModelParams(H=H, beta=0.0)
            assert_allclose(fou_cov(s, t, p), fbm_cov(s, t, H), atol=1e-12)

    def test_classical_ou_variance(self):
        # int_0^1 e^{2(1-u)} du = (e^2 - 1)/2
        p = ModelParams(H=0.5, beta=1.0)
        assert_allclose(fou_cov(1.0, 1.0, p), (math.e ** 2 - 1.0) / 2.0, rtol=1e-13)

    def test_h_half_closed_form(self):
        for beta in (1.0, -2.0, 0.3):
            p = ModelParams(H=0.5, beta=beta)
            for s, t in [(0.3, 0.8), (0.5, 1.0), (1.0, 1.0), (0.9, 0.95)]:
                closed = math.exp(beta * (s + t)) \
                    * (1.0 - math.exp(-2.0 * beta * min(s, t))) / (2.0 * beta)
                assert_allclose(fou_cov(s, t, p), closed, rtol=1e-10)

    def test_scaling_law(self):
        rng = np.random.RandomState(1)
        for _ in range(15):
            H = rng.uniform(0.05, 0.95)
            beta = rng.uniform(-3.0, 3.0)
            T = rng.uniform(0.3, 2.5)
            s, t = np.sort(rng.uniform(0.02, 1.0, 2))
            lhs = fou_cov(s * T, t * T, ModelParams(H=H, beta=beta, T=T))
            rhs = T ** (2 * H) * fou_cov(s, t, ModelParams(H=H, beta=beta * T))
            assert_allclose(lhs, rhs, rtol=1e-6)

    def test_symmetry_exact(self):
        p = ModelParams(H=0.7, beta=-1.0)
        assert fou_cov(0.3, 0.8, p) == fou_cov(0.8, 0.3, p)

    def test_zero_time(self):
        p = ModelParams(H=0.7, beta=-1.0)
        assert fou_cov(0.0, 0.7, p) == 0.0

    def test_rejects_bad_order_and_times(self):
        p = ModelParams(H=0.7, beta=-1.0)
        with pytest.raises(DomainError):
            fou_cov(0.1, 0.2, p, gl_order=1)
        with pytest.raises(DomainError):
            fou_cov(0.1, 1.2, p)


class TestFouCovSingular:
    def test_c_alpha(self):
        assert c_alpha(0.5) == 0.75 * 0.5

    def test_fbm_variance(self):
        p = ModelParams(H=0.75, beta=0.0)
        assert_allclose(fou_cov_singular(1.0, 1.0, p), 1.0, rtol=1e-8)

    @pytest.mark.parametrize("H,beta,s,t", [
        (0.75, -1.0, 0.3, 0.8),
        (0.55, -2.0, 0.2, 0.9),
        (0.9, 1.0, 0.5, 1.0),
        (0.65, 0.5, 0.7, 0.7),
    ])
    def test_cross_oracle_agreement(self, H, beta, s, t):
        p = ModelParams(H=H, beta=beta)
        assert_allclose(fou_cov_singular(s, t, p), fou_cov(s, t, p), rtol=1e-4)

    def test_rejects_small_h(self):
        with pytest.raises(DomainError):
            fou_cov_singular(0.5, 0.5, ModelParams(H=0.5))


class TestCovMatrix:
    def test_min_kernel_two_points(self):
        g = QuadGrid.gauss_legendre_unit(2)
        K = cov_matrix(g, ModelParams(H=0.5, beta=0.0)).values
        t1, t2 = g.nodes
        assert_allclose(K, [[t1, t1], [t1, t2]], rtol=1e-14)

    def test_symmetric_positive_diagonal(self):
        g = QuadGrid.gauss_legendre_unit(40)
        K = cov_matrix(g, ModelParams(H=0.3, beta=1.5)).values
        assert np.array_equal(K, K.T)
        assert np.all(np.diag(K) > 0)

    def test_psd(self):
        g = QuadGrid.gauss_legendre_unit(200)
        K = cov_matrix(g, ModelParams(H=0.7, beta=-1.0)).values
        B = np.sqrt(g.weights)[:, None] * K * np.sqrt(g.weights)[None, :]
        lam = np.linalg.eigvalsh(B)
        assert lam.min() >= -1e-10 * np.trace(B)

    @pytest.mark.parametrize("H,beta", [(0.7, -1.0), (0.3, 1.5), (0.5, 1.0),
                                        (0.9, -2.0), (0.6, 1e-4)])
    def test_matches_scalar_kernel(self, H, beta):
        g = QuadGrid.gauss_legendre_unit(25)
        p = ModelParams(H=H, beta=beta)
        K = cov_matrix(g, p).values
        for i in range(0, 25, 6):
            for j in range(i, 25, 5):
                assert_allclose(K[i, j], fou_cov(g.nodes[i], g.nodes[j], p),
                                rtol=1e-8, atol=1e-14)

    def test_t_scaling_in_matrix(self):
        g = QuadGrid.gauss_legendre_unit(10)
        p = ModelParams(H=0.7, beta=-1.0, T=2.0)
        K = cov_matrix(g, p).values
        # entries are the [0,T] kernel at scaled nodes
        assert_allclose(K[3, 7], fou_cov(g.nodes[3] * 2.0, g.nodes[7] * 2.0, p),
                        rtol=1e-10)

    def test_requires_unit_grid(self):
        s = QuadGrid.semi_axis()
        with pytest.raises(DomainError):
            cov_matrix(s, ModelParams(H=0.5))


def test_raw_kernel_branches_order_converged():
    # both sides of the s = t/2 branch switch already converged at order 64
    for H, b in [(0.3, -1.0), (0.8, 2.0)]:
        for s in (0.4999, 0.5001):
            assert_allclose(_fou_cov_raw(s, 1.0, H, b, 64),
                            _fou_cov_raw(s, 1.0, H, b, 96), rtol=1e-12)
