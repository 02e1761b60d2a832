"""Prior tests: kernel values against quadrature, Gram factorization,
process-draw moments against Monte Carlo, basis algebra against naive
summation, and series-coefficient support bounds."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from plrbayes.priors import (
    FactorizationError,
    MaternSpec,
    WaveletPriorSpec,
    basis_eval,
    coefficient_bound,
    default_level_cap,
    gram_and_factor,
    kernel_matrix,
    matern_kernel,
    sample_gp,
    sample_wavelet_prior,
    series_eval,
)


def spectral_quadrature(alpha, h, tail=1e4):
    """Oracle: direct quadrature of the one-dimensional spectral integral."""
    val, _ = quad(
        lambda lam: (1 + lam**2) ** (-(alpha + 0.5)),
        0,
        tail,
        weight="cos",
        wvar=h,
        limit=400,
    )
    return 2.0 * val


class TestMaternKernel:
    def test_analytic_point_at_zero(self):
        spec = MaternSpec(alpha=0.5)
        assert matern_kernel([0.3], [0.3], spec) == pytest.approx(math.pi, rel=1e-12)

    def test_exponential_fourier_pair(self):
        spec = MaternSpec(alpha=0.5)
        got = matern_kernel([0.0], [1.0], spec)
        assert got == pytest.approx(math.pi * math.exp(-1.0), rel=1e-10)

    def test_against_quadrature_oracle(self):
        spec = MaternSpec(alpha=1.5)
        got = matern_kernel([0.0], [0.7], spec)
        want = spectral_quadrature(1.5, 0.7)
        assert got == pytest.approx(want, rel=1e-6)

    def test_random_pairs_against_quadrature(self):
        rng = np.random.default_rng(101)
        for _ in range(30):
            alpha = rng.uniform(0.3, 4.0)
            h = rng.uniform(0.0, 2.0)
            got = matern_kernel([0.0], [h], MaternSpec(alpha=alpha))
            want = spectral_quadrature(alpha, h)
            assert got == pytest.approx(want, rel=1e-6)

    def test_symmetry_and_diagonal_dominance(self):
        rng = np.random.default_rng(5)
        spec = MaternSpec(alpha=1.2, lengthscale=0.4, amplitude=2.0)
        for _ in range(200):
            a = rng.uniform(size=2)
            b = rng.uniform(size=2)
            kab = matern_kernel(a, b, spec)
            assert kab == pytest.approx(matern_kernel(b, a, spec), rel=1e-12)
            assert matern_kernel(a, a, spec) >= kab

    def test_lengthscale_and_amplitude(self):
        base = MaternSpec(alpha=1.0)
        scaled = MaternSpec(alpha=1.0, lengthscale=2.0, amplitude=3.0)
        got = matern_kernel([0.0], [1.0], scaled)
        want = 3.0 * matern_kernel([0.0], [0.5], base)
        assert got == pytest.approx(want, rel=1e-12)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            MaternSpec(alpha=-1.0)
        with pytest.raises(ValueError):
            MaternSpec(alpha=1.0, lengthscale=0.0)


class TestGramFactor:
    def test_single_point(self):
        spec = MaternSpec(alpha=1.0)
        factor = gram_and_factor(np.array([[0.4]]), spec)
        kww = matern_kernel([0.4], [0.4], spec)
        assert factor.gram[0, 0] == pytest.approx(kww)
        assert factor.chol[0, 0] == pytest.approx(math.sqrt(kww + factor.jitter))

    def test_duplicate_points_escalate(self):
        # Exact duplicates with a jitter below the rounding floor force the
        # ladder up at least one rung; the factor still reproduces the target.
        spec = MaternSpec(alpha=3.5, jitter=1e-17)
        pts = np.array([[0.5], [0.5], [0.5], [0.2]])
        factor = gram_and_factor(pts, spec)
        assert factor.escalations >= 1
        assert factor.jitter > spec.jitter
        recon = factor.chol @ factor.chol.T
        target = factor.gram + factor.jitter * np.eye(4)
        rel = np.linalg.norm(recon - target) / np.linalg.norm(target)
        assert rel <= 1e-8

    def test_recomposition_random_design(self):
        rng = np.random.default_rng(33)
        spec = MaternSpec(alpha=1.0, lengthscale=0.3)
        pts = rng.uniform(size=(20, 1))
        factor = gram_and_factor(pts, spec)
        recon = factor.chol @ factor.chol.T
        target = factor.gram + factor.jitter * np.eye(20)
        rel = np.linalg.norm(recon - target) / np.linalg.norm(target)
        assert rel <= 1e-8

    def test_psd_before_jitter_on_separated_design(self):
        spec = MaternSpec(alpha=1.0)
        pts = np.linspace(0.05, 0.95, 12)[:, None]
        gram = kernel_matrix(pts, spec)
        eigvals = np.linalg.eigvalsh(gram)
        assert eigvals.min() >= -1e-10

    def test_ladder_exhaustion_raises(self, monkeypatch):
        spec = MaternSpec(alpha=1.0)
        pts = np.array([[0.1], [0.9]])

        def always_fail(_):
            raise np.linalg.LinAlgError("forced")

        monkeypatch.setattr(np.linalg, "cholesky", always_fail)
        with pytest.raises(FactorizationError, match="duplicate"):
            gram_and_factor(pts, spec)


class TestSampleGp:
    def test_reproducible(self):
        spec = MaternSpec(alpha=1.0)
        factor = gram_and_factor(np.array([[0.1], [0.5], [0.9]]), spec)
        a = sample_gp(factor, np.random.default_rng(9))
        b = sample_gp(factor, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_empirical_covariance(self):
        spec = MaternSpec(alpha=1.0, lengthscale=0.5)
        factor = gram_and_factor(np.array([[0.1], [0.5], [0.9]]), spec)
        rng = np.random.default_rng(77)
        draws = np.stack([sample_gp(factor, rng) for _ in range(100_000)])
        emp = np.cov(draws.T)
        target = factor.gram + factor.jitter * np.eye(3)
        np.testing.assert_allclose(emp, target, rtol=0.05)

    def test_amplitude_scales_variance(self):
        pts = np.array([[0.2], [0.8]])
        base = gram_and_factor(pts, MaternSpec(alpha=1.0))
        big = gram_and_factor(pts, MaternSpec(alpha=1.0, amplitude=4.0))
        rng = np.random.default_rng(13)
        var_base = np.var([sample_gp(base, rng)[0] for _ in range(100_000)])
        rng = np.random.default_rng(13)
        var_big = np.var([sample_gp(big, rng)[0] for _ in range(100_000)])
        assert var_big / var_base == pytest.approx(4.0, rel=0.05)


class TestBasis:
    def test_level_zero_is_constant_one(self):
        w = np.linspace(0, 1, 11)
        np.testing.assert_array_equal(basis_eval(0, 0, w), np.ones(11))

    def test_hat_apex_and_endpoints(self):
        for level in (1, 2, 4):
            for shift in (0, 2**level - 1):
                lo = shift / 2**level
                hi = (shift + 1) / 2**level
                mid = (lo + hi) / 2
                assert basis_eval(level, shift, mid) == pytest.approx(2 ** (level / 2))
                assert basis_eval(level, shift, lo) == 0.0
                assert basis_eval(level, shift, hi) == 0.0

    def test_index_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            basis_eval(2, 4, 0.3)
        with pytest.raises(ValueError, match="out of range"):
            basis_eval(-1, 0, 0.3)

    def test_series_eval_matches_naive_double_loop(self):
        rng = np.random.default_rng(55)
        coeffs = [rng.normal(size=2**level) for level in range(5)]
        w = rng.uniform(size=40)
        naive = np.zeros(40)
        for level in range(5):
            for shift in range(2**level):
                naive += coeffs[level][shift] * basis_eval(level, shift, w)
        got = series_eval(coeffs, w)
        np.testing.assert_allclose(got, naive, atol=1e-12)

    def test_series_eval_shape_validation(self):
        with pytest.raises(ValueError, match="coefficients"):
            series_eval([np.array([1.0]), np.array([1.0])], np.array([0.5]))


class TestWaveletPrior:
    def test_support_bound_exact(self):
        rng = np.random.default_rng(2)
        spec = WaveletPriorSpec(alpha0=0.8, M=2.0, L_max=6)
        for _ in range(50):
            coeffs = sample_wavelet_prior(spec, rng)
            for level, arr in enumerate(coeffs):
                assert np.all(np.abs(arr) <= coefficient_bound(spec, level))

    def test_weighted_sup_norm_inside_ball(self):
        rng = np.random.default_rng(3)
        spec = WaveletPriorSpec(alpha0=1.1, M=1.5, L_max=7)
        coeffs = sample_wavelet_prior(spec, rng)
        weighted = max(
            2 ** (level * (spec.alpha0 + 0.5)) * np.max(np.abs(arr))
            for level, arr in enumerate(coeffs)
        )
        assert weighted <= spec.M

    def test_top_coefficient_mean(self):
        rng = np.random.default_rng(4)
        spec = WaveletPriorSpec(alpha0=1.0, M=1.0, L_max=0)
        draws = np.array([sample_wavelet_prior(spec, rng)[0][0] for _ in range(100_000)])
        # Uniform on [-M, M] has sd M/sqrt(3).
        assert abs(draws.mean()) <= 3.0 * (spec.M / math.sqrt(3)) / math.sqrt(100_000)

    def test_level_cap_zero_single_coefficient(self):
        spec = WaveletPriorSpec(alpha0=1.0, L_max=0)
        coeffs = sample_wavelet_prior(spec, np.random.default_rng(0))
        assert len(coeffs) == 1 and coeffs[0].shape == (1,)

    def test_strong_decay(self):
        rng = np.random.default_rng(8)
        spec = WaveletPriorSpec(alpha0=20.0, M=1.0, L_max=3)
        coeffs = sample_wavelet_prior(spec, rng)
        tail = max(np.max(np.abs(arr)) for arr in coeffs[1:])
        assert tail <= spec.M * 2.0**-20.5

    def test_small_alpha_warns(self):
        with pytest.warns(RuntimeWarning, match="alpha0"):
            WaveletPriorSpec(alpha0=0.4, L_max=2)

    def test_default_level_cap(self):
        assert default_level_cap(500) == 9
        assert default_level_cap(1024) == 10
