"""Sampler tests: every conditional block against its closed-form law
(Kolmogorov-Smirnov at level 1e-3 with 1e5 draws), slice-update invariance,
bound enforcement, chain arithmetic, determinism, and degenerate-noise
concentration."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import gammainc

from plrbayes.dgp import ConstantFunction, DgpSpec, TrueFunctions, make_holder_function, simulate
from plrbayes.model import Dataset, ModelConfig
from plrbayes.priors import (
    MaternSpec,
    WaveletPriorSpec,
    coefficient_bound,
    gp_posterior_draw,
    gram_and_factor,
)
from plrbayes.samplers import (
    ChainConfig,
    PosteriorDraws,
    SliceShrinkageError,
    draw_beta_conditional,
    draw_xi_conditional,
    effective_sample_size,
    gibbs_beta_eta,
    gibbs_beta_m,
    run_chain,
    slice_update_wavelet,
    split_psrf,
)

KS_LEVEL = 1e-3
N_DRAWS = 100_000


def smooth_truth(sigma01_sq=1.0):
    return TrueFunctions(
        beta0=[1.0],
        m01=make_holder_function(1.0, 1.0, 4, 21),
        m02=(make_holder_function(1.0, 1.0, 4, 22),),
        sigma01_sq=sigma01_sq,
    )


class TestBetaBlock:
    def test_flat_conditional_matches_closed_form(self):
        # n=3, scalar X: the conditional is N(sum(r s)/sum(s^2), s1^2/sum(s^2)).
        rng = np.random.default_rng(42)
        s = np.array([0.8, -1.1, 0.4])
        r = np.array([1.2, -0.3, 0.9])
        xi = 1.0 / 0.7  # sigma1^2 = 0.7
        mean = float(r @ s / (s @ s))
        sd = math.sqrt(0.7 / float(s @ s))
        cfg = ModelConfig(sigma01_sq=0.7)
        draws = np.array(
            [
                draw_beta_conditional(r, s[:, None], xi, cfg, "conjugate-flat", rng)[0]
                for _ in range(N_DRAWS)
            ]
        )
        assert abs(draws.mean() - mean) <= 3 * sd / math.sqrt(N_DRAWS)
        assert draws.var() == pytest.approx(sd**2, rel=3 * math.sqrt(2 / N_DRAWS))
        p = stats.kstest(draws, stats.norm(mean, sd).cdf).pvalue
        assert p >= KS_LEVEL

    def test_truncated_conditional_matches_truncnorm(self):
        # Narrow box forces the truncation machinery; scalar case is exact.
        rng = np.random.default_rng(43)
        s = np.array([0.5, -0.7])
        r = np.array([2.0, -2.5])
        xi = 1.0
        mean = float(r @ s / (s @ s))
        sd = 1.0 / math.sqrt(float(s @ s))
        b = 0.5 * sd + mean  # box clips well inside the conditional mass
        cfg = ModelConfig(beta_bound=abs(b))
        lo, hi = -abs(b), abs(b)
        draws = np.array(
            [
                draw_beta_conditional(r, s[:, None], xi, cfg, "conjugate-truncated", rng)[0]
                for _ in range(N_DRAWS)
            ]
        )
        assert np.all(np.abs(draws) <= abs(b))
        a_std, b_std = (lo - mean) / sd, (hi - mean) / sd
        p = stats.kstest(draws, stats.truncnorm(a_std, b_std, loc=mean, scale=sd).cdf).pvalue
        assert p >= KS_LEVEL

    def test_bounds_always_respected_multivariate(self):
        rng = np.random.default_rng(44)
        cfg = ModelConfig(beta_bound=0.3)
        design = rng.normal(size=(6, 2))
        resp = rng.normal(size=6, scale=3.0)
        for _ in range(2000):
            draw = draw_beta_conditional(resp, design, 1.0, cfg, "conjugate-truncated", rng)
            assert np.all(np.abs(draw) <= 0.3)


class TestGpBlock:
    def test_two_point_conditional_matches_dense_formula(self):
        # Oracle: direct 2x2 linear algebra for the conditional of f given
        # obs = f + noise under the prior f ~ N(0, K).
        spec = MaternSpec(alpha=1.0, lengthscale=0.5)
        factor = gram_and_factor(np.array([[0.25], [0.75]]), spec)
        k = factor.gram + factor.jitter * np.eye(2)
        v = 0.6
        obs = np.array([1.0, -0.4])
        solve = np.linalg.solve(k + v * np.eye(2), obs)
        mean = k @ solve
        cov = k - k @ np.linalg.solve(k + v * np.eye(2), k)
        rng = np.random.default_rng(45)
        draws = np.stack([gp_posterior_draw(factor, obs, v, rng) for _ in range(N_DRAWS)])
        for i in range(2):
            se = math.sqrt(cov[i, i] / N_DRAWS)
            assert abs(draws[:, i].mean() - mean[i]) <= 3 * se
            p = stats.kstest(
                draws[:, i], stats.norm(mean[i], math.sqrt(cov[i, i])).cdf
            ).pvalue
            assert p >= KS_LEVEL
        np.testing.assert_allclose(np.cov(draws.T), cov, rtol=0.05, atol=1e-4)


class TestXiBlock:
    def test_matches_truncated_gamma(self):
        rng = np.random.default_rng(46)
        n, ssr = 12, 9.5
        bounds = (0.3, 4.0)
        shape, rate = n / 2 + 1.0, ssr / 2.0
        draws = np.empty(N_DRAWS)
        accepts = 0
        for i in range(N_DRAWS):
            draws[i], ok = draw_xi_conditional(ssr, n, bounds, rng)
            accepts += ok
        assert accepts == N_DRAWS

        def cdf(x):
            x = np.asarray(x, dtype=float)
            lo_mass = gammainc(shape, rate * bounds[0])
            hi_mass = gammainc(shape, rate * bounds[1])
            return (gammainc(shape, rate * np.clip(x, *bounds)) - lo_mass) / (
                hi_mass - lo_mass
            )

        assert np.all((draws >= bounds[0]) & (draws <= bounds[1]))
        assert stats.kstest(draws, cdf).pvalue >= KS_LEVEL

    def test_mass_outside_support(self):
        # Posterior mode far above the upper bound: collapse to that bound.
        draw, ok = draw_xi_conditional(1e-8, 1000, (0.1, 0.2), np.random.default_rng(0))
        assert ok and draw == pytest.approx(0.2)


def make_coeffs(spec):
    return [np.zeros(2**level) for level in range(spec.L_max + 1)]


class TestSliceBlock:
    def test_flat_likelihood_stationary_uniform(self):
        # No design influence: the conditional is the prior itself.
        spec = WaveletPriorSpec(alpha0=1.0, M=1.0, L_max=1)
        rng = np.random.default_rng(47)
        coeffs = make_coeffs(spec)
        bound = coefficient_bound(spec, 1)
        draws = np.empty(N_DRAWS)
        for i in range(N_DRAWS):
            draws[i] = slice_update_wavelet(
                coeffs, 1, 0, np.zeros(1), np.zeros(1), 1.0, spec, rng
            )
        assert stats.kstest(draws, stats.uniform(-bound, 2 * bound).cdf).pvalue >= KS_LEVEL

    def test_gaussian_likelihood_invariance(self):
        # One slice step from stationary starts must preserve the truncated
        # normal conditional (closed-form oracle via scipy.stats.truncnorm).
        spec = WaveletPriorSpec(alpha0=1.0, M=4.0, L_max=0)
        bound = coefficient_bound(spec, 0)
        mu, noise = 0.3, 0.5
        sd = math.sqrt(noise)
        a, b = (-bound - mu) / sd, (bound - mu) / sd
        law = stats.truncnorm(a, b, loc=mu, scale=sd)
        rng = np.random.default_rng(48)
        starts = law.rvs(size=N_DRAWS, random_state=rng)
        draws = np.empty(N_DRAWS)
        coeffs = make_coeffs(spec)
        for i in range(N_DRAWS):
            coeffs[0][0] = starts[i]
            draws[i] = slice_update_wavelet(
                coeffs, 0, 0, np.array([mu]), np.array([1.0]), noise, spec, rng
            )
        assert stats.kstest(draws, law.cdf).pvalue >= KS_LEVEL

    def test_support_never_violated_one_million_steps(self):
        spec = WaveletPriorSpec(alpha0=0.8, M=1.5, L_max=2)
        rng = np.random.default_rng(49)
        coeffs = make_coeffs(spec)
        bound = coefficient_bound(spec, 2)
        resid = np.array([0.7, -0.2])
        basis = np.array([1.3, 0.4])
        ok = True
        for _ in range(1_000_000):
            c = slice_update_wavelet(coeffs, 2, 1, resid, basis, 0.25, spec, rng)
            ok &= abs(c) <= bound
        assert ok

    def test_shrinkage_cap_raises(self):
        spec = WaveletPriorSpec(alpha0=1.0, M=1.0, L_max=0)
        coeffs = make_coeffs(spec)

        class NeverAccept(np.random.Generator):
            pass

        rng = np.random.default_rng(50)
        # An (effectively) minus-infinity log-slice cannot be met when the
        # likelihood is astronomically peaked away from the support.
        with pytest.raises(SliceShrinkageError):
            slice_update_wavelet(
                coeffs, 0, 0, np.array([1e12]), np.array([1.0]), 1e-12, spec, rng, max_shrink=5
            )

    def test_out_of_support_coefficient_rejected(self):
        spec = WaveletPriorSpec(alpha0=1.0, M=1.0, L_max=0)
        coeffs = make_coeffs(spec)
        coeffs[0][0] = 5.0
        with pytest.raises(ValueError, match="support"):
            slice_update_wavelet(
                coeffs, 0, 0, np.zeros(1), np.zeros(1), 1.0, spec, np.random.default_rng(0)
            )


class TestChainMechanics:
    def setup_method(self):
        self.truth = smooth_truth()
        self.data = simulate(DgpSpec(n=40, seed=3), self.truth)
        self.mspec = MaternSpec(alpha=1.0, lengthscale=0.25)
        self.cfg = ModelConfig()

    def test_thinning_arithmetic(self):
        chain = ChainConfig(n_iter=100, burn_in=50, thin=2, seed=0)
        draws = gibbs_beta_m(self.data, self.mspec, self.mspec, chain, self.cfg)
        assert draws.n_draws == 25

    def test_same_seed_bit_identical(self):
        chain = ChainConfig(n_iter=120, burn_in=40, seed=11)
        a = gibbs_beta_m(self.data, self.mspec, self.mspec, chain, self.cfg)
        b = gibbs_beta_m(self.data, self.mspec, self.mspec, chain, self.cfg)
        np.testing.assert_array_equal(a.beta, b.beta)

    def test_truncated_draws_inside_box(self):
        cfg = ModelConfig(beta_bound=0.5)
        chain = ChainConfig(n_iter=200, burn_in=50, seed=2, beta_update="conjugate-truncated")
        draws = gibbs_beta_m(self.data, self.mspec, self.mspec, chain, cfg)
        assert np.all(np.abs(draws.beta) <= 0.5)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ChainConfig(n_iter=10, burn_in=10)
        with pytest.raises(ValueError):
            ChainConfig(n_iter=10, burn_in=2, thin=0)
        with pytest.raises(ValueError):
            ChainConfig(n_iter=10, burn_in=2, init="user")

    def test_unknown_variance_chain(self):
        cfg = ModelConfig(variance_known=False, xi_bounds=(0.05, 20.0))
        chain = ChainConfig(n_iter=400, burn_in=100, seed=9, beta_update="conjugate-flat")
        data = simulate(DgpSpec(n=150, seed=5), self.truth)
        draws = gibbs_beta_m(data, self.mspec, self.mspec, chain, cfg)
        assert draws.xi is not None
        assert np.all((draws.xi >= 0.05) & (draws.xi <= 20.0))
        assert draws.meta["xi_acceptance"] == 1.0
        # Truth has unit variance; the precision posterior should sit near 1.
        assert 0.6 <= draws.xi.mean() <= 1.6

    def test_psrf_two_overdispersed_chains(self):
        data = simulate(DgpSpec(n=200, seed=13), self.truth)
        chain_a = ChainConfig(
            n_iter=1200,
            burn_in=400,
            seed=1,
            init="user",
            init_values={"beta": [5.0]},
            beta_update="conjugate-flat",
        )
        chain_b = ChainConfig(
            n_iter=1200,
            burn_in=400,
            seed=2,
            init="user",
            init_values={"beta": [-5.0]},
            beta_update="conjugate-flat",
        )
        a = gibbs_beta_m(data, self.mspec, self.mspec, chain_a, self.cfg)
        b = gibbs_beta_m(data, self.mspec, self.mspec, chain_b, self.cfg)
        half = min(a.n_draws, b.n_draws)
        chains = np.stack([a.beta[:half, 0], b.beta[:half, 0]])
        within = chains.var(axis=1, ddof=1).mean()
        between = half * chains.mean(axis=1).var(ddof=1)
        var_hat = (half - 1) / half * within + between / half
        psrf = math.sqrt(var_hat / within)
        print(f"two-chain PSRF = {psrf:.4f}")
        assert psrf <= 1.2

    def test_run_chain_diagnostics_attached(self):
        chain = ChainConfig(n_iter=200, burn_in=50, seed=4)
        draws = run_chain(
            "gibbs_beta_m", self.data, chain, self.cfg, m1_prior=self.mspec, m2_prior=self.mspec
        )
        assert "psrf_beta" in draws.meta and "ess_beta" in draws.meta
        assert np.isfinite(draws.meta["psrf_beta"][0])
        with pytest.raises(ValueError, match="unknown sampler"):
            run_chain("hamiltonian", self.data, chain, self.cfg)

    def test_store_m_shapes(self):
        chain = ChainConfig(n_iter=60, burn_in=20, seed=4, store_m=True)
        draws = gibbs_beta_m(self.data, self.mspec, self.mspec, chain, self.cfg)
        assert draws.m1.shape == (40, self.data.n)
        assert draws.m2.shape == (40, self.data.n, 1)

    def test_save_draws(self, tmp_path):
        chain = ChainConfig(n_iter=30, burn_in=10, seed=4)
        draws = gibbs_beta_m(self.data, self.mspec, self.mspec, chain, self.cfg)
        csv_path = tmp_path / "draws.csv"
        meta_path = tmp_path / "draws.meta.json"
        draws.save(csv_path, meta_path)
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "beta1"
        assert len(lines) == 1 + draws.n_draws
        import json

        meta = json.loads(meta_path.read_text())
        assert meta["sampler"] == "gibbs_beta_m"


class TestDegenerateNoise:
    """With effectively zero outcome noise the working posterior is pinned at
    the truth; chains started there must stay (the update noise cannot move
    them)."""

    def setup_method(self):
        self.truth = smooth_truth(sigma01_sq=1e-12)
        self.data = simulate(DgpSpec(n=50, seed=1), self.truth)
        self.m0 = self.truth.nuisance_at(self.data.w)
        self.mspec = MaternSpec(alpha=1.0, lengthscale=0.25)
        self.cfg = ModelConfig(sigma01_sq=1e-10)

    def test_beta_m_concentrates(self):
        chain = ChainConfig(
            n_iter=2000,
            burn_in=1000,
            seed=5,
            beta_update="conjugate-flat",
            init="user",
            init_values={"beta": [1.0], "m1": self.m0.m1, "m2": self.m0.m2},
        )
        draws = gibbs_beta_m(self.data, self.mspec, self.mspec, chain, self.cfg)
        assert abs(draws.beta.mean() - 1.0) <= 1e-3

    def test_beta_eta_concentrates(self):
        chain = ChainConfig(
            n_iter=2000,
            burn_in=1000,
            seed=5,
            beta_update="conjugate-flat",
            init="user",
            init_values={"beta": [1.0], "eta": self.truth.eta0_values(self.data.w)},
        )
        draws = gibbs_beta_eta(self.data, self.mspec, chain, self.cfg)
        assert abs(draws.beta.mean() - 1.0) <= 1e-3


class TestParametrizationAgreement:
    def test_samplers_agree_when_m02_pinned_at_zero(self):
        # With m02 identically zero and the m2 component degenerate at that
        # truth, the partialled-out model reduces exactly to the original
        # parametrization, so the two samplers draw from the same posterior.
        truth = TrueFunctions(
            beta0=[1.0],
            m01=make_holder_function(1.0, 1.0, 4, 21),
            m02=(ConstantFunction(0.0),),
            sigma01_sq=1.0,
        )
        data = simulate(DgpSpec(n=300, seed=4), truth)
        cfg = ModelConfig()
        mspec = MaternSpec(alpha=1.0, lengthscale=0.25)
        pinned = MaternSpec(alpha=1.0, lengthscale=0.25, amplitude=1e-12)
        cc_m = ChainConfig(n_iter=4000, burn_in=1500, seed=5, beta_update="conjugate-flat")
        cc_e = ChainConfig(n_iter=4000, burn_in=1500, seed=17, beta_update="conjugate-flat")
        dm = gibbs_beta_m(data, mspec, pinned, cc_m, cfg)
        de = gibbs_beta_eta(data, mspec, cc_e, cfg)

        def mcse(d):
            b = d.beta[:, 0]
            return b.std(ddof=1) / math.sqrt(effective_sample_size(b))

        diff = abs(dm.beta.mean() - de.beta.mean())
        assert diff <= 3.0 * math.hypot(mcse(dm), mcse(de))


class TestDiagnosticsHelpers:
    def test_split_psrf_near_one_for_iid(self):
        rng = np.random.default_rng(0)
        assert split_psrf(rng.normal(size=4000)) == pytest.approx(1.0, abs=0.05)

    def test_ess_iid_close_to_n(self):
        rng = np.random.default_rng(1)
        ess = effective_sample_size(rng.normal(size=4000))
        assert ess >= 2500

    def test_ess_autocorrelated_much_smaller(self):
        rng = np.random.default_rng(2)
        n = 4000
        x = np.empty(n)
        x[0] = 0.0
        for i in range(1, n):
            x[i] = 0.95 * x[i - 1] + rng.normal()
        assert effective_sample_size(x) <= n / 10
