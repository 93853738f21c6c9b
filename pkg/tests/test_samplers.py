"""Random variate generators, checked against Laplace-transform identities,
quadrature CDFs, and the exact PMF."""
import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from speciesvariety import (
    LimitLaw,
    RandomState,
    SampleSummary,
    exact_pmf,
    ngg,
    pd,
    sample_exp_tilted_stable,
    sample_limit_ngg,
    sample_limit_pd,
    sample_mittag_leffler,
    sample_positive_stable,
    simulate_additional_sample,
    predictive_weights,
)
from speciesvariety import samplers
from speciesvariety.numerics import stable_cdf, stable_density
from speciesvariety.samplers import (
    _double_rejection_tilted,
    _simulate_ngg_chain,
    _simulate_ngg_tilt_rejection,
    sample_limit_ngg_with_stats,
)


def _cdf_grid_from_density(density, draws, qlo=0.01, qhi=0.99, npts=40):
    grid = np.quantile(draws, np.linspace(qlo, qhi, npts))
    cdf = []
    acc, prev = 0.0, 0.0
    for g in grid:
        acc += integrate.quad(density, prev, g, limit=300)[0]
        prev = g
        cdf.append(acc)
    emp = np.searchsorted(np.sort(draws), grid, side="right") / len(draws)
    return np.max(np.abs(np.array(cdf) - emp))


class TestRandomState:
    def test_reproducible(self):
        a = RandomState(99).generator.random(1000)
        b = RandomState(99).generator.random(1000)
        assert np.array_equal(a, b)

    def test_split_streams_independent_and_deterministic(self):
        s1, s2 = RandomState(99).split(2)
        t1, t2 = RandomState(99).split(2)
        assert np.array_equal(s1.generator.random(100), t1.generator.random(100))
        assert not np.array_equal(s2.generator.random(100), RandomState(99).generator.random(100))

    def test_sampler_streams_bit_identical(self):
        x = sample_positive_stable(0.6, RandomState(7), size=512)
        y = sample_positive_stable(0.6, RandomState(7), size=512)
        assert np.array_equal(x, y)


class TestPositiveStable:
    def test_laplace_transform_monte_carlo(self):
        # E[e^-T] = e^-1 for every stability index
        for sigma, seed in ((0.3, 1), (0.5, 2), (0.8, 3)):
            t = sample_positive_stable(sigma, RandomState(seed), size=100_000)
            assert (t > 0).all()
            val = np.exp(-t).mean()
            se = np.exp(-t).std() / math.sqrt(t.size)
            assert abs(val - math.exp(-1)) < max(3 * se, 0.002)

    def test_half_stable_ks_against_closed_cdf(self):
        t = sample_positive_stable(0.5, RandomState(11), size=100_000)
        ks = stats.kstest(t, lambda x: special.erfc(0.5 / np.sqrt(x)))
        assert ks.statistic < 0.005

    def test_general_sigma_ks_against_quadrature_cdf(self):
        t = sample_positive_stable(0.7, RandomState(12), size=20_000)
        ks = stats.kstest(t, np.vectorize(lambda x: stable_cdf(x, 0.7)))
        assert ks.statistic < 0.012

    def test_domain(self):
        with pytest.raises(ValueError):
            sample_positive_stable(1.0, RandomState(0))


class TestExpTiltedStable:
    def test_plain_rejection_acceptance_rate(self):
        # acceptance of the plain scheme is E[e^-lam T] = e^-beta
        sigma, beta = 0.5, 1.0
        lam = beta ** (1 / sigma)
        gen = RandomState(13).generator
        t = sample_positive_stable(sigma, gen, size=100_000)
        acc = (gen.random(100_000) <= np.exp(-lam * t)).mean()
        se = math.sqrt(math.exp(-beta) * (1 - math.exp(-beta)) / 100_000)
        assert abs(acc - math.exp(-beta)) < 3 * se

    @pytest.mark.parametrize("sigma,beta", [(0.5, 1.0), (0.3, 3.0), (0.5, 8.0), (0.7, 20.0)])
    def test_tilted_laplace_transform(self, sigma, beta):
        # E[e^-T] = exp(beta - (1 + beta^(1/sigma))^sigma)
        rng = RandomState(int(beta * 10 + sigma * 100))
        t = sample_exp_tilted_stable(sigma, beta, rng, size=30_000)
        assert (t > 0).all()
        target = math.exp(beta - (1 + beta ** (1 / sigma)) ** sigma)
        val = np.exp(-t).mean()
        se = np.exp(-t).std() / math.sqrt(t.size)
        assert abs(val - target) < max(4 * se, 5e-4)

    def test_double_rejection_ks_against_quadrature_cdf(self):
        sigma, beta = 0.5, 9.0
        lam = beta ** (1 / sigma)
        gen = RandomState(17).generator
        draws = np.array([_double_rejection_tilted(sigma, lam, gen) for _ in range(20_000)])
        dens = lambda t: math.exp(beta - lam * t) * stable_density(t, sigma)
        assert _cdf_grid_from_density(dens, draws) < 0.015

    def test_matches_plain_rejection_in_distribution(self):
        # both methods target the same law; beta = 4 runs plain, force double
        sigma, beta = 0.6, 4.0
        a = sample_exp_tilted_stable(sigma, beta, RandomState(18), size=15_000)
        gen = RandomState(19).generator
        lam = beta ** (1 / sigma)
        b = np.array([_double_rejection_tilted(sigma, lam, gen) for _ in range(15_000)])
        assert stats.ks_2samp(a, b).statistic < 0.02

    def test_domain(self):
        with pytest.raises(ValueError):
            sample_exp_tilted_stable(0.5, 0.0, RandomState(0))


class TestMittagLeffler:
    def test_positive(self):
        y = sample_mittag_leffler(2.0, 0.5, RandomState(20), size=2000)
        assert (y > 0).all()

    def test_mean_against_quadrature(self):
        from speciesvariety.samplers import mittag_leffler_density

        q, sigma = 2.0, 0.5
        mean_quad, _ = integrate.quad(lambda y: y * mittag_leffler_density(y, q, sigma),
                                      0, np.inf, limit=300)
        y = sample_mittag_leffler(q, sigma, RandomState(21), size=40_000)
        assert abs(y.mean() / mean_quad - 1.0) < 0.01

    @pytest.mark.parametrize("q", [1.0, 2.0])
    def test_ks_against_quadrature_cdf(self, q):
        from speciesvariety.samplers import mittag_leffler_density

        sigma = 0.5
        y = sample_mittag_leffler(q, sigma, RandomState(int(q) + 30), size=30_000)
        dens = lambda t: mittag_leffler_density(t, q, sigma)
        assert _cdf_grid_from_density(dens, y) < 0.012

    def test_inverse_cdf_oracle_agrees(self):
        # slow reference oracle vs the tilting-based sampler
        q, sigma = 2.0, 0.5
        a = sample_mittag_leffler(q, sigma, RandomState(23), size=4000)
        b = samplers._mittag_leffler_inverse_cdf(q, sigma, RandomState(24), size=400)
        assert stats.ks_2samp(a, b).statistic < 0.08

    def test_domain(self):
        with pytest.raises(ValueError):
            sample_mittag_leffler(0.0, 0.5, RandomState(0))


class TestLimitNgg:
    def test_acceptance_rate_matches_normalizer(self):
        # n = j = 1, sigma = 0.5, beta = 1: the normalizer is e^-1
        law = LimitLaw.for_posterior(ngg(0.5, 1.0), SampleSummary(1, 1))
        assert float(law.norm_const) == pytest.approx(math.exp(-1), rel=1e-12)
        _, nprop, nacc = sample_limit_ngg_with_stats(law, RandomState(25), 30_000)
        nc = float(law.norm_const)
        se = math.sqrt(nc * (1 - nc) / nprop)
        assert abs(nacc / nprop - nc) < 3 * se

    def test_beta_zero_accepts_everything(self):
        law = LimitLaw.for_posterior(ngg(0.5, 0.0), SampleSummary(4, 2))
        assert float(law.norm_const) == 1.0
        draws, nprop, nacc = sample_limit_ngg_with_stats(law, RandomState(26), 5000)
        assert nprop == nacc
        assert (draws > 0).all()

    def test_ks_against_closed_form_density(self):
        from speciesvariety.asymptotics import limit_density

        params, sample = ngg(0.5, 1.0), SampleSummary(5, 3)
        law = LimitLaw.for_posterior(params, sample)
        z = sample_limit_ngg(law, RandomState(27), size=30_000)
        dens = lambda t: limit_density(t, params, sample)
        assert _cdf_grid_from_density(dens, z) < 0.012

    def test_norm_const_in_unit_interval(self):
        for beta in (0.5, 1.0, 5.0):
            law = LimitLaw.for_posterior(ngg(0.5, beta), SampleSummary(6, 3))
            assert 0.0 < float(law.norm_const) <= 1.0

    def test_requires_ngg(self):
        law = LimitLaw.for_posterior(pd(0.5, 1.0), SampleSummary(2, 1))
        with pytest.raises(ValueError):
            sample_limit_ngg(law, RandomState(0))


class TestLimitPd:
    def test_draws_positive_and_finite(self):
        z = sample_limit_pd(pd(0.5, 1.0), SampleSummary(5, 3), RandomState(28), size=5000)
        assert (z > 0).all() and np.isfinite(z).all()

    def test_theta_zero_equals_beta_zero(self):
        a = sample_limit_pd(pd(0.5, 0.0), SampleSummary(5, 3), RandomState(29), size=20_000)
        law = LimitLaw.for_posterior(ngg(0.5, 0.0), SampleSummary(5, 3))
        b = sample_limit_ngg(law, RandomState(30), size=20_000)
        assert stats.ks_2samp(a, b).statistic < 0.015

    def test_mean_beta_times_quadrature(self):
        from speciesvariety.samplers import mittag_leffler_density

        theta, sigma = 1.0, 0.5
        n, j = 5, 3
        q = (theta + n) / sigma
        ymean, _ = integrate.quad(lambda y: y * mittag_leffler_density(y, q, sigma),
                                  0, np.inf, limit=300)
        target = (j * sigma + theta) / (n + theta) * ymean
        z = sample_limit_pd(pd(sigma, theta), SampleSummary(n, j), RandomState(31), size=60_000)
        assert abs(z.mean() / target - 1.0) < 0.01


class TestSimulate:
    def test_m_zero(self):
        assert simulate_additional_sample(ngg(0.5, 1.0), SampleSummary(3, 2), 0,
                                          RandomState(32)) == 0
        ks = simulate_additional_sample(pd(0.5, 1.0), SampleSummary(3, 2), 0,
                                        RandomState(33), replications=100)
        assert (ks == 0).all()

    @pytest.mark.parametrize("params", [ngg(0.5, 1.0), pd(0.5, 1.0)])
    def test_single_step_bernoulli(self, params):
        n, j = 4, 2
        w = predictive_weights(params, n, j, [3, 1])
        ks = simulate_additional_sample(params, SampleSummary(n, j), 1,
                                        RandomState(34), replications=40_000)
        phat = ks.mean()
        se = math.sqrt(w.p_new * (1 - w.p_new) / 40_000)
        assert abs(phat - w.p_new) < 4 * se

    def test_chain_total_variation_vs_exact(self):
        params, sample, m = ngg(0.5, 2.0), SampleSummary(5, 3), 30
        ks = simulate_additional_sample(params, sample, m, RandomState(35),
                                        replications=30_000)
        emp = np.bincount(ks, minlength=m + 1)[:m + 1] / ks.size
        exact = exact_pmf(params, sample, m).as_floats()
        assert 0.5 * np.abs(emp - exact).sum() < 0.02

    def test_pd_chain_total_variation_vs_exact(self):
        params, sample, m = pd(0.6, 1.5), SampleSummary(5, 3), 30
        ks = simulate_additional_sample(params, sample, m, RandomState(36),
                                        replications=30_000)
        emp = np.bincount(ks, minlength=m + 1)[:m + 1] / ks.size
        exact = exact_pmf(params, sample, m).as_floats()
        assert 0.5 * np.abs(emp - exact).sum() < 0.02

    def test_tilt_rejection_path_matches_chain_path(self):
        # the large-m change-of-measure path and the per-step chain target
        # the same law
        params, sample, m = ngg(0.5, 2.0), SampleSummary(5, 3), 30
        gen1 = RandomState(37).generator
        gen2 = RandomState(38).generator
        a = _simulate_ngg_chain(params, sample, m, gen1, 30_000)
        b = _simulate_ngg_tilt_rejection(params, sample, m, gen2, 30_000)
        exact = exact_pmf(params, sample, m).as_floats()
        for ks in (a, b):
            emp = np.bincount(ks, minlength=m + 1)[:m + 1] / ks.size
            assert 0.5 * np.abs(emp - exact).sum() < 0.02

    def test_negative_m_rejected(self):
        with pytest.raises(ValueError):
            simulate_additional_sample(ngg(0.5, 1.0), SampleSummary(3, 2), -1, RandomState(0))


class TestTiltingIdentity:
    def test_limit_draw_transform_matches_untilted_rejection(self):
        # Z^(-1/sigma) must match draws of S^(-1/sigma) accepted under the
        # exponential weight: literally the sampler's construction, so this
        # guards refactors.
        params, sample = ngg(0.5, 1.0), SampleSummary(5, 3)
        sigma, beta = params.sigma, 1.0
        law = LimitLaw.for_posterior(params, sample)
        z = sample_limit_ngg(law, RandomState(39), size=20_000)
        lhs = z ** (-1.0 / sigma)

        gen = RandomState(40).generator
        q = sample.n / sigma
        s = samplers._sample_scale_mixture(sample.j, q, sigma, gen, 120_000)
        l = s ** (-1.0 / sigma)
        keep = gen.random(120_000) <= np.exp(-(beta ** (1.0 / sigma)) * l)
        rhs = l[keep]
        assert stats.ks_2samp(lhs, rhs).statistic < 0.015

    def test_laplace_identity_reduced_scale(self):
        # E[e^(-beta^(1/sigma) L)] against the quadrature transform
        from speciesvariety.asymptotics import posterior_stable_laplace

        n, j, sigma, beta = 5, 3, 0.5, 1.0
        gen = RandomState(41).generator
        s = samplers._sample_scale_mixture(j, n / sigma, sigma, gen, 200_000)
        l = s ** (-1.0 / sigma)
        mc = np.exp(-(beta ** (1.0 / sigma)) * l).mean()
        quad = posterior_stable_laplace(SampleSummary(n, j), sigma, beta ** (1.0 / sigma))
        assert abs(mc / quad - 1.0) < 0.01


class TestBackendEquivalence:
    def test_pure_python_kernels_match(self):
        from speciesvariety import _backend, _kernels_py

        rowc = _backend.gfc_row_log(60, 0.5, 7.5)
        rowp = _kernels_py.gfc_row_log(60, 0.5, 7.5)
        assert np.allclose(rowc, rowp, atol=1e-12, rtol=0)

        g1 = RandomState(42).generator
        g2 = RandomState(42).generator
        k1 = _backend.chain_counts_linear(g1, 5, 3, 200, 0.5, 1.0, 500)
        k2 = _kernels_py.chain_counts_linear(g2, 5, 3, 200, 0.5, 1.0, 500)
        assert np.array_equal(np.asarray(k1), np.asarray(k2))

        table = np.full((50, 51), 0.3)
        g3 = RandomState(43).generator
        g4 = RandomState(43).generator
        k3 = _backend.chain_counts_table(g3, table, 3, 400)
        k4 = _kernels_py.chain_counts_table(g4, table, 3, 400)
        assert np.array_equal(np.asarray(k3), np.asarray(k4))
