"""Exact posterior PMF, its dynamic-programming oracle, and the summaries."""
import numpy as np
import pytest

from speciesvariety import (
    ExactComputationLimit,
    SampleSummary,
    dp_oracle_pmf,
    exact_pmf,
    hpd_interval,
    ngg,
    pd,
    posterior_mean,
    predictive_weights,
)
from speciesvariety import posterior as posterior_mod


class TestExactPmf:
    def test_m_zero_is_point_mass(self):
        p = exact_pmf(ngg(0.5, 1.0), SampleSummary(3, 2), 0)
        assert p.as_floats().tolist() == [1.0]
        p2 = dp_oracle_pmf(pd(0.5, 1.0), SampleSummary(3, 2), 0)
        assert p2.as_floats().tolist() == [1.0]

    def test_single_step_equals_predictive_weight(self):
        w = predictive_weights(ngg(0.5, 1.0), 1, 1, [1])
        p = exact_pmf(ngg(0.5, 1.0), SampleSummary(1, 1), 1).as_floats()
        assert p[1] == pytest.approx(w.p_new, rel=1e-12)
        assert p[0] == pytest.approx(1.0 - w.p_new, rel=1e-12)
        assert p[1] == pytest.approx(0.7018261, abs=1e-6)
        assert p[0] == pytest.approx(0.2981739, abs=1e-6)

    @pytest.mark.parametrize("params", [ngg(0.25, 0.5), ngg(0.5, 1.0), ngg(0.75, 5.0),
                                        pd(0.5, 1.0), pd(0.3, -0.2)])
    def test_normalization_and_positivity(self, params):
        sample = SampleSummary(6, 4)
        p = exact_pmf(params, sample, 40)
        assert abs(float(p.total_mass()) - 1.0) < 1e-9
        assert all(x > 0 for x in p.probs)

    @pytest.mark.parametrize("params", [ngg(0.5, 2.0), ngg(0.25, 5.0), pd(0.6, 1.5)])
    def test_oracle_equivalence(self, params):
        sample = SampleSummary(5, 3)
        a = exact_pmf(params, sample, 25).as_floats()
        b = dp_oracle_pmf(params, sample, 25).as_floats()
        assert np.max(np.abs(a - b)) < 1e-10

    def test_dp_single_step_is_bernoulli(self):
        params = ngg(0.5, 2.0)
        w = predictive_weights(params, 5, 3, [2, 2, 1])
        p = dp_oracle_pmf(params, SampleSummary(5, 3), 1).as_floats()
        assert p[1] == pytest.approx(w.p_new, rel=1e-10)

    def test_mean_nondecreasing_in_m(self):
        params = ngg(0.5, 1.0)
        sample = SampleSummary(5, 3)
        means = [posterior_mean(exact_pmf(params, sample, m)) for m in (1, 5, 10, 25, 50)]
        assert all(b >= a for a, b in zip(means, means[1:]))

    def test_refuses_large_m(self):
        with pytest.raises(ExactComputationLimit, match="asymptotics"):
            exact_pmf(ngg(0.5, 1.0), SampleSummary(2, 1), 10_001)
        with pytest.raises(ValueError):
            exact_pmf(ngg(0.5, 1.0), SampleSummary(2, 1), -1)

    def test_float_paths_match_arbitrary_precision(self, monkeypatch):
        # m beyond the row cutoff exercises the scaled-float row; pushing the
        # cutoffs up forces the all-MPFR path for comparison
        params = ngg(0.5, 1.0)
        sample = SampleSummary(5, 3)
        fast = exact_pmf(params, sample, 450).as_floats()
        monkeypatch.setattr(posterior_mod, "_MP_ROW_CUTOFF", 10 ** 9)
        slow = exact_pmf(params, sample, 450).as_floats()
        assert np.max(np.abs(fast - slow)) < 1e-11

    def test_integral_sum_path_matches(self, monkeypatch):
        # n + m beyond the sum cutoff exercises the integral representation
        params = ngg(0.5, 1.0)
        sample = SampleSummary(5, 3)
        fast = exact_pmf(params, sample, 700).as_floats()
        monkeypatch.setattr(posterior_mod, "_MP_ROW_CUTOFF", 10 ** 9)
        monkeypatch.setattr(posterior_mod, "_MP_SUM_CUTOFF", 10 ** 9)
        slow = exact_pmf(params, sample, 700).as_floats()
        assert np.max(np.abs(fast - slow)) < 1e-11
        assert abs(sum(fast) - 1.0) < 1e-9

    def test_pd_large_m_float_dp_matches(self, monkeypatch):
        params = pd(0.5, 1.0)
        sample = SampleSummary(5, 3)
        fast = exact_pmf(params, sample, 450).as_floats()
        monkeypatch.setattr(posterior_mod, "_MP_ROW_CUTOFF", 10 ** 9)
        slow = exact_pmf(params, sample, 450).as_floats()
        assert np.max(np.abs(fast - slow)) < 1e-12


class TestPosteriorMean:
    def test_trivial_cases(self):
        p = exact_pmf(ngg(0.5, 1.0), SampleSummary(3, 2), 0)
        assert posterior_mean(p) == 0.0
        p1 = exact_pmf(ngg(0.5, 1.0), SampleSummary(1, 1), 1)
        assert posterior_mean(p1) == pytest.approx(0.7018263188384033, rel=1e-10)


class TestHpdInterval:
    def test_point_mass(self):
        p = exact_pmf(ngg(0.5, 1.0), SampleSummary(3, 2), 0)
        iv = hpd_interval(p, 0.95)
        assert (iv.lo, iv.hi, iv.mass) == (0, 0, 1.0)

    def test_two_point_case(self):
        p = exact_pmf(ngg(0.5, 1.0), SampleSummary(1, 1), 1)
        iv = hpd_interval(p, 0.5)
        assert (iv.lo, iv.hi) == (1, 1)
        assert iv.mass == pytest.approx(0.7018263188384033, rel=1e-10)

    def test_alpha_one_spans_support(self):
        p = exact_pmf(ngg(0.5, 1.0), SampleSummary(4, 2), 12)
        iv = hpd_interval(p, 1.0)
        assert (iv.lo, iv.hi) == (0, 12)

    def test_minimality_by_exhaustive_scan(self):
        p = exact_pmf(pd(0.5, 2.0), SampleSummary(6, 3), 20)
        probs = p.as_floats()
        for alpha in (0.5, 0.8, 0.95):
            iv = hpd_interval(p, alpha)
            assert iv.mass >= alpha
            assert iv.mass <= 1.0 + 1e-12
            best = None
            for lo in range(21):
                for hi in range(lo, 21):
                    if probs[lo:hi + 1].sum() >= alpha:
                        if best is None or (hi - lo) < (best[1] - best[0]):
                            best = (lo, hi)
                        break
            assert (iv.lo, iv.hi) == best

    def test_alpha_domain(self):
        p = exact_pmf(ngg(0.5, 1.0), SampleSummary(3, 2), 5)
        with pytest.raises(ValueError):
            hpd_interval(p, 0.0)
        with pytest.raises(ValueError):
            hpd_interval(p, 1.2)
