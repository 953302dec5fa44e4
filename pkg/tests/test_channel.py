import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnacoverage.channel import (PRESETS, ChannelDistribution, LogNormalParams, PcrModel,
                                 channel_from_pcr, expected_copy_number, expected_proportions,
                                 lognormal_from_moments, lognormal_moments, mean_inv_p, mean_p,
                                 mle_fit, proportion_moments, sample_copy_numbers, sample_pcr_model)
from dnacoverage.errors import DomainError, InsufficientDataError


def recurrence(c, r, t):
    v = c
    for _ in range(t):
        v = v * (1 + r)
    return v


class TestCopyNumber:
    def test_doubling(self):
        assert expected_copy_number(100, 1.0, 3) == 800

    def test_zero_cycles(self):
        assert expected_copy_number(42.5, 0.9, 0) == 42.5

    def test_matches_recurrence(self):
        assert expected_copy_number(1000, 0.9, 2) == pytest.approx(3610, rel=1e-14)
        for t in (1, 5, 17, 60):
            assert expected_copy_number(3.7, 0.85, t) == pytest.approx(recurrence(3.7, 0.85, t), rel=1e-12)

    def test_overflow(self):
        with pytest.raises(OverflowError):
            expected_copy_number(1.0, 1.0, 5000)

    @pytest.mark.parametrize("c,r,t", [(0, 1, 1), (1, -1, 1), (1, 0.5, -1)])
    def test_domain(self, c, r, t):
        with pytest.raises(DomainError):
            expected_copy_number(c, r, t)


class TestProportions:
    def test_symmetric(self):
        np.testing.assert_allclose(expected_proportions(PcrModel([1, 1], [1.0, 1.0], 5)), [0.5, 0.5])

    def test_zero_efficiency_keeps_ratio(self):
        np.testing.assert_allclose(expected_proportions(PcrModel([1, 3], [0, 0], 100)), [0.25, 0.75])

    def test_two_strand_ratio(self):
        rho = (2 / 1.8) ** 10
        p = expected_proportions(PcrModel([1, 1], [1.0, 0.8], 10))
        assert p[0] / p[1] == pytest.approx(rho, rel=1e-12)
        np.testing.assert_allclose(p, [rho / (1 + rho), 1 / (1 + rho)], rtol=1e-12)
        assert p[0] == pytest.approx(0.74147, abs=1e-5)

    def test_large_t_stable(self):
        rng = np.random.default_rng(3)
        model = PcrModel(rng.uniform(1, 10, 50), rng.uniform(0.8, 1.1, 50), 2000)
        p = expected_proportions(model)
        assert np.all(np.isfinite(p))
        assert abs(p.sum() - 1) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 40), st.integers(0, 200), st.integers(0, 2**32 - 1))
    def test_sums_to_one(self, n, t, seed):
        rng = np.random.default_rng(seed)
        model = PcrModel(rng.uniform(0.1, 1e4, n), rng.uniform(-0.5, 1.5, n), t)
        p = expected_proportions(model)
        assert abs(math.fsum(p) - 1) < 1e-12
        assert np.all(p >= 0)

    def test_model_validation(self):
        with pytest.raises(DomainError):
            PcrModel([1, 2], [1.0], 3)
        with pytest.raises(DomainError):
            PcrModel([1, -2], [1.0, 1.0], 3)
        with pytest.raises(DomainError):
            PcrModel([1, 2], [1.0, -1.0], 3)
        with pytest.raises(DomainError):
            PcrModel([1, 2], [1.0, 1.0], -1)


class TestMoments:
    def test_standard_lognormal(self):
        par = lognormal_from_moments(math.exp(0.5), (math.e - 1) * math.e)
        assert par.mu == pytest.approx(0, abs=1e-14)
        assert par.sigma == pytest.approx(1, rel=1e-14)

    def test_point_mass(self):
        par = lognormal_from_moments(5, 0)
        assert par.mu == pytest.approx(math.log(5))
        assert par.sigma == 0

    def test_from_pcr_proportions(self):
        n = 200
        r = np.where(np.arange(n) < n // 2, 0.8, 1.1)
        p = expected_proportions(PcrModel(np.ones(n), r, 10))
        mean, var = proportion_moments(p)
        par = lognormal_from_moments(mean, var)
        m2, v2 = lognormal_moments(par)
        assert m2 == pytest.approx(p.mean(), rel=1e-10)
        assert v2 == pytest.approx(p.var(), rel=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            lognormal_from_moments(0, 1)
        with pytest.raises(DomainError):
            lognormal_from_moments(1, -1)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-15, 5), st.floats(0, 3))
    def test_round_trip(self, mu, sigma):
        par = lognormal_from_moments(*lognormal_moments(LogNormalParams(mu, sigma)))
        assert par.mu == pytest.approx(mu, abs=1e-10)
        assert par.sigma == pytest.approx(sigma, abs=1e-7 if sigma < 1e-3 else 1e-10)


class TestChannelFromPcr:
    def test_identical_strands_degenerate(self):
        ch = channel_from_pcr(PcrModel(np.ones(20), np.ones(20), 30))
        assert ch.params.sigma == pytest.approx(0, abs=1e-7)
        assert ch.n == 20

    def test_single_strand(self):
        ch = channel_from_pcr(PcrModel([5.0], [0.9], 10))
        assert ch.params.sigma == 0
        assert ch.params.mu == pytest.approx(0, abs=1e-15)

    def test_two_strand_hand_moments(self):
        rho = (2 / 1.8) ** 10
        p1, p2 = rho / (1 + rho), 1 / (1 + rho)
        mean = (p1 + p2) / 2
        var = ((p1 - mean) ** 2 + (p2 - mean) ** 2) / 2
        s2 = math.log(1 + var / mean**2)
        ch = channel_from_pcr(PcrModel([1, 1], [1.0, 0.8], 10))
        assert ch.params.mu == pytest.approx(math.log(mean) - s2 / 2, rel=1e-12)
        assert ch.params.sigma == pytest.approx(math.sqrt(s2), rel=1e-12)

    def test_spread_grows_with_cycles(self):
        rng = np.random.default_rng(11)
        model = sample_pcr_model(11520, 10, rng)
        s10 = channel_from_pcr(model).params.sigma
        s60 = channel_from_pcr(PcrModel(model.c, model.r, 60)).params.sigma
        assert s10 < s60

    @pytest.mark.parametrize("k", [1e-3, 7.0, 1e6])
    def test_scale_invariant(self, k):
        rng = np.random.default_rng(5)
        model = sample_pcr_model(300, 30, rng)
        a = channel_from_pcr(model).params
        b = channel_from_pcr(PcrModel(model.c * k, model.r, model.t)).params
        assert abs(a.mu - b.mu) < 1e-10
        assert abs(a.sigma - b.sigma) < 1e-10


class TestMeans:
    def test_unit(self):
        par = LogNormalParams(0, 0)
        assert mean_p(par) == 1
        assert mean_inv_p(par) == 1

    def test_pcr10_population(self):
        assert mean_inv_p(LogNormalParams(-9.72, 0.74)) == pytest.approx(math.exp(9.72 + 0.2738), rel=1e-12)
        assert mean_inv_p(LogNormalParams(-9.72, 0.74)) == pytest.approx(2.189e4, rel=1e-3)

    @given(st.floats(-20, 20), st.floats(0, 3))
    def test_jensen(self, mu, sigma):
        par = LogNormalParams(mu, sigma)
        if sigma == 0:
            assert mean_inv_p(par) == pytest.approx(1 / mean_p(par), rel=1e-12)
        elif sigma > 1e-6:
            assert mean_inv_p(par) > 1 / mean_p(par)


class TestMleFit:
    def test_exact_logs(self):
        rep = mle_fit([math.e, math.e**2, math.e**3])
        assert rep.params.mu == pytest.approx(2)
        assert rep.params.sigma**2 == pytest.approx(2 / 3)
        assert rep.log_domain_var == pytest.approx(2 / 3)
        assert 0 <= rep.ks_statistic <= 1

    def test_constant(self):
        rep = mle_fit([0.3] * 7)
        assert rep.params.sigma == 0
        assert rep.params.mu == pytest.approx(math.log(0.3))

    def test_recovers_table_row(self):
        rng = np.random.default_rng(20240601)
        rep = mle_fit(rng.lognormal(-9.71, 0.86, 10**5))
        assert abs(rep.params.mu + 9.71) < 0.01
        assert abs(rep.params.sigma - 0.86) < 0.01
        assert rep.ks_statistic < 0.01

    def test_error_shrinks_with_n(self):
        errs = []
        for k, N in enumerate((10**3, 10**4, 10**5)):
            rng = np.random.default_rng(1000 + k)
            rep = mle_fit(rng.lognormal(-9.71, 0.86, N))
            errs.append(abs(rep.params.mu + 9.71) + abs(rep.params.sigma - 0.86))
        assert errs[0] > errs[1] > errs[2]

    def test_errors(self):
        with pytest.raises(DomainError):
            mle_fit([1.0, 0.0, 2.0])
        with pytest.raises(InsufficientDataError):
            mle_fit([1.0])


class TestChannelDistribution:
    def test_empirical_validation(self):
        with pytest.raises(DomainError):
            ChannelDistribution.empirical([0.5, 0.6])
        with pytest.raises(DomainError):
            ChannelDistribution.empirical([1.5, -0.5])
        ChannelDistribution.empirical([0.5, 0.5 + 1e-12])

    def test_uniform_rates(self):
        np.testing.assert_allclose(ChannelDistribution.uniform(4).rates(), 0.25)

    def test_lognormal_realize(self):
        ch = ChannelDistribution.lognormal(PRESETS["pcr10-pop"], 1000)
        with pytest.raises(DomainError):
            ch.probabilities()
        real = ch.realize(np.random.default_rng(0))
        assert real.kind == "empirical"
        assert abs(real.p.sum() - 1) < 1e-12
        assert mle_fit(real.p).params.sigma == pytest.approx(0.74, abs=0.05)

    def test_negative_sigma(self):
        with pytest.raises(DomainError):
            LogNormalParams(0, -0.1)

    def test_copy_samplers(self):
        rng = np.random.default_rng(1)
        for dist in ("constant", "lognormal", "negbin"):
            c = sample_copy_numbers(5000, rng, dist, mean=100, spread=0.5)
            assert np.all(c > 0)
            assert c.mean() == pytest.approx(100, rel=0.05)
        with pytest.raises(DomainError):
            sample_copy_numbers(3, rng, "gamma")
