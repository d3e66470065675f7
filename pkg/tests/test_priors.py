"""Jointly sparse source law: sampling, mixture decomposition, marginals."""

import math

import numpy as np
import pytest

from dsn.priors import (
    PriorParams,
    marginal_nonzero_rate,
    mixture_components,
    sample_sources,
)


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


class TestPriorParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            PriorParams(common_var=-0.1, private_vars=(0.5, 0.5), common_rate=0.3, private_rates=(0.1, 0.1))
        with pytest.raises(ValueError):
            PriorParams(common_var=0.5, private_vars=(0.5, 0.5), common_rate=1.2, private_rates=(0.1, 0.1))
        with pytest.raises(ValueError):
            PriorParams(common_var=0.5, private_vars=(0.5, -0.5), common_rate=0.3, private_rates=(0.1, 0.1))
        with pytest.raises(ValueError):
            PriorParams(common_var=0.5, private_vars=(0.5, 0.5), common_rate=0.3, private_rates=(0.1, -0.1))

    def test_second_moment(self, reference_prior):
        assert math.isclose(reference_prior.second_moment(1), 0.2, abs_tol=1e-15)
        assert math.isclose(reference_prior.second_moment(2), 0.2, abs_tol=1e-15)


class TestSampleSources:
    def test_all_rates_zero_gives_zeros(self):
        prior = PriorParams(common_var=0.5, private_vars=(0.5, 0.5), common_rate=0.0, private_rates=(0.0, 0.0))
        x = sample_sources(prior, 500, rng_for(0))
        assert x.shape == (500, 2)
        assert np.all(x == 0.0)

    def test_pure_common_part_makes_sources_equal(self):
        prior = PriorParams(common_var=0.5, private_vars=(0.5, 0.5), common_rate=1.0, private_rates=(0.0, 0.0))
        x = sample_sources(prior, 500, rng_for(1))
        assert np.all(x[:, 0] == x[:, 1])
        assert np.any(x[:, 0] != 0.0)

    def test_second_moment_against_analytic(self, reference_prior):
        x = sample_sources(reference_prior, 1_000_000, rng_for(2))
        m = float(np.mean(x[:, 0] ** 2))
        assert 0.2 * 0.99 <= m <= 0.2 * 1.01

    def test_reproducible(self, reference_prior):
        a = sample_sources(reference_prior, 1000, rng_for(7))
        b = sample_sources(reference_prior, 1000, rng_for(7))
        assert np.array_equal(a, b)

    def test_covariance_matches_mixture(self, reference_prior):
        n = 1_000_000
        x = sample_sources(reference_prior, n, rng_for(3))
        analytic = sum(c.weight * np.asarray(c.covariance) for c in mixture_components(reference_prior))
        empirical = (x.T @ x) / n
        # three standard errors of each sample second moment
        for i in (0, 1):
            for j in (0, 1):
                se = float(np.std(x[:, i] * x[:, j], ddof=1)) / math.sqrt(n)
                assert abs(empirical[i, j] - analytic[i, j]) <= 3 * se

    def test_joint_activity_at_least_common_rate(self, reference_prior):
        n = 200_000
        x = sample_sources(reference_prior, n, rng_for(4))
        joint = float(np.mean((x[:, 0] != 0) & (x[:, 1] != 0)))
        se = math.sqrt(0.3 * 0.7 / n)
        assert joint >= 0.3 - 3 * se


class TestMixtureComponents:
    def test_exhaustive_and_normalized(self, reference_prior):
        comps = mixture_components(reference_prior)
        assert len(comps) == 8
        assert math.isclose(sum(c.weight for c in comps), 1.0, abs_tol=1e-12)
        assert len({c.support for c in comps}) == 8

    def test_all_off_weight(self, reference_prior):
        comps = {c.support: c for c in mixture_components(reference_prior)}
        assert math.isclose(comps[(0, 0, 0)].weight, 0.7 * 0.9 * 0.9, abs_tol=1e-15)

    def test_common_only_covariance(self, reference_prior):
        comps = {c.support: c for c in mixture_components(reference_prior)}
        np.testing.assert_allclose(comps[(1, 0, 0)].covariance, 0.5 * np.ones((2, 2)), atol=1e-15)

    def test_covariance_construction_rule(self):
        prior = PriorParams(common_var=0.4, private_vars=(0.2, 0.7), common_rate=0.5, private_rates=(0.3, 0.6))
        for c in mixture_components(prior):
            s_c, s_1, s_2 = c.support
            expected = s_c * 0.4 * np.ones((2, 2)) + np.diag([s_1 * 0.2, s_2 * 0.7])
            np.testing.assert_allclose(c.covariance, expected, atol=1e-15)
        assert math.isclose(sum(c.weight for c in mixture_components(prior)), 1.0, abs_tol=1e-12)


class TestMarginalRate:
    def test_reference_value(self, reference_prior):
        assert math.isclose(marginal_nonzero_rate(reference_prior, 1), 0.37, abs_tol=1e-15)

    def test_zero_common(self):
        prior = PriorParams(common_var=0.5, private_vars=(0.5, 0.5), common_rate=0.0, private_rates=(0.1, 0.2))
        assert math.isclose(marginal_nonzero_rate(prior, 1), 0.1, abs_tol=1e-15)
        assert math.isclose(marginal_nonzero_rate(prior, 2), 0.2, abs_tol=1e-15)

    def test_full_common(self):
        prior = PriorParams(common_var=0.5, private_vars=(0.5, 0.5), common_rate=1.0, private_rates=(0.1, 0.2))
        assert marginal_nonzero_rate(prior, 1) == 1.0
