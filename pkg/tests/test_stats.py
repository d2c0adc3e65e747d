import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from twinbeam.channel import LossChannel, apply_loss_pmf
from twinbeam.counts import CountHistogram
from twinbeam.errors import DomainError
from twinbeam.montecarlo import draw_pair_count, rng_stream
from twinbeam.stats import (
    PairSource,
    distribution_distance,
    fold_to_cap,
    g2_from_pmf,
    negative_binomial_pmf,
    pmf_moments,
    poisson_pmf,
    thermal_pmf,
    tmsv_joint_pmf,
)

means = st.floats(min_value=0.0, max_value=0.5)


class TestThermal:
    def test_vacuum(self):
        p = thermal_pmf(0.0)
        assert p[0] == 1.0 and p.probs[1:].sum() == 0.0 and p.remainder == 0.0

    @pytest.mark.parametrize(
        "mean, n, expected",
        [(0.0137, 1, 1.3332e-2), (0.0137, 2, 1.8018e-4), (0.0028, 1, 2.784e-3)],
    )
    def test_closed_form_values(self, mean, n, expected):
        assert thermal_pmf(mean)[n] == pytest.approx(expected, rel=2e-4)

    def test_negative_mean_rejected(self):
        with pytest.raises(DomainError):
            thermal_pmf(-0.1)

    @given(means)
    def test_normalization_deficit_is_tail(self, mu):
        p = thermal_pmf(mu, n_max=12)
        assert 1.0 - math.fsum(p.probs) == pytest.approx(p.remainder, abs=1e-12)


class TestPoisson:
    def test_vacuum(self):
        assert poisson_pmf(0.0)[0] == 1.0

    def test_value_matches_scipy(self):
        # closed-form value 9.2568e-5 at mean 0.0137
        assert poisson_pmf(0.0137)[2] == pytest.approx(sps.poisson.pmf(2, 0.0137), rel=1e-12)
        assert poisson_pmf(0.0137)[2] == pytest.approx(9.2568e-5, rel=1e-4)

    def test_equal_first_terms_at_mean_one(self):
        p = poisson_pmf(1.0)
        assert p[0] == pytest.approx(math.exp(-1)) and p[1] == pytest.approx(math.exp(-1))

    def test_negative_mean_rejected(self):
        with pytest.raises(DomainError):
            poisson_pmf(-1e-9)

    @given(means)
    def test_normalization_deficit_is_tail(self, mu):
        p = poisson_pmf(mu, n_max=8)
        assert 1.0 - math.fsum(p.probs) == pytest.approx(p.remainder, abs=1e-12)


class TestNegativeBinomial:
    @given(means)
    def test_single_mode_is_thermal(self, mu):
        np.testing.assert_array_equal(negative_binomial_pmf(mu, 1).probs, thermal_pmf(mu).probs)

    def test_many_modes_is_poisson(self):
        np.testing.assert_allclose(negative_binomial_pmf(0.5, 1e6).probs, poisson_pmf(0.5).probs, atol=1e-5)

    def test_two_modes_g2(self):
        assert g2_from_pmf(negative_binomial_pmf(0.2, 2)) == pytest.approx(1.5, abs=1e-9)

    def test_modes_below_one_rejected(self):
        with pytest.raises(DomainError):
            negative_binomial_pmf(0.1, 0.5)

    @given(means.filter(lambda m: m > 0), st.floats(min_value=1.0, max_value=20.0))
    def test_normalization_deficit_is_tail(self, mu, k):
        p = negative_binomial_pmf(mu, k, n_max=15)
        assert 1.0 - math.fsum(p.probs) == pytest.approx(p.remainder, abs=1e-12)


class TestTmsv:
    def test_single_mode_is_diagonal(self):
        j = tmsv_joint_pmf(PairSource(0.1))
        assert j.probs[1, 1] == pytest.approx(0.1 / 1.1**2, rel=1e-12)
        off = j.probs - np.diag(np.diag(j.probs))
        assert not off.any()

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_vacuum(self, k):
        assert tmsv_joint_pmf(PairSource(0.0, k)).probs[0, 0] == 1.0

    def test_two_modes_against_enumeration(self):
        per_mode = thermal_pmf(0.1, 40).probs
        brute = np.zeros(31)
        for a, b in itertools.product(range(31), repeat=2):
            if a + b <= 30:
                brute[a + b] += per_mode[a] * per_mode[b]
        np.testing.assert_allclose(np.diag(tmsv_joint_pmf(PairSource(0.2, 2)).probs), brute, rtol=1e-12, atol=1e-300)

    @pytest.mark.parametrize("mu, k", [(0.05, 1), (0.2, 2), (0.4, 3)])
    def test_marginals_are_negative_binomial(self, mu, k):
        j = tmsv_joint_pmf(PairSource(mu, k))
        expected = negative_binomial_pmf(mu, k).probs
        np.testing.assert_allclose(j.marginal("signal").probs, expected, atol=1e-12)
        np.testing.assert_allclose(j.marginal("idler").probs, expected, atol=1e-12)

    def test_fractional_modes_rejected(self):
        with pytest.raises(DomainError):
            tmsv_joint_pmf(PairSource(0.1, 1.5))


class TestMoments:
    def test_vacuum(self):
        assert pmf_moments(thermal_pmf(0.0)) == (0.0, 0.0)

    def test_truncated_thermal_mean(self):
        mean, _ = pmf_moments(thermal_pmf(0.0137, n_max=10))
        assert mean == pytest.approx(0.0137, abs=1e-10)

    def test_poisson_factorial_moment(self):
        assert pmf_moments(poisson_pmf(2.0, n_max=60))[1] == pytest.approx(4.0, rel=1e-12)

    @given(means.filter(lambda m: m > 1e-6))
    def test_g2_identities(self, mu):
        assert g2_from_pmf(thermal_pmf(mu)) == pytest.approx(2.0, abs=1e-6)
        assert g2_from_pmf(poisson_pmf(mu)) == pytest.approx(1.0, abs=1e-6)
        assert g2_from_pmf(negative_binomial_pmf(mu, 4)) == pytest.approx(1.25, abs=1e-6)


@given(means, st.floats(min_value=0.01, max_value=1.0))
def test_thinning_closure(mu, eta):
    thinned = apply_loss_pmf(thermal_pmf(mu), LossChannel(eta))
    np.testing.assert_allclose(thinned.probs, thermal_pmf(eta * mu).probs, atol=1e-12)


class TestDistance:
    def test_exact_histogram_has_zero_distance(self):
        model = thermal_pmf(0.0137)
        hist = CountHistogram.from_probabilities(fold_to_cap(model.probs, 3), 10**12)
        d = distribution_distance(hist, model)
        assert d.total_variation == pytest.approx(0.0, abs=1e-12)

    def test_empty_histogram_rejected(self):
        with pytest.raises(DomainError):
            distribution_distance(CountHistogram(np.zeros(4), 0), thermal_pmf(0.1))

    def test_thermal_data_rejects_poisson(self):
        # expected counts at 1e9 slots; sampling noise is far below the model gap
        n = 10**9
        hist = CountHistogram.from_probabilities(fold_to_cap(thermal_pmf(0.0137).probs, 3), n)
        assert distribution_distance(hist, poisson_pmf(0.0137)).p_value < 1e-6

    def test_p_values_uniform_over_seeds(self):
        model = thermal_pmf(0.0137)
        pvals = []
        for seed in range(100):
            draws = draw_pair_count(rng_stream(seed, 0), PairSource(0.0137), 10**7)
            counts = np.bincount(np.minimum(draws, 3), minlength=4)
            pvals.append(distribution_distance(CountHistogram(counts, 10**7), model).p_value)
        assert sps.kstest(pvals, "uniform").pvalue > 0.01
