import itertools
import math

import numpy as np
import pytest

from twinbeam.channel import DetectorModel, LossChannel, SlotTiming, forward_model
from twinbeam.counts import CountHistogram, JointCountMatrix
from twinbeam.errors import DomainError
from twinbeam.estimators import (
    G2Estimate,
    RateSet,
    bootstrap_error,
    car_table,
    conditional_pmf,
    g2_zero,
    heralded_g2,
    klyshko_pair_rate,
    mode_number_and_purity,
    mutual_correlation,
    nonclassicality_gamma,
    reference_fits,
    shot_noise_error,
    two_pair_rate,
)
from twinbeam.montecarlo import Arm, SimConfig, simulate_counts
from twinbeam.stats import JointPmf, PairSource, negative_binomial_pmf, poisson_pmf, thermal_pmf, tmsv_joint_pmf
from twinbeam.tagstream import SlotBatch, count_slots

SHARP = SlotTiming(10e6, 0.0, 400e-12, 100e-9, 1.0)
IDEAL = DetectorModel(max_resolvable_clicks=30)
LAB_S, LAB_I = LossChannel.from_db(7.55), LossChannel.from_db(6.76)


def _rates_from_law(p, duration=1.0):
    rs, ri = p.sum(axis=1), p.sum(axis=0)
    return RateSet(rs[1], ri[1], rs[2], ri[2], p[1, 1], p[2, 2], duration)


def _sampled(probs, n, seed=0):
    rng = np.random.default_rng(seed)
    p = np.asarray(probs, float)
    return rng.multinomial(n, np.ravel(p) / p.sum()).reshape(p.shape)


class TestG2:
    @pytest.mark.parametrize("pmf, expected", [(thermal_pmf(0.1), 2.0), (poisson_pmf(0.1), 1.0),
                                               (negative_binomial_pmf(0.1, 4), 1.25)])
    def test_exact_laws(self, pmf, expected):
        g = g2_zero(pmf)
        assert g.value == pytest.approx(expected, abs=1e-9) and g.std_error == 0.0

    def test_no_clicks(self):
        with pytest.raises(DomainError):
            g2_zero(CountHistogram(np.array([10, 0, 0, 0]), 10))

    @pytest.mark.parametrize("law, expected", [(thermal_pmf(0.2, 12), 2.0), (poisson_pmf(0.2, 12), 1.0),
                                               (negative_binomial_pmf(0.2, 2, 12), 1.5)])
    def test_convergence(self, law, expected):
        probs = np.append(law.probs, law.remainder)
        errors = []
        for n, seed in ((10**4, 1), (10**5, 2), (10**6, 3)):
            g = g2_zero(CountHistogram(_sampled(probs, n, seed), n))
            assert abs(g.value - expected) < 4 * g.std_error
            errors.append(g.std_error)
        assert errors[0] / errors[2] == pytest.approx(10.0, rel=0.2)

    def test_delta_method_matches_bootstrap(self):
        probs = forward_model(PairSource(0.08), LAB_S, LAB_I, IDEAL, IDEAL, SHARP).probs[:4, :4]
        joint = JointCountMatrix(_sampled(probs, 10**6), 10**6)

        def stat(j):
            return g2_zero(j.marginal("signal")).value

        delta = g2_zero(joint.marginal("signal")).std_error
        assert bootstrap_error(stat, joint, 300, seed=1) == pytest.approx(delta, rel=0.2)


class TestHeralding:
    def test_diagonal_herald(self):
        p = np.diag([0.9, 0.08, 0.02])
        assert conditional_pmf(p, 1, "idler").probs.tolist() == [0.0, 1.0, 0.0]

    def test_product_law(self):
        a, b = thermal_pmf(0.1, 5).probs, poisson_pmf(0.3, 5).probs
        np.testing.assert_allclose(conditional_pmf(np.outer(a, b), 1, "signal").probs, b / b.sum())

    def test_empty_herald(self):
        with pytest.raises(DomainError):
            conditional_pmf(np.diag([1.0, 0.0]), 1, "signal")

    def test_perfect_single_photon(self):
        counts = JointCountMatrix(np.array([[90, 0], [0, 10]]), 100)
        assert heralded_g2(counts, "idler").value == 0.0

    def test_unknown_axis(self):
        with pytest.raises(DomainError):
            heralded_g2(np.eye(2), "pump")

    def test_vacuum_given_herald_matches_law(self, device_config):
        c = device_config
        law = forward_model(c.source(c.mean_pairs_per_pulse), c.channel("signal"), c.channel("idler"),
                            c.detector("signal"), c.detector("idler"), c.timing())
        cond = conditional_pmf(law, 1, "idler").probs
        assert cond[0] == pytest.approx(1 - np.arange(cond.size) @ cond, abs=2 * cond[2:].sum() + 1e-12)

    def test_heralded_trend_at_on_chip_means(self, device_config):
        # read as mean pairs per pulse on chip, 0.003 and 0.014 give g2_H near 0.01 and 0.05
        c = device_config
        values = []
        for mu in (0.003, 0.014):
            law = forward_model(PairSource(mu), c.channel("signal"), c.channel("idler"), c.detector("signal"),
                                c.detector("idler"), c.timing())
            values.append(heralded_g2(law, "idler").value)
        assert 0.005 <= values[0] < values[1] <= 0.08

    @pytest.mark.parametrize("mu, k", [(0.02, 1), (0.08, 1), (0.3, 1), (0.1, 3)])
    @pytest.mark.parametrize("herald", ["signal", "idler"])
    def test_heralding_purifies(self, mu, k, herald):
        det = DetectorModel(0.7, 4, 3, 1e3, 20e-12)
        law = forward_model(PairSource(mu, k), LAB_S, LAB_I, det, det, SlotTiming(10e6, 300e-12, 400e-12, 100e-9, 1.0))
        other = "idler" if herald == "signal" else "signal"
        assert heralded_g2(law, herald).value < g2_zero(law.marginal(other)).value


class TestRates:
    def test_klyshko_arithmetic(self):
        assert klyshko_pair_rate(RateSet.from_rates(N_S=100, N_I=80, N_SS=0, N_II=0, N_SI=40, N_SSII=0)) == 200

    def test_klyshko_lossless(self):
        assert klyshko_pair_rate(RateSet(5e4, 5e4, 0, 0, 5e4, 0, 2.0)) == 2.5e4

    def test_two_pair_arithmetic(self):
        assert two_pair_rate(RateSet.from_rates(N_S=9, N_I=9, N_SS=4, N_II=4, N_SI=9, N_SSII=4)) == 4

    def test_zero_coincidences(self):
        r = RateSet(10, 10, 1, 1, 0, 0)
        with pytest.raises(DomainError):
            klyshko_pair_rate(r)
        with pytest.raises(DomainError):
            two_pair_rate(r)

    def test_inconsistent_rates_warn(self):
        with pytest.warns(RuntimeWarning):
            RateSet(10, 10, 0, 0, 20, 0)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            RateSet(-1, 0, 0, 0, 0, 0)

    @pytest.mark.parametrize("mu", [0.001, 0.005, 0.01])
    def test_klyshko_symmetric_loss_invariance(self, mu):
        base = klyshko_pair_rate(_rates_from_law(
            forward_model(PairSource(mu), LAB_S, LAB_I, IDEAL, IDEAL, SHARP).probs))
        x = LossChannel(0.5)
        scaled = klyshko_pair_rate(_rates_from_law(
            forward_model(PairSource(mu), LAB_S * x, LAB_I * x, IDEAL, IDEAL, SHARP).probs))
        assert scaled == pytest.approx(base, rel=0.01)


class TestCar:
    def test_identical(self):
        m = JointCountMatrix(np.array([[50, 3], [4, 0]]), 57)
        t = car_table(m, m)
        assert t.ratio[0, 0] == t.ratio[0, 1] == t.ratio[1, 0] == 1.0 and math.isnan(t.ratio[1, 1])

    def test_mismatched_basis(self):
        with pytest.raises(DomainError):
            car_table(JointCountMatrix(np.eye(2, dtype=int), 2), JointCountMatrix(np.eye(2, dtype=int), 3))

    def test_reference_cells(self):
        assert 1.84e6 / 2.10e5 == pytest.approx(8.8, abs=0.05)
        assert 3.52e3 / 35 == pytest.approx(100, rel=0.01)

    def test_shuffled_slots_are_uncorrelated(self):
        law = forward_model(PairSource(0.2), LossChannel(0.3), LossChannel(0.3), IDEAL, IDEAL, SHARP).probs
        law = law[:4, :4] / law[:4, :4].sum()
        n = 10**6
        rng = np.random.default_rng(5)
        cells = rng.choice(16, n, p=law.ravel())
        s, i = cells // 4, cells % 4
        i = rng.permutation(i)
        idx = np.flatnonzero(s + i)
        c = count_slots([SlotBatch(0, n, idx, s[idx], i[idx])], offset=1)
        t = car_table(c.joint, c.accidental)
        for a, b in itertools.product(range(3), repeat=2):
            co, ac = c.joint.counts[a, b], c.accidental.counts[a, b]
            if ac > 20:
                assert abs(t.ratio[a, b] - 1) < 4 * math.sqrt(1 / co + 1 / ac)


class TestMutualCorrelation:
    def test_independent_poisson(self):
        p = np.outer(poisson_pmf(0.3, 30).probs, poisson_pmf(0.7, 30).probs)
        assert mutual_correlation(p, 1, 1) == pytest.approx(1.0, rel=1e-9)

    def test_reduces_to_g2(self):
        law = forward_model(PairSource(0.1, 2), LAB_S, LAB_I, IDEAL, IDEAL, SHARP)
        assert mutual_correlation(law, 0, 2) == pytest.approx(g2_zero(law.marginal("idler")).value, rel=1e-12)
        assert mutual_correlation(law, 0, 2, "idler") == pytest.approx(g2_zero(law.marginal("signal")).value, rel=1e-12)

    def test_tmsv_cross_correlation(self):
        assert mutual_correlation(tmsv_joint_pmf(PairSource(0.1), 200), 1, 1) == pytest.approx(12.0, rel=1e-10)

    def test_brute_force_cross_moment(self):
        p = np.random.default_rng(0).random((4, 5))
        p /= p.sum()
        ma = sum(a * p[a, b] for a in range(4) for b in range(5))
        mb = sum(b * p[a, b] for a in range(4) for b in range(5))
        cross = sum(a * b * p[a, b] for a in range(4) for b in range(5))
        assert mutual_correlation(p, 1, 1) * ma * mb == pytest.approx(cross, rel=1e-14)

    def test_zero_mean(self):
        with pytest.raises(DomainError):
            mutual_correlation(np.array([[1.0, 0.0], [0.0, 0.0]]), 1, 1)


class TestGamma:
    def test_independent_thermal(self):
        p = JointPmf(np.outer(thermal_pmf(0.2, 80).probs, thermal_pmf(0.3, 80).probs))
        assert nonclassicality_gamma(p).value == pytest.approx(2 / math.sqrt(8), rel=1e-6)

    def test_tmsv_is_nonclassical(self):
        for first in ("signal", "idler"):
            assert nonclassicality_gamma(tmsv_joint_pmf(PairSource(0.1), 200), first).value > 1

    def test_no_two_click_events(self):
        with pytest.raises(DomainError):
            nonclassicality_gamma(JointCountMatrix(np.array([[90, 5, 0], [5, 10, 0], [0, 0, 0]]), 110))

    def test_error_matches_bootstrap(self):
        law = tmsv_joint_pmf(PairSource(0.3), 3).probs
        joint = JointCountMatrix(_sampled(law, 10**6, 2), 10**6)
        est = nonclassicality_gamma(joint)
        boot = bootstrap_error(lambda j: nonclassicality_gamma(j).value, joint, 300, seed=3)
        assert est.std_error == pytest.approx(boot, rel=0.25)


def test_shuffled_slots_are_classical(device_config):
    cfg = device_config.model_copy(update={"duration_s": 2.0, "mean_pairs_per_pulse": 0.3})
    law = forward_model(cfg.source(), cfg.channel("signal"), cfg.channel("idler"), cfg.detector("signal"),
                        cfg.detector("idler"), cfg.timing()).probs
    n = 10**7
    rng = np.random.default_rng(8)
    cells = rng.choice(law.size, n, p=law.ravel() / law.sum())
    s, i = cells // law.shape[1], rng.permutation(cells % law.shape[1])
    m = np.bincount(s * law.shape[1] + i, minlength=law.size).reshape(law.shape)
    g = nonclassicality_gamma(JointCountMatrix(m, n))
    assert g.value - 3 * g.std_error <= 1


class TestModeNumber:
    @pytest.mark.parametrize("g2, k, purity", [(2.0, 1.0, 1.0), (1.99, 1.0101, 0.99), (1.5, 2.0, 0.5)])
    def test_values(self, g2, k, purity):
        m = mode_number_and_purity(G2Estimate(g2, 0.0, 1e6))
        assert m.k == pytest.approx(k, abs=1e-4) and m.purity == pytest.approx(purity)

    @pytest.mark.parametrize("g2", [1.0, 0.5])
    def test_not_chaotic(self, g2):
        with pytest.raises(DomainError):
            mode_number_and_purity(G2Estimate(g2, 0.01, 100))

    def test_error_propagation(self):
        m = mode_number_and_purity(G2Estimate(1.5, 0.01, 1e6))
        assert m.k_error == pytest.approx(0.04) and m.purity_error == 0.01


class TestShotNoise:
    @pytest.mark.parametrize("count, err", [(0, 0.0), (100, 10.0)])
    def test_values(self, count, err):
        assert shot_noise_error(count) == err

    def test_normalized(self):
        assert shot_noise_error(100, 1e4) == pytest.approx(1e-3)

    def test_relative_error_grows_for_rare_cells(self):
        hist = CountHistogram.from_probabilities(thermal_pmf(0.0137).probs[:4], 10**8)
        rel = [shot_noise_error(c) / c for c in hist.counts]
        assert rel == sorted(rel)


def test_reference_fits_prefer_thermal():
    hist = CountHistogram.from_probabilities(np.append(thermal_pmf(0.05).probs[:3], thermal_pmf(0.05).probs[3:].sum()),
                                             10**8)
    fits = reference_fits(hist)
    assert fits.thermal.p_value > 0.5 and fits.coherent.p_value < 1e-6


@pytest.mark.parametrize("mu", [0.005, 0.01])
def test_klyshko_recovers_simulated_rate(mu):
    # 100 MHz repetition keeps mu <= 0.01 at a 1e6/s pair rate
    timing = SlotTiming(100e6, 0.0, 400e-12, 10e-9, 0.1)
    det = DetectorModel()
    cfg = SimConfig(PairSource(mu), Arm(LAB_S, det), Arm(LAB_I, det), timing, 99)
    c = simulate_counts(cfg)
    est = klyshko_pair_rate(RateSet.from_counts(c.joint, timing.duration))
    assert est == pytest.approx(mu * timing.rep_rate, rel=0.05)
