import math

import numpy as np
import pytest

from regretlab.core.blindest import (
    EstimatorKind,
    ExpectedRegret,
    GainEstimator,
    crb,
    efficiency_from_estimates,
    efficiency_report,
    estimate_gain,
    expected_regret_mc,
    lemma2_bound_rhs,
    lemma4_rregret_bound_rhs,
)
from regretlab.core.model import ChannelModel, InputDistribution, draw, registered_priors, substream
from regretlab.core.regret import regret_scalar, weighted_fisher
from regretlab.errors import DegenerateSampleError, MinimumAtBoundaryError, NotZeroMeanError
from regretlab.harness.worker_pool import WorkerPool

MOMENT = GainEstimator(EstimatorKind.MOMENT_MATCHING)
MLE = GainEstimator(EstimatorKind.NUMERICAL_MLE)
UNIT_GAUSSIAN = InputDistribution.gaussian(0.0, 1.0)


class TestGainEstimator:
    def test_kind_from_string(self):
        assert GainEstimator("moment-matching").kind is EstimatorKind.MOMENT_MATCHING

    @pytest.mark.parametrize("bracket", [(0.0, 1.0), (2.0, 1.0), (-1.0, 1.0)])
    def test_bad_bracket(self, bracket):
        with pytest.raises(ValueError):
            GainEstimator(bracket=bracket)

    def test_around(self):
        est = GainEstimator.around(EstimatorKind.NUMERICAL_MLE, 2.0)
        assert est.bracket == pytest.approx((2e-3, 2e3))
        assert est.to_dict()["kind"] == "numerical-mle"


class TestMomentMatching:
    def test_inverts_second_moment(self):
        assert estimate_gain(MOMENT, UNIT_GAUSSIAN, 1.0, [2.0, -2.0]) == pytest.approx(math.sqrt(3.0))

    def test_degenerate_sample(self):
        with pytest.raises(DegenerateSampleError) as info:
            estimate_gain(MOMENT, UNIT_GAUSSIAN, 1.0, [0.1, -0.1])
        assert info.value.clamped_value == 0.0

    def test_needs_zero_mean(self):
        with pytest.raises(NotZeroMeanError):
            estimate_gain(MOMENT, InputDistribution.gaussian(1.0, 1.0), 1.0, [2.0, -2.0])

    @pytest.mark.parametrize("ys", [[], [1.0]])
    def test_needs_two_outputs(self, ys):
        with pytest.raises(ValueError):
            estimate_gain(MOMENT, UNIT_GAUSSIAN, 1.0, ys)


class TestNumericalMle:
    def test_gaussian_matches_moment_matching(self):
        _, ys = draw(ChannelModel(1.5, 0.5), 500, substream(2))
        expected = estimate_gain(MOMENT, UNIT_GAUSSIAN, 0.5, ys)
        assert estimate_gain(MLE, UNIT_GAUSSIAN, 0.5, ys) == pytest.approx(expected, rel=1e-6)

    def test_boundary(self):
        with pytest.raises(MinimumAtBoundaryError) as info:
            estimate_gain(MLE, UNIT_GAUSSIAN, 1.0, [0.01, -0.01])
        assert info.value.boundary == 1e-3

    def test_scale_equivariance(self, prior):
        _, ys = draw(ChannelModel(0.8, 0.4, prior), 400, substream(9))
        base = estimate_gain(MLE, prior, 0.4, ys)
        scaled = estimate_gain(MLE, prior, 0.4 * 9.0, 3.0 * ys)
        assert scaled == pytest.approx(3.0 * base, rel=1e-6)

    @pytest.mark.parametrize("name", ["bpsk", "symmetric-mixture"])
    def test_consistent_at_large_n(self, name):
        prior = registered_priors()[name]
        _, ys = draw(ChannelModel(2.0, 0.5, prior), 20_000, substream(4))
        assert estimate_gain(MLE, prior, 0.5, ys) == pytest.approx(2.0, rel=2e-2)


class TestBounds:
    def test_crb_unit_channel(self, unit_channel):
        assert crb(unit_channel, 101) == pytest.approx(0.02, rel=1e-9)
        assert crb(unit_channel, 2) == pytest.approx(2.0, rel=1e-9)
        assert crb(unit_channel, 11) == pytest.approx(10.0 * crb(unit_channel, 101), rel=1e-12)

    def test_crb_needs_two(self, unit_channel):
        with pytest.raises(ValueError):
            crb(unit_channel, 1)

    def test_expected_absolute_bound(self, prior):
        ch = ChannelModel(1.3, 0.7, prior)
        assert lemma2_bound_rhs(ch, 50) == pytest.approx(weighted_fisher(ch) * crb(ch, 50), rel=1e-12)

    def test_expected_relative_bound(self, unit_channel):
        assert lemma4_rregret_bound_rhs(unit_channel, 101) == pytest.approx(0.01, rel=1e-9)
        snr_10 = ChannelModel(math.sqrt(0.1), 0.1)
        assert lemma4_rregret_bound_rhs(snr_10, 1001) == pytest.approx(1e-3, rel=1e-9)


class TestMonteCarlo:
    def test_deterministic(self, unit_channel):
        first = expected_regret_mc(unit_channel, MOMENT, n=50, trials=20, seed=7)
        second = expected_regret_mc(unit_channel, MOMENT, n=50, trials=20, seed=7)
        assert isinstance(first, ExpectedRegret)
        np.testing.assert_array_equal(first.gain_estimates, second.gain_estimates)
        assert first.regret_abs.value == second.regret_abs.value

    def test_pool_matches_sequential(self, bpsk_channel):
        sequential = expected_regret_mc(bpsk_channel, MLE, n=40, trials=12, seed=3)
        pooled = expected_regret_mc(bpsk_channel, MLE, n=40, trials=12, seed=3, pool=WorkerPool(max_workers=3))
        np.testing.assert_array_equal(sequential.gain_estimates, pooled.gain_estimates)
        assert sequential.regret_rel.value == pooled.regret_rel.value

    def test_degenerate_trials_are_counted(self):
        ch = ChannelModel(0.1, 1.0)
        result = expected_regret_mc(ch, MOMENT, n=3, trials=40, seed=1)
        assert result.degenerate_trials > 0
        assert result.degenerate_trials + len(result.gain_estimates) == 40

    def test_bad_arguments(self, unit_channel):
        with pytest.raises(ValueError):
            expected_regret_mc(unit_channel, MOMENT, n=1, trials=5)
        with pytest.raises(ValueError):
            expected_regret_mc(unit_channel, MOMENT, n=10, trials=0)

    def test_efficiency_from_known_estimates(self, unit_channel):
        report = efficiency_from_estimates(unit_channel, 101, 4, [0.9, 1.1, 0.95, 1.05])
        assert report.mean_estimate == pytest.approx(1.0)
        assert report.empirical_bias == pytest.approx(0.0, abs=1e-15)
        assert report.crb == pytest.approx(0.02)
        assert report.empirical_var == pytest.approx(np.var([0.9, 1.1, 0.95, 1.05], ddof=1))
        assert report.unbiased
        assert report.to_dict()["degenerate_trials"] == 0

    def test_efficiency_needs_two_estimates(self, unit_channel):
        with pytest.raises(DegenerateSampleError):
            efficiency_from_estimates(unit_channel, 101, 5, [1.0])

    def test_efficiency_rejects_zero_spread(self, unit_channel):
        with pytest.raises(DegenerateSampleError, match="identical"):
            efficiency_from_estimates(unit_channel, 101, 3, [1.02, 1.02, 1.02])

    @pytest.mark.slow
    def test_mle_is_efficient(self, unit_channel):
        report = efficiency_report(unit_channel, MLE, n=10_000, trials=500, seed=0, pool=WorkerPool())
        assert report.crb == pytest.approx(2.0002e-4, rel=1e-4)
        assert 0.9 <= report.empirical_var / report.crb <= 1.3
        assert report.unbiased

    @pytest.mark.slow
    def test_expected_regret_within_bounds(self, unit_channel):
        n = 10_000
        result = expected_regret_mc(unit_channel, MLE, n=n, trials=500, seed=0, pool=WorkerPool())
        assert result.regret_abs.value <= 1.1 * lemma2_bound_rhs(unit_channel, n)
        assert result.regret_rel.value <= 1.1 * lemma4_rregret_bound_rhs(unit_channel, n)
        assert (n - 1) * result.regret_rel.value <= 1.1 * regret_scalar(unit_channel)
