import math

import numpy as np
import pytest

from regretlab.core.information import (
    FisherReport,
    fisher_product_two_samples,
    fisher_report,
    fisher_x_given_y,
    fisher_x_given_y_at,
    fisher_y,
    fisher_y_given_x,
    fisher_y_given_x_numeric,
    hellinger_sq_posteriors,
    kl_fisher_ratio,
    kl_posteriors,
    marginal_score,
    score_mean,
    score_x_given_y,
)
from regretlab.core.model import ChannelModel, InputDistribution, marginal_log_closed_form
from regretlab.core.numerics import fd_derivative
from regretlab.core.posterior import GaussianOracle, Posterior
from regretlab.errors import InvalidGainError, NotZeroMeanError

from tests.conftest import GAINS


class TestScores:
    @pytest.mark.parametrize("y", [-3.0, -0.4, 0.0, 1.7, 5.0])
    def test_marginal_score_matches_finite_difference(self, prior, y):
        ch = ChannelModel(0.9, 0.7, prior)
        expected = fd_derivative(lambda g: marginal_log_closed_form(ch.with_gain(g), y), ch.gain, 1e-5)
        assert marginal_score(ch, y) == pytest.approx(expected, rel=1e-6, abs=1e-8)

    def test_gaussian_marginal_score(self, unit_channel):
        y = np.array([-2.0, 0.0, 0.5, 3.0])
        np.testing.assert_allclose(
            marginal_score(unit_channel, y), GaussianOracle(1.0, 1.0).marginal_score(y), rtol=1e-10, atol=1e-12
        )

    def test_posterior_score_has_zero_posterior_mean(self, prior):
        ch = ChannelModel(1.4, 0.5, prior)
        post = Posterior(ch, 0.8)
        assert post.expect(score_x_given_y(ch, post.x, 0.8)) == pytest.approx(0.0, abs=1e-12)

    def test_score_mean_vanishes(self, prior):
        assert score_mean(ChannelModel(1.1, 0.8, prior)) == pytest.approx(0.0, abs=1e-6)


class TestFisher:
    def test_gaussian_unit_channel(self, unit_channel):
        assert fisher_x_given_y(unit_channel) == pytest.approx(0.5, rel=1e-10)
        assert fisher_y(unit_channel) == pytest.approx(0.5, rel=1e-10)
        assert fisher_y_given_x(unit_channel) == 1.0

    def test_gaussian_snr_10_at_matched_gain(self):
        ch = ChannelModel(math.sqrt(0.1), 0.1)
        assert fisher_y(ch) == pytest.approx(5.0, rel=1e-9)

    @pytest.mark.parametrize("gain", GAINS)
    def test_gaussian_closed_forms(self, gain):
        ch = ChannelModel(gain, 0.6, InputDistribution.gaussian(0.0, 1.5))
        oracle = GaussianOracle.from_channel(ch)
        assert fisher_y(ch) == pytest.approx(oracle.fisher_y(), rel=1e-9)
        assert fisher_x_given_y(ch) == pytest.approx(oracle.fisher_x_given_y(), rel=1e-9)

    def test_per_observation_gaussian_is_constant(self, unit_channel):
        y = np.linspace(-6.0, 6.0, 13)
        np.testing.assert_allclose(fisher_x_given_y_at(unit_channel, y), 0.5, rtol=1e-10)

    def test_per_observation_is_nonnegative(self, prior):
        ch = ChannelModel(2.0, 0.3, prior)
        values = fisher_x_given_y_at(ch, np.linspace(-10.0, 10.0, 41))
        assert np.all(values >= 0.0)

    @pytest.mark.parametrize("gain", GAINS)
    def test_chain_rule(self, prior, gain):
        report = fisher_report(ChannelModel(gain, 1.0, prior))
        assert isinstance(report, FisherReport)
        assert abs(report.chain_rule_residual) <= 1e-5

    def test_numeric_conditional_fisher_matches_closed_form(self, prior):
        ch = ChannelModel(0.7, 0.4, prior)
        assert fisher_y_given_x_numeric(ch) == pytest.approx(fisher_y_given_x(ch), rel=1e-10)

    def test_conditional_fisher_needs_zero_mean(self):
        ch = ChannelModel(1.0, 1.0, InputDistribution.gaussian(0.5, 1.0))
        with pytest.raises(NotZeroMeanError):
            fisher_y_given_x(ch)
        # the numeric form still applies
        assert fisher_y_given_x_numeric(ch) == pytest.approx(1.25, rel=1e-10)

    def test_report_falls_back_to_numeric_for_nonzero_mean(self):
        ch = ChannelModel(1.0, 1.0, InputDistribution.gaussian(0.5, 1.0))
        report = fisher_report(ch)
        assert report.fisher_y_given_x == pytest.approx(1.25, rel=1e-10)
        assert abs(report.chain_rule_residual) <= 1e-5

    def test_report_per_y_samples(self, bpsk_channel):
        report = fisher_report(bpsk_channel, per_y=[-1.0, 0.0, 1.0])
        assert [y for y, _ in report.per_y_samples] == [-1.0, 0.0, 1.0]
        assert all(i >= 0 for _, i in report.per_y_samples)

    def test_two_samples_are_additive(self, prior):
        ch = ChannelModel(0.8, 0.5, prior)
        assert fisher_product_two_samples(ch) == pytest.approx(2.0 * fisher_y(ch), rel=1e-8)


class TestDivergences:
    def test_gaussian_kl_closed_form(self, unit_channel):
        oracle = GaussianOracle.from_channel(unit_channel)
        for y in (-2.0, 0.0, 0.3, 4.0):
            assert kl_posteriors(unit_channel, 1.1, y) == pytest.approx(oracle.kl_posteriors(1.1, y), rel=1e-8)

    def test_kl_vanishes_when_matched(self, prior):
        ch = ChannelModel(1.2, 0.9, prior)
        y = np.linspace(-4.0, 4.0, 9)
        np.testing.assert_allclose(kl_posteriors(ch, 1.2, y), 0.0, atol=1e-14)
        np.testing.assert_allclose(hellinger_sq_posteriors(ch, 1.2, y), 0.0, atol=1e-14)

    @pytest.mark.parametrize("a_hat", [0.5, 0.9, 1.05, 1.6, 3.0])
    def test_hellinger_below_half_kl(self, prior, a_hat):
        ch = ChannelModel(1.0, 0.8, prior)
        y = np.linspace(-5.0, 5.0, 21)
        r2 = np.asarray(hellinger_sq_posteriors(ch, a_hat, y))
        kl = np.asarray(kl_posteriors(ch, a_hat, y))
        assert np.all((0.0 <= r2) & (r2 <= 1.0))
        assert np.all(2.0 * r2 <= kl + 1e-12)

    @pytest.mark.parametrize("gain", [0.5, 1.0, 2.0])
    def test_kl_fisher_ratio_tends_to_one(self, prior, gain):
        ch = ChannelModel(gain, 1.0, prior)
        y = np.array([-1.5, 0.2, 2.0])
        ratio = kl_fisher_ratio(ch, gain * (1.0 + 1e-3), y)
        np.testing.assert_allclose(ratio, 1.0, rtol=2e-2)

    def test_kl_fisher_ratio_error_shrinks_gaussian(self, unit_channel):
        y = np.array([-3.0, -1.0, 0.0, 1.5, 4.0])
        errors = [
            np.max(np.abs(np.asarray(kl_fisher_ratio(unit_channel, 1.0 + d, y)) - 1.0))
            for d in (1e-2, 1e-3, 1e-4)
        ]
        assert errors[1] <= 0.01
        assert errors[0] > errors[1] > errors[2]

    def test_kl_grows_with_mismatch(self, bpsk_channel):
        values = [kl_posteriors(bpsk_channel, 1.0 + d, 0.7) for d in (0.01, 0.05, 0.2, 0.5)]
        assert all(b >= a - 1e-6 for a, b in zip(values, values[1:]))

    def test_invalid_gain(self, unit_channel):
        with pytest.raises(InvalidGainError):
            kl_posteriors(unit_channel, 0.0, 1.0)
