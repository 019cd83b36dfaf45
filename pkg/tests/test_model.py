import math

import numpy as np
import pytest

from regretlab.core.model import (
    ChannelModel,
    InputDistribution,
    PriorKind,
    derive_seed,
    likelihood_log,
    marginal_log,
    marginal_log_closed_form,
    registered_priors,
    sample,
)
from regretlab.core.numerics import QuadratureMethod, QuadratureSpec, integrate
from regretlab.errors import InvalidDistributionError, InvalidGainError

from tests.conftest import GAINS

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class TestInputDistribution:
    def test_gaussian_moments(self):
        prior = InputDistribution.gaussian(0.5, 2.0)
        assert prior.kind is PriorKind.GAUSSIAN
        assert prior.mean == 0.5
        assert prior.variance == pytest.approx(2.0)
        assert prior.second_moment == pytest.approx(2.25)

    def test_mixture_moments(self):
        prior = registered_priors()["symmetric-mixture"]
        assert prior.mean == 0.0
        assert prior.variance == pytest.approx(1.5)

    def test_registry_is_zero_mean(self, prior):
        assert prior.zero_mean()

    def test_skewed_discrete(self):
        prior = registered_priors()["skewed-discrete"]
        assert prior.variance == pytest.approx(2.0)

    def test_non_zero_mean(self):
        assert not InputDistribution.gaussian(1e-3, 1.0).zero_mean()
        assert not InputDistribution.discrete([(0.5, 0.0), (0.5, 1.0)]).zero_mean()

    @pytest.mark.parametrize(
        "build",
        [
            lambda: InputDistribution.discrete([(0.5, -1.0), (0.6, 1.0)]),
            lambda: InputDistribution.discrete([(-0.5, -1.0), (1.5, 1.0)]),
            lambda: InputDistribution.mixture([(1.0, 0.0, 0.0)]),
            lambda: InputDistribution.gaussian(0.0, -1.0),
            lambda: InputDistribution.mixture([]),
            lambda: InputDistribution(PriorKind.GAUSSIAN, ((0.5, 0.0, 1.0), (0.5, 1.0, 1.0))),
        ],
    )
    def test_invalid(self, build):
        with pytest.raises(InvalidDistributionError):
            build()

    def test_support_bounds(self):
        lo, hi = registered_priors()["symmetric-mixture"].support_bounds(4.0)
        assert lo == pytest.approx(-1.0 - 4.0 * math.sqrt(0.5))
        assert hi == pytest.approx(1.0 + 4.0 * math.sqrt(0.5))
        assert registered_priors()["bpsk"].support_bounds() == (-1.0, 1.0)

    def test_describe(self):
        assert InputDistribution.gaussian(0.0, 1.0).describe() == "gaussian:0,1"
        assert registered_priors()["bpsk"].describe() == "discrete:0.5,-1;0.5,1"


class TestChannelModel:
    @pytest.mark.parametrize("gain", [0.0, -1.0, math.inf, math.nan])
    def test_invalid_gain(self, gain):
        with pytest.raises(InvalidGainError):
            ChannelModel(gain, 1.0)

    def test_invalid_noise(self):
        with pytest.raises(InvalidDistributionError):
            ChannelModel(1.0, 0.0)

    def test_snr_independent_of_gain(self, prior):
        ch = ChannelModel(1.0, 0.25, prior)
        assert all(ch.with_gain(a).snr() == ch.snr() for a in GAINS)

    def test_output_components(self, bpsk_channel):
        w, m, v = bpsk_channel.with_gain(2.0).output_components()
        np.testing.assert_allclose(w, [0.5, 0.5])
        np.testing.assert_allclose(m, [-2.0, 2.0])
        np.testing.assert_allclose(v, [1.0, 1.0])

    def test_output_variance(self, unit_channel):
        assert unit_channel.with_gain(2.0).output_variance() == pytest.approx(5.0)


class TestLikelihood:
    def test_standard_normal_at_zero(self, unit_channel):
        assert likelihood_log(unit_channel, 0.0, 0.0) == pytest.approx(-HALF_LOG_2PI, abs=1e-12)

    def test_zero_residual(self):
        assert likelihood_log(ChannelModel(2.0, 1.0), 2.0, 1.0) == pytest.approx(-0.9189385, abs=1e-7)

    def test_unit_residual(self, unit_channel):
        assert likelihood_log(unit_channel, 3.0, 1.0) == pytest.approx(-HALF_LOG_2PI - 2.0, abs=1e-12)


class TestMarginal:
    def test_gaussian_closed_form(self, unit_channel):
        assert marginal_log(unit_channel, 0.0) == pytest.approx(-0.5 * math.log(4.0 * math.pi), rel=1e-12)

    def test_bpsk_exact_sum(self, bpsk_channel):
        expected = math.log(math.exp(-0.5) / math.sqrt(2.0 * math.pi))
        assert marginal_log(bpsk_channel, 0.0) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("gain", GAINS)
    def test_quadrature_matches_mixture_law(self, prior, gain):
        ch = ChannelModel(gain, 1.0, prior)
        y = np.linspace(-10.0, 10.0, 41) * math.sqrt(ch.output_variance())
        np.testing.assert_allclose(marginal_log(ch, y), marginal_log_closed_form(ch, y), rtol=1e-9)

    def test_vectorised_shape(self, prior):
        ch = ChannelModel(1.0, 1.0, prior)
        assert marginal_log(ch, np.zeros((2, 3))).shape == (2, 3)
        assert isinstance(marginal_log(ch, 0.5), float)

    @pytest.mark.parametrize("gain", [0.5, 2.0])
    def test_normalisation(self, prior, gain):
        ch = ChannelModel(gain, 1.0, prior)
        spec = QuadratureSpec(method=QuadratureMethod.ADAPTIVE_SIMPSON)
        total = integrate(lambda y: np.exp(marginal_log(ch, y)), 0.0, math.sqrt(ch.output_variance()), spec)
        assert total == pytest.approx(1.0, abs=1e-7)


class TestSample:
    def test_deterministic(self, prior):
        ch = ChannelModel(1.0, 1.0, prior)
        first = sample(ch, 100, seed=7)
        second = sample(ch, 100, seed=7)
        np.testing.assert_array_equal(first.xs, second.xs)
        np.testing.assert_array_equal(first.ys, second.ys)

    def test_substreams_differ(self, unit_channel):
        assert not np.array_equal(sample(unit_channel, 10, 3, index=0).ys, sample(unit_channel, 10, 3, index=1).ys)

    def test_singleton(self, unit_channel):
        batch = sample(unit_channel, 1, seed=11)
        assert len(batch) == 1
        assert batch.xs.shape == batch.ys.shape == (1,)

    def test_invalid_size(self, unit_channel):
        with pytest.raises(ValueError):
            sample(unit_channel, 0, seed=0)

    def test_output_variance(self, unit_channel):
        batch = sample(unit_channel, 10 ** 6, seed=2024)
        assert np.var(batch.ys) == pytest.approx(2.0, abs=0.01)

    def test_discrete_atoms(self, bpsk_channel):
        batch = sample(bpsk_channel, 1000, seed=5)
        assert set(np.unique(batch.xs)) == {-1.0, 1.0}

    def test_derive_seed(self):
        assert derive_seed(1, 0) == derive_seed(1, 0)
        assert derive_seed(1, 0) != derive_seed(1, 1)
