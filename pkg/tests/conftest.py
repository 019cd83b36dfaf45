import pytest

from regretlab.core.model import ChannelModel, InputDistribution, registered_priors

GAINS = (0.2, 0.5, 1.0, 2.0, 5.0)
PRIOR_NAMES = tuple(registered_priors())


@pytest.fixture
def unit_channel() -> ChannelModel:
    """X ~ N(0, 1), a = 1, noise variance 1."""
    return ChannelModel(1.0, 1.0, InputDistribution.gaussian(0.0, 1.0))


@pytest.fixture
def bpsk_channel() -> ChannelModel:
    return ChannelModel(1.0, 1.0, registered_priors()["bpsk"])


@pytest.fixture(params=PRIOR_NAMES)
def prior(request) -> InputDistribution:
    return registered_priors()[request.param]
