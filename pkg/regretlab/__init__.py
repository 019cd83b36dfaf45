"""
RegretLab - regret of mismatched MMSE estimation under channel-gain uncertainty.

Numerics, posteriors, Fisher informations and regret bounds for the scalar
channel Y = aX + V with a known input prior and Gaussian noise, plus a small
experiment harness that writes tidy CSV.
"""

__version__ = "0.1.0"

from regretlab.core.model import ChannelModel, InputDistribution, registered_priors
from regretlab.core.numerics import QuadratureMethod, QuadratureSpec
from regretlab.core.posterior import GaussianOracle, mse, posterior_mean
from regretlab.core.regret import RegretReport, absolute_regret, regret_report, regret_scalar, relative_regret

__all__ = [
    "ChannelModel",
    "InputDistribution",
    "registered_priors",
    "QuadratureMethod",
    "QuadratureSpec",
    "GaussianOracle",
    "mse",
    "posterior_mean",
    "RegretReport",
    "absolute_regret",
    "regret_report",
    "regret_scalar",
    "relative_regret",
    "__version__",
]
