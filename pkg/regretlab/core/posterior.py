#!/usr/bin/env python3
"""
Oracle and mismatched MMSE estimators.

Provides:
- Posterior: normalised node cloud for P_a(X | Y=y), vectorised over y
- posterior_mean / posterior_second_moment / mismatched_estimate
- output_expectation: E[h(Y)] under the true channel's output law
- mse by quadrature or Monte Carlo
- GaussianOracle: closed forms for the zero-mean Gaussian input
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from regretlab.core.model import ChannelModel, PriorKind, draw, joint_nodes, substream
from regretlab.core.numerics import (
    DEFAULT_SPEC,
    MonteCarloEstimate,
    QuadratureSpec,
    gaussian_nodes,
)
from regretlab.errors import InvalidGainError, NotZeroMeanError

_CHUNK = 8192


class EvaluationMethod(Enum):
    """How expectations over (X, Y) are evaluated"""

    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class PosteriorSummary:
    """
    Posterior moments at one observation.

    :param y: Observation
    :param gain_used: Gain the posterior was computed under
    :param mean: phi_gain(y)
    :param second_moment: E_gain[X^2 | y]
    :param log_marginal: ln f_gain(y)
    """

    y: float
    gain_used: float
    mean: float
    second_moment: float
    log_marginal: float


class Posterior:
    """
    P_a(X | Y=y) as weighted nodes, for an array of observations at once.

    :param ch: Channel whose gain defines the posterior
    :param y: Observation(s), shape S
    :param spec: Quadrature settings
    """

    def __init__(self, ch: ChannelModel, y, spec: QuadratureSpec = DEFAULT_SPEC):
        self.channel = ch
        self.y = np.asarray(y, dtype=float)
        self.x, log_joint = joint_nodes(ch, self.y, spec)
        self.log_marginal = logsumexp(log_joint, axis=-1)
        self.log_weights = log_joint - self.log_marginal[..., None]
        self.weights = np.exp(self.log_weights)

    def expect(self, values) -> np.ndarray:
        """Posterior expectation of values given on the nodes."""
        return np.sum(self.weights * values, axis=-1)

    @property
    def mean(self) -> np.ndarray:
        return self.expect(self.x)

    @property
    def second_moment(self) -> np.ndarray:
        return self.expect(self.x * self.x)

    def likelihood_score(self, gain: Optional[float] = None) -> np.ndarray:
        """d/da ln f_a(y | x) on the nodes: x (y - a x) / s2."""
        a = self.channel.gain if gain is None else gain
        return self.x * (self.y[..., None] - a * self.x) / self.channel.noise_var

    def marginal_score(self) -> np.ndarray:
        """d/da ln f_a(y), the posterior mean of the likelihood score."""
        return self.expect(self.likelihood_score())


def squeeze_result(result):
    return float(result) if np.ndim(result) == 0 else result


def map_chunks(fn: Callable[[np.ndarray], np.ndarray], y) -> np.ndarray:
    """Apply a vectorised fn over a long 1-D array in bounded-memory chunks."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size <= _CHUNK:
        return fn(y)
    return np.concatenate([fn(y[i : i + _CHUNK]) for i in range(0, y.size, _CHUNK)])


def _check_gain(gain: float):
    if not (math.isfinite(gain) and gain > 0):
        raise InvalidGainError(f"Estimator gain must be > 0, got {gain}")


def posterior_mean(ch: ChannelModel, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """phi_a(y) = E[X | Y=y] under ch."""
    return squeeze_result(map_chunks(lambda v: Posterior(ch, v, spec).mean, y))


def posterior_second_moment(ch: ChannelModel, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """E_a[X^2 | Y=y] under ch."""
    return squeeze_result(map_chunks(lambda v: Posterior(ch, v, spec).second_moment, y))


def mismatched_estimate(
    ch_true: ChannelModel, a_hat: float, y, spec: QuadratureSpec = DEFAULT_SPEC
):
    """
    phi_a_hat(y): the MMSE estimator designed for gain a_hat.

    :raises InvalidGainError: a_hat <= 0
    """
    _check_gain(a_hat)
    return posterior_mean(ch_true.with_gain(a_hat), y, spec)


def summarize(ch: ChannelModel, y: float, spec: QuadratureSpec = DEFAULT_SPEC) -> PosteriorSummary:
    post = Posterior(ch, y, spec)
    return PosteriorSummary(
        y=float(y),
        gain_used=ch.gain,
        mean=float(post.mean),
        second_moment=float(post.second_moment),
        log_marginal=float(post.log_marginal),
    )


def output_expectation(
    ch: ChannelModel,
    h: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """
    E[h(Y)] under the output law of ch.

    Y is a Gaussian mixture (one component per prior component), so one
    Gaussian node rule is laid per output component.

    :param ch: True channel
    :param h: Vectorised function of y
    :param spec: Quadrature settings
    """
    w, m, v = ch.output_components()
    y, rule_w = gaussian_nodes(m, np.sqrt(v), spec)
    values = np.asarray(h(y), dtype=float)
    return float(np.sum(w[:, None] * rule_w * values))


def mse(
    ch: ChannelModel,
    estimator_gain: float,
    method: EvaluationMethod = EvaluationMethod.QUADRATURE,
    n: int = 10 ** 6,
    seed: int = 0,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """
    E[(X - phi_g(Y))^2] under the true channel ch, g = estimator_gain.

    :param ch: True channel
    :param estimator_gain: Gain the estimator was designed for
    :param method: quadrature or monte-carlo
    :param n: Monte Carlo sample size
    :param seed: Monte Carlo seed
    :param spec: Quadrature settings
    """
    _check_gain(estimator_gain)
    if method is EvaluationMethod.MONTE_CARLO:
        return monte_carlo_mse(ch, estimator_gain, n, seed, spec).value
    mismatched = ch.with_gain(estimator_gain)

    def integrand(y):
        true_post = Posterior(ch, y, spec)
        phi_g = Posterior(mismatched, y, spec).mean
        return true_post.second_moment - 2.0 * phi_g * true_post.mean + phi_g * phi_g

    return output_expectation(ch, integrand, spec)


def monte_carlo_mse(
    ch: ChannelModel,
    estimator_gain: float,
    n: int = 10 ** 6,
    seed: int = 0,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> MonteCarloEstimate:
    """Sample-mean squared error of phi_g over n draws from ch."""
    _check_gain(estimator_gain)
    xs, ys = draw(ch, n, substream(seed))
    estimates = map_chunks(lambda v: Posterior(ch.with_gain(estimator_gain), v, spec).mean, ys)
    return MonteCarloEstimate.from_samples((xs - estimates) ** 2)


@dataclass(frozen=True)
class GaussianOracle:
    """
    Closed forms for X ~ N(0, var_x) through Y = aX + V.

    :param gain: True gain a
    :param noise_var: Noise variance
    :param var_x: Input variance
    """

    gain: float
    noise_var: float
    var_x: float = 1.0

    @classmethod
    def from_channel(cls, ch: ChannelModel) -> "GaussianOracle":
        if ch.input.kind is not PriorKind.GAUSSIAN:
            raise ValueError("GaussianOracle needs a Gaussian input")
        if not ch.input.zero_mean():
            raise NotZeroMeanError("GaussianOracle needs a zero-mean input")
        return cls(ch.gain, ch.noise_var, ch.input.variance)

    def output_var(self, gain: Optional[float] = None) -> float:
        a = self.gain if gain is None else gain
        return a * a * self.var_x + self.noise_var

    def coefficient(self, gain: Optional[float] = None) -> float:
        """c_a in phi_a(y) = c_a * y."""
        a = self.gain if gain is None else gain
        return a * self.var_x / self.output_var(a)

    def estimate(self, y, gain: Optional[float] = None):
        return self.coefficient(gain) * np.asarray(y, dtype=float)

    def posterior_var(self, gain: Optional[float] = None) -> float:
        a = self.gain if gain is None else gain
        return self.var_x * self.noise_var / self.output_var(a)

    def second_moment(self, y, gain: Optional[float] = None):
        return self.posterior_var(gain) + self.estimate(y, gain) ** 2

    def mmse(self) -> float:
        return self.posterior_var()

    def absolute_regret(self, a_hat: float) -> float:
        """(c_a_hat - c_a)^2 E[Y^2]."""
        return (self.coefficient(a_hat) - self.coefficient()) ** 2 * self.output_var()

    def mse(self, estimator_gain: float) -> float:
        return self.mmse() + self.absolute_regret(estimator_gain)

    def marginal_score(self, y):
        """d/da ln N(y; 0, a^2 var_x + s2)."""
        s = self.output_var()
        y = np.asarray(y, dtype=float)
        return self.gain * self.var_x * (y * y / s - 1.0) / s

    def fisher_y(self) -> float:
        return 2.0 * self.gain ** 2 * self.var_x ** 2 / self.output_var() ** 2

    def fisher_y_given_x(self) -> float:
        return self.var_x / self.noise_var

    def fisher_x_given_y(self) -> float:
        return self.fisher_y_given_x() - self.fisher_y()

    def fisher_x_given_y_at(self, y):
        """Posterior variance of x (y - a x) / s2 at y."""
        y = np.asarray(y, dtype=float)
        a = self.gain
        m = self.estimate(y)
        v = self.posterior_var()
        var_score = v * y * y + a * a * (2.0 * v * v + 4.0 * m * m * v) - 4.0 * a * y * m * v
        return var_score / self.noise_var ** 2

    def rho(self) -> float:
        u = self.gain ** 2 * self.var_x / self.noise_var
        return 0.5 * (u + 1.0 / u)

    def kl_posteriors(self, a_hat: float, y):
        """KL(P_a_hat|y || P_a|y) between the two Gaussian posteriors."""
        m1, v1 = self.estimate(y, a_hat), self.posterior_var(a_hat)
        m0, v0 = self.estimate(y), self.posterior_var()
        return 0.5 * (math.log(v0 / v1) + v1 / v0 + (m1 - m0) ** 2 / v0 - 1.0)


def second_moment_bound(ch: ChannelModel, y):
    """3 var(X) + 4 y^2 / a^2, an upper bound on E_a[X^2 | y] for zero-mean inputs."""
    y = np.asarray(y, dtype=float)
    return squeeze_result(3.0 * ch.input.variance + 4.0 * y * y / ch.gain ** 2)
