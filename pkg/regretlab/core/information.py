#!/usr/bin/env python3
"""
Fisher informations and posterior divergences.

All scores are derivatives with respect to the channel gain a. The posterior
score splits as the likelihood score x (y - a x) / s2 minus the marginal score,
and the marginal score is the posterior mean of the likelihood score.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from regretlab.core.model import ChannelModel, marginal_log
from regretlab.core.numerics import DEFAULT_SPEC, QuadratureSpec, gaussian_nodes
from regretlab.core.posterior import Posterior, map_chunks, output_expectation, squeeze_result
from regretlab.errors import InvalidGainError, NotZeroMeanError


@dataclass
class FisherReport:
    """
    Fisher quantities of one channel.

    :param a: Gain
    :param fisher_x_given_Y_avg: I(X;a|Y)
    :param fisher_y: I(Y;a)
    :param fisher_y_given_x: I(Y;a|X)
    :param per_y_samples: Optional (y, I(X;a||Y=y)) pairs
    """

    a: float
    fisher_x_given_Y_avg: float
    fisher_y: float
    fisher_y_given_x: float
    per_y_samples: Optional[List[Tuple[float, float]]] = field(default=None)

    @property
    def chain_rule_residual(self) -> float:
        """I(X;a|Y) - (I(Y;a|X) - I(Y;a)); vanishes because I(X;a) = 0."""
        return self.fisher_x_given_Y_avg - (self.fisher_y_given_x - self.fisher_y)


def marginal_score(ch: ChannelModel, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """d/da ln f_a(y)."""
    return squeeze_result(map_chunks(lambda v: Posterior(ch, v, spec).marginal_score(), y))


def score_x_given_y(ch: ChannelModel, x, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """d/da ln f_a(x | y) = x (y - a x) / s2 - d/da ln f_a(y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    likelihood = x * (y - ch.gain * x) / ch.noise_var
    return squeeze_result(likelihood - Posterior(ch, y, spec).marginal_score())


def conditional_fisher(post: Posterior) -> np.ndarray:
    score = post.likelihood_score()
    centered = score - post.expect(score)[..., None]
    return post.expect(centered * centered)


def fisher_x_given_y_at(ch: ChannelModel, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """I(X;a||Y=y): posterior second moment of the posterior score."""
    return squeeze_result(map_chunks(lambda v: conditional_fisher(Posterior(ch, v, spec)), y))


def fisher_x_given_y(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """I(X;a|Y): average of I(X;a||Y) over the output law."""
    return output_expectation(ch, lambda y: conditional_fisher(Posterior(ch, y, spec)), spec)


def fisher_y(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """I(Y;a) = E[(d/da ln f_a(Y))^2]."""
    return output_expectation(ch, lambda y: Posterior(ch, y, spec).marginal_score() ** 2, spec)


def score_mean(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """E[d/da ln f_a(Y)]; zero under the usual regularity conditions."""
    return output_expectation(ch, lambda y: Posterior(ch, y, spec).marginal_score(), spec)


def fisher_y_given_x(ch: ChannelModel) -> float:
    """
    I(Y;a|X) = E[X^2] / s2 for a zero-mean input.

    :raises NotZeroMeanError: the prior mean is not zero
    """
    if not ch.input.zero_mean():
        raise NotZeroMeanError(
            f"I(Y;a|X) = var(X)/s2 needs a zero-mean input, mean is {ch.input.mean!r}"
        )
    return ch.input.second_moment / ch.noise_var


def fisher_y_given_x_numeric(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """I(Y;a|X) from its definition E_X E_{Y|X}[(x (Y - a x) / s2)^2] by double quadrature."""
    prior = ch.input
    if prior.is_discrete:
        xs = prior.means[:, None]
        x_weights = np.ones_like(xs)
    else:
        xs, x_weights = gaussian_nodes(prior.means, np.sqrt(prior.variances), spec)
    ys, y_weights = gaussian_nodes(ch.gain * xs, math.sqrt(ch.noise_var), spec)
    score = xs[..., None] * (ys - ch.gain * xs[..., None]) / ch.noise_var
    inner = np.sum(y_weights * score * score, axis=-1)
    return float(np.sum(prior.weights[:, None] * x_weights * inner))


def fisher_product_two_samples(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """
    Fisher information of the product density f_a(y1) f_a(y2).

    Evaluated on the tensor product of the output-law node rules; additivity
    makes it 2 * I(Y;a).
    """
    w, m, v = ch.output_components()
    y, rule_w = gaussian_nodes(m, np.sqrt(v), spec)
    y = y.ravel()
    point_w = (w[:, None] * rule_w).ravel()
    score = Posterior(ch, y, spec).marginal_score()
    joint_score = score[:, None] + score[None, :]
    return float(np.sum(point_w[:, None] * point_w[None, :] * joint_score ** 2))


def fisher_report(
    ch: ChannelModel,
    spec: QuadratureSpec = DEFAULT_SPEC,
    per_y: Optional[Sequence[float]] = None,
) -> FisherReport:
    """Collect I(X;a|Y), I(Y;a) and I(Y;a|X) for ch."""
    samples = None
    if per_y is not None:
        values = np.atleast_1d(fisher_x_given_y_at(ch, np.asarray(per_y, dtype=float), spec))
        samples = [(float(y), float(i)) for y, i in zip(per_y, values)]
    try:
        given_x = fisher_y_given_x(ch)
    except NotZeroMeanError:
        given_x = fisher_y_given_x_numeric(ch, spec)
    return FisherReport(
        a=ch.gain,
        fisher_x_given_Y_avg=fisher_x_given_y(ch, spec),
        fisher_y=fisher_y(ch, spec),
        fisher_y_given_x=given_x,
        per_y_samples=samples,
    )


def _divergence_terms(ch: ChannelModel, a_hat: float, y, spec: QuadratureSpec):
    """
    Shared pieces of KL and Hellinger on the nodes of P_a_hat(. | y).

    Returns (post_hat, log_ratio) where log_ratio = ln f_a(x|y) - ln f_a_hat(x|y)
    on the nodes; the prior density cancels so only likelihoods and marginals
    enter.
    """
    if not (math.isfinite(a_hat) and a_hat > 0):
        raise InvalidGainError(f"a_hat must be > 0, got {a_hat}")
    y = np.asarray(y, dtype=float)
    post_hat = Posterior(ch.with_gain(a_hat), y, spec)
    a = ch.gain
    x = post_hat.x
    # ln l_a - ln l_a_hat, factored to avoid cancellation when a_hat ~ a
    log_lik_ratio = (a - a_hat) * x * (2.0 * y[..., None] - (a + a_hat) * x) / (2.0 * ch.noise_var)
    log_marg_ratio = post_hat.log_marginal - marginal_log(ch, y, spec)
    return post_hat, log_lik_ratio + np.asarray(log_marg_ratio)[..., None]


def kl_posteriors(ch: ChannelModel, a_hat: float, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """D(P_a_hat|y || P_a|y)."""
    post_hat, log_ratio = _divergence_terms(ch, a_hat, y, spec)
    return squeeze_result(np.maximum(post_hat.expect(-log_ratio), 0.0))


def hellinger_sq_posteriors(
    ch: ChannelModel, a_hat: float, y, spec: QuadratureSpec = DEFAULT_SPEC
):
    """
    Kakutani-Hellinger r^2 = 1 - integral of sqrt(dP_a_hat|y dP_a|y), in [0, 1].
    """
    post_hat, log_ratio = _divergence_terms(ch, a_hat, y, spec)
    affinity = post_hat.expect(np.exp(0.5 * log_ratio))
    return squeeze_result(np.clip(1.0 - affinity, 0.0, 1.0))


def kl_fisher_ratio(ch: ChannelModel, a_hat: float, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """KL / ((a_hat - a)^2 / 2 * I(X;a||Y=y)); tends to 1 as a_hat -> a."""
    delta = a_hat - ch.gain
    kl = np.asarray(kl_posteriors(ch, a_hat, y, spec))
    fisher = np.asarray(fisher_x_given_y_at(ch, y, spec))
    return squeeze_result(kl / (0.5 * delta * delta * fisher))
