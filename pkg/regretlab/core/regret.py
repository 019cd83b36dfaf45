#!/usr/bin/env python3
"""
Absolute and relative regret of the mismatched MMSE estimator and their bounds.

Provides:
- absolute_regret / relative_regret and the MSE-difference cross-check
- Deviation bounds: the weighted conditional Fisher bound, its uncorrelated
  simplification, the relative-regret Fisher bound and a slack-free bound
  built from the pointwise KL inequality
- pointwise_bound_check for the exact per-observation inequality
- regret_scalar and the Fisher / regret-scalar trade-off
- RegretReport / TradeoffReport collections for the harness
"""

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from decologr import Logger as log

from regretlab.core.information import (
    conditional_fisher,
    fisher_x_given_y,
    fisher_y,
    hellinger_sq_posteriors,
    kl_posteriors,
)
from regretlab.core.model import ChannelModel, draw, substream
from regretlab.core.numerics import DEFAULT_SPEC, MonteCarloEstimate, QuadratureSpec, gaussian_nodes
from regretlab.core.posterior import (
    EvaluationMethod,
    Posterior,
    map_chunks,
    mse,
    output_expectation,
    squeeze_result,
)
from regretlab.errors import (
    DegenerateFisherError,
    DegeneratePriorError,
    InvalidGainError,
    NotZeroMeanError,
)

POINTWISE_TOL = 1e-9
FISHER_FLOOR = 1e-12
TRADEOFF_TOL = 1e-4


def _check_gain(a_hat: float):
    if not (math.isfinite(a_hat) and a_hat > 0):
        raise InvalidGainError(f"a_hat must be > 0, got {a_hat}")


def slack(ch: ChannelModel, a_hat: float, c: float = 1.0) -> float:
    """Allowance c * |a_hat - a| / a for the o((a_hat - a)^2) remainders."""
    return c * abs(a_hat - ch.gain) / ch.gain


def absolute_regret(
    ch: ChannelModel,
    a_hat: float,
    method: EvaluationMethod = EvaluationMethod.QUADRATURE,
    n: int = 10 ** 6,
    seed: int = 0,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """
    R(a_hat, a) = E[(phi_a_hat(Y) - phi_a(Y))^2] under the true channel.

    :param ch: True channel
    :param a_hat: Mismatched gain
    :param method: quadrature or monte-carlo
    :param n: Monte Carlo sample size
    :param seed: Monte Carlo seed
    :param spec: Quadrature settings
    """
    _check_gain(a_hat)
    if method is EvaluationMethod.MONTE_CARLO:
        return orthogonality_check(ch, a_hat, n, seed, spec).estimator_gap.value
    mismatched = ch.with_gain(a_hat)

    def integrand(y):
        gap = Posterior(mismatched, y, spec).mean - Posterior(ch, y, spec).mean
        return gap * gap

    return output_expectation(ch, integrand, spec)


def absolute_regret_via_mse(ch: ChannelModel, a_hat: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """MSE(a_hat) - MSE(a), the definition before orthogonality is applied."""
    _check_gain(a_hat)
    return mse(ch, a_hat, spec=spec) - mse(ch, ch.gain, spec=spec)


@dataclass(frozen=True)
class OrthogonalityCheck:
    """
    Monte Carlo comparison of the two forms of absolute regret.

    :param excess_mse: Samples of (X - phi_a_hat)^2 - (X - phi_a)^2
    :param estimator_gap: Samples of (phi_a_hat - phi_a)^2
    :param difference: Samples of their difference, mean zero by orthogonality
    """

    excess_mse: MonteCarloEstimate
    estimator_gap: MonteCarloEstimate
    difference: MonteCarloEstimate

    def holds(self, sigmas: float = 3.0) -> bool:
        return self.difference.within(0.0, sigmas)


def orthogonality_check(
    ch: ChannelModel,
    a_hat: float,
    n: int = 10 ** 6,
    seed: int = 0,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> OrthogonalityCheck:
    """Draw n pairs from ch and evaluate both regret forms on the same draws."""
    _check_gain(a_hat)
    xs, ys = draw(ch, n, substream(seed))
    mismatched = ch.with_gain(a_hat)
    phi = map_chunks(lambda v: Posterior(ch, v, spec).mean, ys)
    phi_hat = map_chunks(lambda v: Posterior(mismatched, v, spec).mean, ys)
    excess = (xs - phi_hat) ** 2 - (xs - phi) ** 2
    gap = (phi_hat - phi) ** 2
    return OrthogonalityCheck(
        excess_mse=MonteCarloEstimate.from_samples(excess),
        estimator_gap=MonteCarloEstimate.from_samples(gap),
        difference=MonteCarloEstimate.from_samples(excess - gap),
    )


def relative_regret(ch: ChannelModel, a_hat: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """
    E[(phi_a_hat - phi_a)^2 / (E_a_hat[X^2|Y] + E_a[X^2|Y])] under the true channel.

    :raises DegeneratePriorError: the prior has zero variance
    """
    _check_gain(a_hat)
    if not ch.input.variance > 0:
        raise DegeneratePriorError("Relative regret needs a prior with positive variance")
    mismatched = ch.with_gain(a_hat)

    def integrand(y):
        post = Posterior(ch, y, spec)
        post_hat = Posterior(mismatched, y, spec)
        gap = post_hat.mean - post.mean
        return gap * gap / (post_hat.second_moment + post.second_moment)

    return output_expectation(ch, integrand, spec)


def weighted_fisher(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """E[(6 var(X) + 8 Y^2 / a^2) I(X;a||Y)] under the true channel."""
    var_x = ch.input.variance
    a2 = ch.gain ** 2

    def integrand(y):
        return (6.0 * var_x + 8.0 * y * y / a2) * conditional_fisher(Posterior(ch, y, spec))

    return output_expectation(ch, integrand, spec)


def lemma1_bound_rhs(ch: ChannelModel, a_hat: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """(a_hat - a)^2 E[(6 var(X) + 8 Y^2 / a^2) I(X;a||Y)], without the o(.) remainder."""
    _check_gain(a_hat)
    return (a_hat - ch.gain) ** 2 * weighted_fisher(ch, spec)


def corollary1_bound_rhs(ch: ChannelModel, a_hat: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """(a_hat - a)^2 (14 var(X) + 8 s2 / a^2) I(X;a|Y)."""
    _check_gain(a_hat)
    weight = 14.0 * ch.input.variance + 8.0 * ch.noise_var / ch.gain ** 2
    return (a_hat - ch.gain) ** 2 * weight * fisher_x_given_y(ch, spec)


def fisher_y2_correlation(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """corr(I(X;a||Y), Y^2); the uncorrelated simplification assumes it is zero."""

    def moments(y):
        fisher = conditional_fisher(Posterior(ch, y, spec))
        y2 = y * y
        return np.stack([fisher, y2, fisher * fisher, y2 * y2, fisher * y2])

    w, m, v = ch.output_components()
    y, rule_w = gaussian_nodes(m, np.sqrt(v), spec)
    values = moments(y)
    e_i, e_y2, e_i2, e_y4, e_iy2 = np.sum(w[:, None] * rule_w * values, axis=(-2, -1))
    var_i = e_i2 - e_i * e_i
    var_y2 = e_y4 - e_y2 * e_y2
    # I(X;a||Y) constant in y (Gaussian input) leaves only rounding noise in var_i
    if var_i <= 1e-12 * e_i * e_i or var_y2 <= 0:
        return 0.0
    return float((e_iy2 - e_i * e_y2) / math.sqrt(var_i * var_y2))


def lemma3_bound_rhs(ch: ChannelModel, a_hat: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """(a_hat - a)^2 I(X;a|Y), without the o(.) remainder."""
    _check_gain(a_hat)
    return (a_hat - ch.gain) ** 2 * fisher_x_given_y(ch, spec)


def basic_bound_rhs(ch: ChannelModel, a_hat: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """
    E[2 (6 var(X) + 4 Y^2 / a_hat^2 + 4 Y^2 / a^2) KL(P_a_hat|Y || P_a|Y)].

    Combines the pointwise KL inequality with the conditional second-moment
    bound, so it bounds absolute regret with no remainder term.
    """
    _check_gain(a_hat)
    var_x = ch.input.variance
    a2, a_hat2 = ch.gain ** 2, a_hat ** 2

    def integrand(y):
        weight = 2.0 * (6.0 * var_x + 4.0 * y * y / a_hat2 + 4.0 * y * y / a2)
        return weight * kl_posteriors(ch, a_hat, y, spec)

    return output_expectation(ch, integrand, spec)


class PointwiseCheck(NamedTuple):
    """Both sides of the per-observation KL inequality, plus the Hellinger step between them."""

    lhs: float
    rhs: float
    holds: bool
    hellinger_rhs: Optional[float] = None


def pointwise_bound_check(
    ch: ChannelModel, a_hat: float, y, spec: QuadratureSpec = DEFAULT_SPEC
) -> PointwiseCheck:
    """
    (phi_a_hat(y) - phi_a(y))^2 <= 2 (E_a_hat[X^2|y] + E_a[X^2|y]) KL.

    The inequality is exact, so holds uses only a 1e-9 additive tolerance.
    Vectorised: y may be an array, in which case every field is an array.
    """
    _check_gain(a_hat)
    post = Posterior(ch, y, spec)
    post_hat = Posterior(ch.with_gain(a_hat), y, spec)
    lhs = (post_hat.mean - post.mean) ** 2
    moments = post_hat.second_moment + post.second_moment
    rhs = 2.0 * moments * np.asarray(kl_posteriors(ch, a_hat, y, spec))
    middle = 4.0 * moments * np.asarray(hellinger_sq_posteriors(ch, a_hat, y, spec))
    holds = lhs <= rhs + POINTWISE_TOL
    if np.ndim(lhs) == 0:
        return PointwiseCheck(float(lhs), float(rhs), bool(holds), float(middle))
    return PointwiseCheck(lhs, rhs, holds, middle)


def hellinger_pointwise_rhs(ch: ChannelModel, a_hat: float, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """4 (E_a_hat[X^2|y] + E_a[X^2|y]) r^2, the Cauchy-Schwarz step before r^2 <= KL / 2."""
    return squeeze_result(pointwise_bound_check(ch, a_hat, y, spec).hellinger_rhs)


def regret_scalar(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """
    rho(a) = I(X;a|Y) / I(Y;a).

    :raises DegenerateFisherError: I(Y;a) < 1e-12
    """
    return _rho_given(ch, fisher_y(ch, spec), spec)


def _rho_given(ch: ChannelModel, output_fisher: float, spec: QuadratureSpec) -> float:
    if output_fisher < FISHER_FLOOR:
        raise DegenerateFisherError(
            f"I(Y;a) = {output_fisher:.3g} at a = {ch.gain}; regret scalar undefined"
        )
    return fisher_x_given_y(ch, spec) / output_fisher


@dataclass(frozen=True)
class TradeoffReport:
    """
    (rho + 1) I(Y;a) against the signal-to-noise ratio.

    :param a: Gain
    :param rho: Regret scalar
    :param fisher_y: Output Fisher information
    :param snr: var(X) / s2
    :param residual: (rho + 1) * fisher_y - snr
    """

    a: float
    rho: float
    fisher_y: float
    snr: float
    residual: float

    @property
    def holds(self) -> bool:
        return abs(self.residual) <= TRADEOFF_TOL


def tradeoff_residual(ch: ChannelModel, spec: QuadratureSpec = DEFAULT_SPEC) -> TradeoffReport:
    """
    Evaluate (rho(a) + 1) I(Y;a) - var(X) / s2 for a zero-mean input.

    :raises NotZeroMeanError: the prior mean is not zero
    """
    if not ch.input.zero_mean():
        raise NotZeroMeanError(
            f"The trade-off identity needs a zero-mean input, mean is {ch.input.mean!r}"
        )
    output_fisher = fisher_y(ch, spec)
    rho = _rho_given(ch, output_fisher, spec)
    snr = ch.snr()
    return TradeoffReport(
        a=ch.gain,
        rho=rho,
        fisher_y=output_fisher,
        snr=snr,
        residual=(rho + 1.0) * output_fisher - snr,
    )


@dataclass(frozen=True)
class RegretReport:
    """
    Regret of one (a, a_hat) pair next to every bound.

    :param a: True gain
    :param a_hat: Mismatched gain
    :param regret_abs: Absolute regret
    :param regret_rel: Relative regret
    :param lemma1_rhs: Weighted conditional Fisher bound on regret_abs
    :param corollary1_rhs: Uncorrelated simplification of lemma1_rhs
    :param lemma3_rhs: Conditional Fisher bound on regret_rel
    :param pointwise_checks: Number of grid observations violating the pointwise KL bound
    :param basic_rhs: Slack-free bound from the pointwise and second-moment inequalities
    :param slack: Allowance applied to the asymptotic bounds
    :param fisher_y2_corr: corr(I(X;a||Y), Y^2)
    :param regret_abs_mse_form: MSE(a_hat) - MSE(a)
    """

    a: float
    a_hat: float
    regret_abs: float
    regret_rel: float
    lemma1_rhs: float
    corollary1_rhs: float
    lemma3_rhs: float
    pointwise_checks: int
    basic_rhs: float
    slack: float
    fisher_y2_corr: float
    regret_abs_mse_form: float

    @property
    def lemma1_holds(self) -> bool:
        return self.regret_abs <= self.lemma1_rhs * (1.0 + self.slack)

    @property
    def lemma1_doubled_only(self) -> bool:
        """Regret exceeds the weighted Fisher bound but not twice it."""
        allowance = self.lemma1_rhs * (1.0 + self.slack)
        return allowance < self.regret_abs <= 2.0 * allowance

    @property
    def corollary1_holds(self) -> bool:
        return self.regret_abs <= self.corollary1_rhs * (1.0 + self.slack)

    @property
    def lemma3_holds(self) -> bool:
        return self.regret_rel <= self.lemma3_rhs * (1.0 + self.slack)

    @property
    def basic_holds(self) -> bool:
        return self.regret_abs <= self.basic_rhs + POINTWISE_TOL

    def flags(self) -> dict:
        return {
            "lemma1_holds": self.lemma1_holds,
            "lemma1_doubled_only": self.lemma1_doubled_only,
            "corollary1_holds": self.corollary1_holds,
            "lemma3_holds": self.lemma3_holds,
            "basic_holds": self.basic_holds,
            "pointwise_holds": self.pointwise_checks == 0,
        }

    def to_dict(self) -> dict:
        return {**asdict(self), **self.flags()}


def default_y_grid(ch: ChannelModel, points: int = 201) -> np.ndarray:
    """Observation grid spanning +-10 output standard deviations."""
    half = 10.0 * math.sqrt(ch.output_variance())
    return np.linspace(-half, half, points)


def regret_report(
    ch: ChannelModel,
    a_hat: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    y_grid: Optional[Sequence[float]] = None,
    slack_coefficient: float = 1.0,
) -> RegretReport:
    """Evaluate regrets, all bounds and the pointwise check for (ch.gain, a_hat)."""
    _check_gain(a_hat)
    grid = default_y_grid(ch) if y_grid is None else np.asarray(y_grid, dtype=float)
    pointwise = pointwise_bound_check(ch, a_hat, grid, spec)
    violations = int(np.count_nonzero(~np.asarray(pointwise.holds)))
    correlation = fisher_y2_correlation(ch, spec)
    report = RegretReport(
        a=ch.gain,
        a_hat=float(a_hat),
        regret_abs=absolute_regret(ch, a_hat, spec=spec),
        regret_rel=relative_regret(ch, a_hat, spec),
        lemma1_rhs=lemma1_bound_rhs(ch, a_hat, spec),
        corollary1_rhs=corollary1_bound_rhs(ch, a_hat, spec),
        lemma3_rhs=lemma3_bound_rhs(ch, a_hat, spec),
        pointwise_checks=violations,
        basic_rhs=basic_bound_rhs(ch, a_hat, spec),
        slack=slack(ch, a_hat, slack_coefficient),
        fisher_y2_corr=correlation,
        regret_abs_mse_form=absolute_regret_via_mse(ch, a_hat, spec),
    )
    if violations:
        log.warning(f"Pointwise KL bound violated at {violations} observations (a={ch.gain}, a_hat={a_hat})")
    if abs(correlation) > 0.1:
        log.warning(
            f"corr(I(X;a||Y), Y^2) = {correlation:.3f} at a={ch.gain}; "
            "uncorrelated simplification does not apply"
        )
    if report.lemma1_doubled_only:
        log.warning(
            f"Regret {report.regret_abs:.3g} exceeds the weighted Fisher bound "
            f"{report.lemma1_rhs:.3g} but not twice it (a={ch.gain}, a_hat={a_hat})"
        )
    return report
