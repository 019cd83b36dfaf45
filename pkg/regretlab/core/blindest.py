#!/usr/bin/env python3
"""
Blind channel-gain estimation from past outputs.

Provides:
- GainEstimator: moment matching or numerical maximum likelihood
- estimate_gain on a batch of outputs
- crb and the expected-regret bounds for efficient estimators
- expected_regret_mc / efficiency_report: seeded Monte Carlo over trials
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, List, Optional, Tuple

import numpy as np
from decologr import Logger as log

from regretlab.core.information import fisher_y
from regretlab.core.model import ChannelModel, InputDistribution, draw, marginal_log_closed_form, substream
from regretlab.core.numerics import DEFAULT_SPEC, MonteCarloEstimate, QuadratureSpec, minimize_scalar
from regretlab.core.regret import FISHER_FLOOR, absolute_regret, regret_scalar, relative_regret, weighted_fisher
from regretlab.errors import (
    DegenerateFisherError,
    DegenerateSampleError,
    MinimumAtBoundaryError,
    NotZeroMeanError,
)

if TYPE_CHECKING:
    from regretlab.harness.worker_pool import WorkerPool

# fraction of the log-bracket treated as "on the edge"
_EDGE_FRACTION = 1e-6


class EstimatorKind(Enum):
    """Blind gain estimators"""

    MOMENT_MATCHING = "moment-matching"
    NUMERICAL_MLE = "numerical-mle"


@dataclass(frozen=True)
class GainEstimator:
    """
    A_n(Y^{n-1}): maps past outputs to a gain estimate.

    :param kind: Estimator family
    :param bracket: (lo, hi) search interval for the MLE, 0 < lo < hi
    :param tol: Tolerance on the MLE, relative to the gain
    """

    kind: EstimatorKind = EstimatorKind.NUMERICAL_MLE
    bracket: Tuple[float, float] = (1e-3, 1e3)
    tol: float = 1e-8

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", EstimatorKind(self.kind))
        lo, hi = self.bracket
        if not 0 < lo < hi:
            raise ValueError(f"bracket must satisfy 0 < lo < hi, got {self.bracket}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")

    @classmethod
    def around(cls, kind: EstimatorKind, a_ref: float, tol: float = 1e-8) -> "GainEstimator":
        """Bracket (1e-3 a_ref, 1e3 a_ref)."""
        return cls(kind=kind, bracket=(1e-3 * a_ref, 1e3 * a_ref), tol=tol)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "bracket": list(self.bracket), "tol": self.tol}


def _moment_matching(prior: InputDistribution, noise_var: float, ys: np.ndarray) -> float:
    if not prior.zero_mean():
        raise NotZeroMeanError("Moment matching needs a zero-mean prior")
    excess = float(np.mean(ys * ys)) - noise_var
    if excess <= 0:
        raise DegenerateSampleError(
            f"mean(Y^2) does not exceed the noise variance by a positive margin ({excess:.3g})",
            clamped_value=0.0,
        )
    return math.sqrt(excess / prior.variance)


def _numerical_mle(
    est: GainEstimator, prior: InputDistribution, noise_var: float, ys: np.ndarray
) -> float:
    lo, hi = (math.log(b) for b in est.bracket)

    def negative_log_likelihood(log_gain: float) -> float:
        ch = ChannelModel(math.exp(log_gain), noise_var, prior)
        return -float(np.sum(marginal_log_closed_form(ch, ys)))

    # searched over ln a, so tol is relative to the gain
    log_gain, _ = minimize_scalar(negative_log_likelihood, lo, hi, est.tol)
    edge = max(10.0 * est.tol, _EDGE_FRACTION * (hi - lo))
    if log_gain - lo <= edge or hi - log_gain <= edge:
        boundary = est.bracket[0] if log_gain - lo <= edge else est.bracket[1]
        raise MinimumAtBoundaryError(
            f"Likelihood maximiser {math.exp(log_gain):.6g} sits on the bracket edge {boundary}",
            boundary=boundary,
        )
    return math.exp(log_gain)


def estimate_gain(
    est: GainEstimator, prior: InputDistribution, noise_var: float, ys
) -> float:
    """
    Estimate the gain from outputs ys.

    :param est: Estimator
    :param prior: Known input prior
    :param noise_var: Known noise variance
    :param ys: At least two outputs
    :return: Strictly positive gain estimate
    :raises DegenerateSampleError: moment matching found mean(Y^2) <= noise_var
    :raises MinimumAtBoundaryError: the MLE hit the bracket
    """
    ys = np.asarray(ys, dtype=float)
    if ys.size < 2:
        raise ValueError(f"Need at least 2 outputs, got {ys.size}")
    if est.kind is EstimatorKind.MOMENT_MATCHING:
        return _moment_matching(prior, noise_var, ys)
    return _numerical_mle(est, prior, noise_var, ys)


def _check_n(n: int):
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")


def crb(ch: ChannelModel, n: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """
    1 / ((n - 1) I(Y;a)), by additivity over the n - 1 past outputs.

    :raises DegenerateFisherError: I(Y;a) < 1e-12
    """
    _check_n(n)
    output_fisher = fisher_y(ch, spec)
    if output_fisher < FISHER_FLOOR:
        raise DegenerateFisherError(f"I(Y;a) = {output_fisher:.3g} at a = {ch.gain}")
    return 1.0 / ((n - 1) * output_fisher)


def lemma2_bound_rhs(ch: ChannelModel, n: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """E[(6 var(X) + 8 Y^2 / a^2) I(X;a||Y)] * crb(ch, n)."""
    return weighted_fisher(ch, spec) * crb(ch, n, spec)


def lemma4_rregret_bound_rhs(ch: ChannelModel, n: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """rho(a) / (n - 1)."""
    _check_n(n)
    return regret_scalar(ch, spec) / (n - 1)


@dataclass
class TrialResult:
    """One Monte Carlo trial: the estimate and, when requested, its regrets."""

    index: int
    a_hat: Optional[float] = None
    regret_abs: Optional[float] = None
    regret_rel: Optional[float] = None
    degenerate: Optional[str] = None


def _run_trial(
    ch: ChannelModel,
    est: GainEstimator,
    n: int,
    seed: int,
    index: int,
    with_regret: bool,
    spec: QuadratureSpec,
) -> TrialResult:
    _, ys = draw(ch, n - 1, substream(seed, index))
    try:
        a_hat = estimate_gain(est, ch.input, ch.noise_var, ys)
    except (DegenerateSampleError, MinimumAtBoundaryError) as ex:
        return TrialResult(index=index, degenerate=str(ex))
    if not with_regret:
        return TrialResult(index=index, a_hat=a_hat)
    return TrialResult(
        index=index,
        a_hat=a_hat,
        regret_abs=absolute_regret(ch, a_hat, spec=spec),
        regret_rel=relative_regret(ch, a_hat, spec),
    )


def _run_trials(
    ch: ChannelModel,
    est: GainEstimator,
    n: int,
    trials: int,
    seed: int,
    with_regret: bool,
    spec: QuadratureSpec,
    pool: Optional["WorkerPool"],
) -> List[TrialResult]:
    _check_n(n)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    def one(index: int) -> TrialResult:
        return _run_trial(ch, est, n, seed, index, with_regret, spec)

    if pool is None:
        results = [one(t) for t in range(trials)]
    else:
        results = []
        for outcome in pool.map(one, list(range(trials))):
            if not outcome.ok:
                raise outcome.error
            results.append(outcome.value)

    degenerate = [r for r in results if r.degenerate]
    if degenerate:
        log.warning(
            f"{len(degenerate)} of {trials} trials excluded (a={ch.gain}, n={n}): {degenerate[0].degenerate}"
        )
    return results


@dataclass
class ExpectedRegret:
    """
    Monte Carlo expected regret of a blind estimator.

    :param n: Block length; each trial uses n - 1 past outputs
    :param trials: Trials run
    :param degenerate_trials: Trials excluded because the estimator failed
    :param regret_abs: E[R(A_n, a)]
    :param regret_rel: E[relative regret]
    :param gain_estimates: The non-degenerate estimates, in trial order
    """

    n: int
    trials: int
    degenerate_trials: int
    regret_abs: MonteCarloEstimate
    regret_rel: MonteCarloEstimate
    gain_estimates: np.ndarray = field(repr=False)


def expected_regret_mc(
    ch: ChannelModel,
    est: GainEstimator,
    n: int,
    trials: int,
    seed: int = 0,
    spec: QuadratureSpec = DEFAULT_SPEC,
    pool: Optional["WorkerPool"] = None,
) -> ExpectedRegret:
    """
    Average absolute and relative regret of the estimator over seeded trials.

    Trial t draws its n - 1 outputs from substream (seed, t), so the result is
    the same with or without a pool.

    :param ch: True channel
    :param est: Gain estimator
    :param n: Block length, >= 2
    :param trials: Number of trials, >= 1
    :param seed: Base seed
    :param spec: Quadrature settings for the regret integrals
    :param pool: Optional WorkerPool to spread trials over
    """
    results = _run_trials(ch, est, n, trials, seed, True, spec, pool)
    kept = [r for r in results if r.degenerate is None]
    return ExpectedRegret(
        n=n,
        trials=trials,
        degenerate_trials=len(results) - len(kept),
        regret_abs=MonteCarloEstimate.from_samples([r.regret_abs for r in kept]),
        regret_rel=MonteCarloEstimate.from_samples([r.regret_rel for r in kept]),
        gain_estimates=np.array([r.a_hat for r in kept]),
    )


@dataclass
class EfficiencyReport:
    """
    Spread of a gain estimator against the Cramer-Rao bound.

    :param n: Block length
    :param trials: Trials run
    :param degenerate_trials: Trials excluded
    :param mean_estimate: Sample mean of a_hat
    :param empirical_var: Sample variance of a_hat
    :param crb: 1 / ((n - 1) I(Y;a))
    :param efficiency_ratio: crb / empirical_var
    :param empirical_bias: mean_estimate - a
    :param bias_stderr: Standard error of the bias
    """

    n: int
    trials: int
    degenerate_trials: int
    mean_estimate: float
    empirical_var: float
    crb: float
    efficiency_ratio: float
    empirical_bias: float
    bias_stderr: float

    @property
    def unbiased(self) -> bool:
        """|bias| within three standard errors."""
        return abs(self.empirical_bias) <= 3.0 * self.bias_stderr

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "degenerate_trials": self.degenerate_trials,
            "mean_estimate": self.mean_estimate,
            "empirical_var": self.empirical_var,
            "crb": self.crb,
            "efficiency_ratio": self.efficiency_ratio,
            "empirical_bias": self.empirical_bias,
            "bias_stderr": self.bias_stderr,
            "unbiased": self.unbiased,
        }


def efficiency_from_estimates(
    ch: ChannelModel,
    n: int,
    trials: int,
    estimates,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> EfficiencyReport:
    """
    Compare the spread of gain estimates with crb(ch, n).

    :param estimates: Non-degenerate estimates from `trials` trials
    :raises DegenerateSampleError: fewer than two usable estimates, or all equal
    """
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size < 2:
        raise DegenerateSampleError(
            f"Only {estimates.size} usable trials out of {trials}; efficiency undefined"
        )
    bound = crb(ch, n, spec)
    spread = MonteCarloEstimate.from_samples(estimates)
    variance = float(np.var(estimates, ddof=1))
    if not variance > 0:
        raise DegenerateSampleError(
            f"All {estimates.size} estimates are identical; efficiency ratio undefined"
        )
    report = EfficiencyReport(
        n=n,
        trials=trials,
        degenerate_trials=trials - estimates.size,
        mean_estimate=spread.value,
        empirical_var=variance,
        crb=bound,
        efficiency_ratio=bound / variance,
        empirical_bias=spread.value - ch.gain,
        bias_stderr=spread.stderr,
    )
    log.debug(
        f"Efficiency at a={ch.gain}, n={n}: var/crb = {variance / bound:.4f}, bias = {report.empirical_bias:.3g}"
    )
    return report


def efficiency_report(
    ch: ChannelModel,
    est: GainEstimator,
    n: int,
    trials: int,
    seed: int = 0,
    spec: QuadratureSpec = DEFAULT_SPEC,
    pool: Optional["WorkerPool"] = None,
) -> EfficiencyReport:
    """Run the estimator on seeded trials and compare its variance with crb(ch, n)."""
    results = _run_trials(ch, est, n, trials, seed, False, spec, pool)
    estimates = [r.a_hat for r in results if r.degenerate is None]
    return efficiency_from_estimates(ch, n, trials, estimates, spec)
