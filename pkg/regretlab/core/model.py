#!/usr/bin/env python3
"""
Input priors and the scalar gain channel Y = aX + V.

Provides:
- InputDistribution: Gaussian, Gaussian mixture or finite discrete prior
- ChannelModel: gain a > 0, noise variance, input prior
- Log likelihood, log marginal (quadrature or closed form) and sampling
- joint_nodes: the node set every posterior functional is evaluated on
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from regretlab.core.numerics import DEFAULT_SPEC, QuadratureSpec, standard_rule
from regretlab.errors import InvalidDistributionError, InvalidGainError

_LOG_2PI = math.log(2.0 * math.pi)


class PriorKind(Enum):
    """Families of input priors"""

    GAUSSIAN = "gaussian"
    GAUSSIAN_MIXTURE = "gaussian-mixture"
    DISCRETE = "discrete"


def _short(value: float) -> str:
    """Shortest text that reads back to the same float, without a trailing .0."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


@dataclass(frozen=True)
class InputDistribution:
    """
    Known prior P_X.

    Every kind is stored as a list of (weight, mean, var) components; discrete
    atoms are components with var == 0.

    :param kind: Prior family
    :param components: Tuple of (weight, mean, var)
    """

    kind: PriorKind
    components: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.components:
            raise InvalidDistributionError("A prior needs at least one component")
        weights = [w for w, _, _ in self.components]
        if any(w < 0 for w in weights):
            raise InvalidDistributionError(f"Negative weight in {weights}")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise InvalidDistributionError(
                f"Weights must sum to 1, got {math.fsum(weights)!r}"
            )
        for _, mean, var in self.components:
            if not (math.isfinite(mean) and math.isfinite(var)):
                raise InvalidDistributionError("Component parameters must be finite")
            if self.kind is PriorKind.DISCRETE:
                if var != 0.0:
                    raise InvalidDistributionError("Discrete atoms carry no variance")
            elif not var > 0:
                raise InvalidDistributionError(f"Component variance must be > 0, got {var}")
        if self.kind is PriorKind.GAUSSIAN and len(self.components) != 1:
            raise InvalidDistributionError("A Gaussian prior has exactly one component")

    @classmethod
    def gaussian(cls, mean: float = 0.0, var: float = 1.0) -> "InputDistribution":
        return cls(PriorKind.GAUSSIAN, ((1.0, float(mean), float(var)),))

    @classmethod
    def mixture(cls, components: Iterable[Tuple[float, float, float]]) -> "InputDistribution":
        """:param components: (weight, mean, var) triples"""
        return cls(
            PriorKind.GAUSSIAN_MIXTURE,
            tuple((float(w), float(m), float(v)) for w, m, v in components),
        )

    @classmethod
    def discrete(cls, atoms: Iterable[Tuple[float, float]]) -> "InputDistribution":
        """:param atoms: (prob, atom) pairs"""
        return cls(
            PriorKind.DISCRETE,
            tuple((float(p), float(x), 0.0) for p, x in atoms),
        )

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _, _ in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([m for _, m, _ in self.components])

    @property
    def variances(self) -> np.ndarray:
        return np.array([v for _, _, v in self.components])

    @property
    def is_discrete(self) -> bool:
        return self.kind is PriorKind.DISCRETE

    @property
    def mean(self) -> float:
        return math.fsum(w * m for w, m, _ in self.components)

    @property
    def second_moment(self) -> float:
        return math.fsum(w * (v + m * m) for w, m, v in self.components)

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean ** 2

    def zero_mean(self) -> bool:
        """True when sum(w_i * mu_i) vanishes to float resolution."""
        return abs(self.mean) <= 1e-12 * math.sqrt(max(self.second_moment, 1e-300))

    def support_bounds(self, tail_sigmas: float = 10.0) -> Tuple[float, float]:
        """Support truncated at tail_sigmas standard deviations per component."""
        spread = tail_sigmas * np.sqrt(self.variances)
        return float(np.min(self.means - spread)), float(np.max(self.means + spread))

    def to_dict(self) -> dict:
        if self.kind is PriorKind.DISCRETE:
            return {"kind": self.kind.value, "atoms": [[w, m] for w, m, _ in self.components]}
        if self.kind is PriorKind.GAUSSIAN:
            _, m, v = self.components[0]
            return {"kind": self.kind.value, "mean": m, "var": v}
        return {"kind": self.kind.value, "components": [list(c) for c in self.components]}

    def describe(self) -> str:
        """Spec string that parse_prior reads back to an equal prior."""
        if self.kind is PriorKind.GAUSSIAN:
            _, m, v = self.components[0]
            return f"gaussian:{_short(m)},{_short(v)}"
        if self.kind is PriorKind.DISCRETE:
            return "discrete:" + ";".join(f"{_short(w)},{_short(m)}" for w, m, _ in self.components)
        return "mixture:" + ";".join(
            f"{_short(w)},{_short(m)},{_short(v)}" for w, m, v in self.components
        )


def registered_priors() -> Dict[str, InputDistribution]:
    """Zero-mean priors every identity in the package is exercised on."""
    return {
        "unit-gaussian": InputDistribution.gaussian(0.0, 1.0),
        "bpsk": InputDistribution.discrete([(0.5, -1.0), (0.5, 1.0)]),
        "symmetric-mixture": InputDistribution.mixture([(0.5, -1.0, 0.5), (0.5, 1.0, 0.5)]),
        "skewed-discrete": InputDistribution.discrete([(1.0 / 3.0, -2.0), (2.0 / 3.0, 1.0)]),
    }


@dataclass(frozen=True)
class ChannelModel:
    """
    Scalar channel Y = aX + V with V ~ N(0, noise_var).

    :param gain: Channel gain a, strictly positive
    :param noise_var: Noise variance, strictly positive
    :param input: Input prior
    """

    gain: float
    noise_var: float
    input: InputDistribution = field(default_factory=InputDistribution.gaussian)

    def __post_init__(self):
        if not (math.isfinite(self.gain) and self.gain > 0):
            raise InvalidGainError(f"Channel gain must be > 0, got {self.gain}")
        if not (math.isfinite(self.noise_var) and self.noise_var > 0):
            raise InvalidDistributionError(f"Noise variance must be > 0, got {self.noise_var}")

    def snr(self) -> float:
        """var(X) / noise_var, independent of the gain."""
        return self.input.variance / self.noise_var

    def with_gain(self, gain: float) -> "ChannelModel":
        """Same prior and noise, different gain."""
        return replace(self, gain=float(gain))

    def output_components(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(weights, means, variances) of the Gaussian-mixture law of Y."""
        prior = self.input
        a = self.gain
        return prior.weights, a * prior.means, a * a * prior.variances + self.noise_var

    def output_variance(self) -> float:
        return self.gain ** 2 * self.input.variance + self.noise_var


@dataclass
class SampleBatch:
    """
    Paired draws (x_i, y_i) from the joint law of a channel.

    :param xs: Inputs
    :param ys: Outputs, ys[i] = a * xs[i] + v_i
    :param seed: Seed the batch was drawn from
    :param channel: Channel the batch was drawn from
    """

    xs: np.ndarray
    ys: np.ndarray
    seed: int
    channel: ChannelModel

    def __len__(self) -> int:
        return len(self.ys)


def likelihood_log(ch: ChannelModel, y, x):
    """ln f_a(y | x) = -(y - a x)^2 / (2 s2) - ln(2 pi s2) / 2, vectorised."""
    resid = np.asarray(y, dtype=float) - ch.gain * np.asarray(x, dtype=float)
    return -0.5 * resid * resid / ch.noise_var - 0.5 * (_LOG_2PI + math.log(ch.noise_var))


def joint_nodes(ch: ChannelModel, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """
    Node set for integrals against f_a(y | x) dP_X(x).

    Returns (x, log_w) with trailing node axis such that for any g,
    sum(exp(log_w) * g(x), axis=-1) ~= integral of g(x) f_a(y|x) dP_X(x).

    Discrete priors use their atoms, so the sums are exact. Each continuous
    component uses a node rule centred on its own posterior location and scale
    at y, where the integrand concentrates.

    :param ch: Channel
    :param y: Observation(s), any shape S
    :param spec: Quadrature settings
    :return: (x, log_w), both of shape S + (m,)
    """
    y = np.asarray(y, dtype=float)
    prior = ch.input
    log_prior_w = np.log(prior.weights)

    if prior.is_discrete:
        atoms = prior.means
        x = np.broadcast_to(atoms, y.shape + atoms.shape)
        log_w = log_prior_w + likelihood_log(ch, y[..., None], x)
        return x, log_w

    a, s2 = ch.gain, ch.noise_var
    mu, var = prior.means, prior.variances
    post_var = 1.0 / (1.0 / var + a * a / s2)
    post_sd = np.sqrt(post_var)
    # shape S + (K,)
    post_mean = post_var * (mu / var + a * y[..., None] / s2)

    t, w = standard_rule(spec)
    x = post_mean[..., None] + post_sd[:, None] * t
    log_prior = -0.5 * (x - mu[:, None]) ** 2 / var[:, None] - 0.5 * (
        _LOG_2PI + np.log(var[:, None])
    )
    log_rule = -0.5 * t * t - 0.5 * _LOG_2PI - np.log(post_sd)[:, None]
    log_w = (
        log_prior_w[:, None]
        + np.log(w)
        + log_prior
        + likelihood_log(ch, y[..., None, None], x)
        - log_rule
    )
    shape = y.shape + (x.shape[-2] * x.shape[-1],)
    return x.reshape(shape), log_w.reshape(shape)


def marginal_log(ch: ChannelModel, y, spec: QuadratureSpec = DEFAULT_SPEC):
    """
    ln f_a(y) by quadrature (continuous priors) or exact sum over atoms.

    :param ch: Channel
    :param y: Observation(s)
    :param spec: Quadrature settings
    :return: Log marginal density, same shape as y
    """
    _, log_w = joint_nodes(ch, y, spec)
    result = logsumexp(log_w, axis=-1)
    return float(result) if np.ndim(result) == 0 else result


def marginal_log_closed_form(ch: ChannelModel, y):
    """ln f_a(y) from the exact Gaussian-mixture law of Y."""
    y = np.asarray(y, dtype=float)
    w, m, v = ch.output_components()
    log_terms = (
        np.log(w)
        - 0.5 * (y[..., None] - m) ** 2 / v
        - 0.5 * (_LOG_2PI + np.log(v))
    )
    result = logsumexp(log_terms, axis=-1)
    return float(result) if np.ndim(result) == 0 else result


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """
    Independent PCG64 generator for (seed, index).

    Substreams depend only on their key, so Monte Carlo trials give the same
    draws whatever order or thread they run in.
    """
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))
    )


def draw(ch: ChannelModel, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw n (x, y) pairs from the joint law of ch."""
    prior = ch.input
    k = rng.choice(len(prior.components), size=n, p=prior.weights)
    xs = prior.means[k]
    if not prior.is_discrete:
        xs = xs + np.sqrt(prior.variances[k]) * rng.standard_normal(n)
    ys = ch.gain * xs + math.sqrt(ch.noise_var) * rng.standard_normal(n)
    return xs, ys


def sample(ch: ChannelModel, n: int, seed: int, index: Optional[int] = None) -> SampleBatch:
    """
    Deterministic batch of n i.i.d. pairs.

    :param ch: Channel
    :param n: Batch size, >= 1
    :param seed: Base seed
    :param index: Optional substream index (trial number)
    :return: SampleBatch
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    xs, ys = draw(ch, n, substream(seed, index or 0))
    return SampleBatch(xs=xs, ys=ys, seed=int(seed), channel=ch)


def derive_seed(seed: int, index: int) -> int:
    """Child seed for row index, so per-row Monte Carlo streams never overlap."""
    state = np.random.SeedSequence(int(seed), spawn_key=(int(index),)).generate_state(1, dtype=np.uint64)
    return int(state[0])
