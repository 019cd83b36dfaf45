#!/usr/bin/env python3
"""
Deterministic numerical primitives shared by every other module.

Provides:
- Adaptive Simpson and fixed-order Gauss-Legendre integration over a finite window
- Gaussian-weighted node rules for vectorised expectations
- Bounded scalar minimisation
- Central finite differences

All functions are pure and safe to call from any number of threads.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterator, Tuple

import numpy as np
from scipy import optimize

from regretlab.errors import BadBracketError, NoConvergenceError, NonFiniteError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_INITIAL_PANELS = 16


class QuadratureMethod(Enum):
    """Quadrature rules understood by integrate and gaussian_nodes"""

    ADAPTIVE_SIMPSON = "adaptive-simpson"
    GAUSS_HERMITE = "gauss-hermite"


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Tolerances and rule selection for every integral in the package.

    :param method: Quadrature rule
    :param rel_tol: Relative tolerance for adaptive Simpson
    :param abs_tol: Absolute tolerance for adaptive Simpson
    :param max_subdivisions: Maximum refinement depth for adaptive Simpson
    :param gh_order: Number of Gauss-Hermite nodes; integrate uses twice as many Gauss-Legendre nodes
    :param tail_sigmas: Half-width of the integration window in units of scale
    """

    method: QuadratureMethod = QuadratureMethod.GAUSS_HERMITE
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 60
    gh_order: int = 128
    tail_sigmas: float = 10.0

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, "method", QuadratureMethod(self.method))
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.gh_order < 2:
            raise ValueError(f"gh_order must be >= 2, got {self.gh_order}")
        if self.tail_sigmas < 4:
            raise ValueError(f"tail_sigmas must be >= 4, got {self.tail_sigmas}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_subdivisions": self.max_subdivisions,
            "gh_order": self.gh_order,
            "tail_sigmas": self.tail_sigmas,
        }


DEFAULT_SPEC = QuadratureSpec()


def _checked(values, where: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"Non-finite value encountered in {where}")
    return values


@lru_cache(maxsize=32)
def _hermite_standard(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes/weights with sum(w * g(t)) ~= E[g(T)], T ~ N(0, 1)."""
    t, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / math.sqrt(2.0 * math.pi)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


@lru_cache(maxsize=32)
def _legendre_window(order: int, tail_sigmas: float) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule for the integral over [-tail_sigmas, tail_sigmas]."""
    x, w = np.polynomial.legendre.leggauss(max(2, 2 * order // _INITIAL_PANELS))
    edges = np.linspace(-tail_sigmas, tail_sigmas, _INITIAL_PANELS + 1)
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    t = (mid + half * x).ravel()
    w = (half * w).ravel()
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def _simpson_panels(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    rel_tol: float,
    abs_tol: float,
    max_depth: int,
) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """
    Vectorised adaptive Simpson refinement.

    Yields (left, right, value) arrays for every accepted panel, value being the
    Richardson-corrected Simpson estimate on that panel.
    """
    edges = np.linspace(lo, hi, _INITIAL_PANELS + 1)
    a, b = edges[:-1], edges[1:]
    m = 0.5 * (a + b)
    fa = _checked(f(a), "adaptive-simpson")
    fm = _checked(f(m), "adaptive-simpson")
    fb = _checked(f(b), "adaptive-simpson")
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    accepted = 0.0
    width = hi - lo

    for _ in range(max_depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = _checked(f(lm), "adaptive-simpson")
        frm = _checked(f(rm), "adaptive-simpson")
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole

        estimate = accepted + float(np.sum(left + right))
        budget = max(abs_tol, rel_tol * abs(estimate)) * (b - a) / width
        done = np.abs(err) <= 15.0 * budget
        if np.any(done):
            value = left[done] + right[done] + err[done] / 15.0
            accepted += float(np.sum(value))
            yield a[done], b[done], value

        todo = ~done
        if not np.any(todo):
            return
        # split every unresolved panel into its two halves
        a = np.concatenate([a[todo], m[todo]])
        b = np.concatenate([m[todo], b[todo]])
        fa_next = np.concatenate([fa[todo], fm[todo]])
        fb_next = np.concatenate([fm[todo], fb[todo]])
        fm = np.concatenate([flm[todo], frm[todo]])
        whole = np.concatenate([left[todo], right[todo]])
        fa, fb = fa_next, fb_next
        m = 0.5 * (a + b)

    raise NoConvergenceError(
        f"Adaptive Simpson did not converge in {max_depth} subdivisions on [{lo}, {hi}]"
    )


@lru_cache(maxsize=32)
def _simpson_standard(
    rel_tol: float, abs_tol: float, max_depth: int, tail_sigmas: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite Simpson rule for E[g(T)], T ~ N(0, 1), truncated at +-tail_sigmas.

    The partition is refined against phi(t) * (1 + t**4) so that moments up to
    fourth order are resolved at the requested tolerance.
    """

    def weight(t):
        return np.exp(-0.5 * t * t - _LOG_SQRT_2PI) * (1.0 + t ** 4)

    lefts, rights = [], []
    for a, b, _ in _simpson_panels(
        weight, -tail_sigmas, tail_sigmas, rel_tol, abs_tol, max_depth
    ):
        lefts.append(a)
        rights.append(b)
    a = np.concatenate(lefts)
    b = np.concatenate(rights)
    points = np.concatenate([a, 0.5 * (a + b), b])
    coeffs = np.concatenate([(b - a) / 6.0, 4.0 * (b - a) / 6.0, (b - a) / 6.0])
    t, inverse = np.unique(points, return_inverse=True)
    w = np.zeros_like(t)
    np.add.at(w, inverse, coeffs)
    w = w * np.exp(-0.5 * t * t - _LOG_SQRT_2PI)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def standard_rule(spec: QuadratureSpec = DEFAULT_SPEC) -> Tuple[np.ndarray, np.ndarray]:
    """
    Node rule for expectations under the standard normal.

    :param spec: Quadrature settings
    :return: (t, w) with sum(w * g(t)) ~= E[g(T)], T ~ N(0, 1)
    """
    if spec.method is QuadratureMethod.GAUSS_HERMITE:
        return _hermite_standard(spec.gh_order)
    return _simpson_standard(
        spec.rel_tol, spec.abs_tol, spec.max_subdivisions, spec.tail_sigmas
    )


def gaussian_nodes(
    center, scale, spec: QuadratureSpec = DEFAULT_SPEC
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights for expectations under N(center, scale**2).

    center and scale broadcast against each other; the rule adds a trailing axis.

    :param center: Location(s)
    :param scale: Standard deviation(s), positive
    :param spec: Quadrature settings
    :return: (nodes, weights), nodes of shape broadcast(center, scale) + (m,)
    """
    t, w = standard_rule(spec)
    center = np.asarray(center, dtype=float)[..., None]
    scale = np.asarray(scale, dtype=float)[..., None]
    nodes = center + scale * t
    weights = np.broadcast_to(w, nodes.shape)
    return nodes, weights


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    center: float,
    scale: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """
    Integrate f over [center - tail_sigmas*scale, center + tail_sigmas*scale].

    f must accept and return numpy arrays. The fixed-order method covers the
    window with 16 Gauss-Legendre panels, 2 * gh_order nodes in total, and
    one panel edge at center; adaptive-simpson refines to rel_tol/abs_tol.

    :param f: Vectorised integrand
    :param center: Window centre
    :param scale: Window scale, positive
    :param spec: Quadrature settings
    :return: Integral estimate
    :raises NonFiniteError: f returned NaN or an infinity at a node
    :raises NoConvergenceError: adaptive refinement exhausted
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")

    if spec.method is QuadratureMethod.GAUSS_HERMITE:
        t, w = _legendre_window(spec.gh_order, spec.tail_sigmas)
        values = _checked(f(center + scale * t), "gauss-hermite")
        return float(scale * np.sum(w * values))

    lo = center - spec.tail_sigmas * scale
    hi = center + spec.tail_sigmas * scale
    total = 0.0
    for _, _, value in _simpson_panels(
        f, lo, hi, spec.rel_tol, spec.abs_tol, spec.max_subdivisions
    ):
        total += float(np.sum(value))
    return total


def minimize_scalar(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-8
) -> Tuple[float, float]:
    """
    Bounded minimisation of a unimodal function.

    :param f: Objective
    :param lo: Lower end of the bracket
    :param hi: Upper end of the bracket
    :param tol: Absolute tolerance on the minimiser
    :return: (argmin, min)
    :raises BadBracketError: lo >= hi
    """
    if not lo < hi:
        raise BadBracketError(f"Bad bracket [{lo}, {hi}]")
    result = optimize.minimize_scalar(
        f, bounds=(lo, hi), method="bounded", options={"xatol": tol}
    )
    x = float(result.x)
    value = float(result.fun)
    if not math.isfinite(value):
        raise NonFiniteError(f"Objective is not finite at its minimiser {x}")
    return x, value


def fd_derivative(f: Callable[[float], float], x: float, h: float = 1e-5) -> float:
    """
    Central finite difference (f(x+h) - f(x-h)) / (2h).

    :raises NonFiniteError: f is not finite at x +- h
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    upper = f(x + h)
    lower = f(x - h)
    if not (math.isfinite(upper) and math.isfinite(lower)):
        raise NonFiniteError(f"Non-finite value near x={x}")
    return (upper - lower) / (2.0 * h)


@dataclass(frozen=True)
class MonteCarloEstimate:
    """
    Sample mean with its standard error.

    :param value: Sample mean
    :param stderr: Standard error of the mean
    :param n: Number of samples
    """

    value: float
    stderr: float
    n: int

    @classmethod
    def from_samples(cls, samples) -> "MonteCarloEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n == 0:
            return cls(float("nan"), float("nan"), 0)
        stderr = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(np.mean(samples)), stderr, int(n))

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        """|value - target| <= sigmas * stderr."""
        return abs(self.value - target) <= sigmas * self.stderr
