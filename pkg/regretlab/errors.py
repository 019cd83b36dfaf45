#!/usr/bin/env python3
"""
Exception hierarchy for regretlab.

Every error raised on purpose by the library derives from RegretLabError so
callers (the harness in particular) can turn it into a row-level error column.
"""

from typing import List, Optional


class RegretLabError(Exception):
    """Base class for all regretlab errors."""


class NonFiniteError(RegretLabError):
    """An integrand or objective returned NaN or an infinity."""


class NoConvergenceError(RegretLabError):
    """Adaptive quadrature exhausted its subdivisions without meeting tolerance."""


class BadBracketError(RegretLabError):
    """A search interval with lo >= hi."""


class InvalidGainError(RegretLabError):
    """A channel gain that is not strictly positive."""


class InvalidDistributionError(RegretLabError):
    """An input distribution that violates its invariants."""


class NotZeroMeanError(RegretLabError):
    """An identity that only holds for zero-mean inputs was requested for another prior."""


class DegeneratePriorError(RegretLabError):
    """The prior has zero variance."""


class DegenerateFisherError(RegretLabError):
    """Output Fisher information too small for a meaningful ratio."""


class DegenerateSampleError(RegretLabError):
    """
    A sample too degenerate to estimate from: moment matching gave a non-positive gain, or a spread is zero.

    :param message: Error message
    :param clamped_value: The value the estimator would have returned (0.0)
    """

    def __init__(self, message: str, clamped_value: float = 0.0):
        super().__init__(message)
        self.clamped_value = clamped_value


class MinimumAtBoundaryError(RegretLabError):
    """
    Numerical MLE ended on the edge of its bracket.

    :param message: Error message
    :param boundary: The bracket edge that was hit
    """

    def __init__(self, message: str, boundary: Optional[float] = None):
        super().__init__(message)
        self.boundary = boundary


class ConfigInvalidError(RegretLabError):
    """
    Experiment configuration failed validation.

    :param diagnostics: One message per offending field
    """

    def __init__(self, diagnostics: List[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("Invalid experiment config: " + "; ".join(self.diagnostics))
