"""Exception hierarchy shared across the package."""

from __future__ import annotations

from typing import Any


class AsianRayError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AsianRayError, ValueError):
    """An input lies outside the domain of the requested operation."""


class ConvergenceError(AsianRayError):
    """An iterative solver failed to meet its tolerance.

    Attributes:
        diagnostics: Free-form solver state (last iterate, residual, iteration count)
            useful for reporting. Serialized verbatim by the CLI in JSON mode.
    """

    def __init__(self, message: str, **diagnostics: Any) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics


class NoSignChange(ConvergenceError):
    """The root bracket does not straddle a sign change."""


class MaxIterExceeded(ConvergenceError):
    """Iteration or subdivision budget exhausted."""


class OuterBracketFailure(ConvergenceError):
    """The outer corner-slope search could not isolate an interior minimum."""


class RegimeUnsupported(AsianRayError):
    """The requested output is not defined for the contract's moneyness regime."""


class UnsupportedFamily(AsianRayError, ValueError):
    """The operation does not apply to the contract family."""


class ConfigError(AsianRayError, ValueError):
    """Inconsistent Monte Carlo configuration."""


class StatisticalFailure(AsianRayError):
    """A Monte Carlo estimate is statistically indistinguishable from zero."""


class BranchAmbiguity(UserWarning):
    """Several branch candidates satisfied the defining equations."""
