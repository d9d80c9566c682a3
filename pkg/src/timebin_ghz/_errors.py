"""
Exception hierarchy for timebin-ghz.

Every error raised on purpose by the package derives from
``TimebinGHZError``; argument and domain errors also derive from
``ValueError`` so callers that only know the builtin still catch them.
"""

from __future__ import annotations

from typing import Any, Mapping

__all__ = [
    "TimebinGHZError",
    "InvalidArgumentError",
    "ConfigError",
    "NumericError",
    "DomainError",
    "FitError",
    "EstimationError",
]


class TimebinGHZError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(TimebinGHZError, ValueError):
    """An argument is outside the range an operation accepts."""


class ConfigError(TimebinGHZError):
    """A scenario, timing or preset configuration is malformed or inconsistent."""


class NumericError(TimebinGHZError):
    """A numerical routine (integration, quadrature) failed to converge."""

    def __init__(self, message: str, diagnostics: Mapping[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DomainError(NumericError, ValueError):
    """A closed-form expression was evaluated outside its domain of validity."""


class FitError(TimebinGHZError):
    """A least-squares fit is degenerate or did not converge."""

    def __init__(self, message: str, diagnostics: Mapping[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class EstimationError(TimebinGHZError):
    """A Monte Carlo estimate could not be formed (e.g. no accepted shots)."""
