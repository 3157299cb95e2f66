"""Errors raised by the timely_coding package."""

from __future__ import annotations

from typing import Any


class TimelyCodingError(Exception):
    """Base class for timely_coding errors."""


class InvalidParameterError(TimelyCodingError, ValueError):
    """Raised when an argument violates a documented precondition."""


class PmfValidationError(InvalidParameterError):
    """Raised when a probability vector is not a valid ordered pmf."""


class SpecialFunctionError(TimelyCodingError):
    """Raised when a special function evaluation fails to converge."""


class SolverError(TimelyCodingError):
    """Raised when the codebook solver does not converge."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        """Store solver diagnostics next to the message."""
        super().__init__(message)
        self.diagnostics: dict[str, Any] = dict(diagnostics or {})


class SearchError(TimelyCodingError):
    """Raised when a parameter search has no usable point."""
