"""Principal branch of the Lambert W function on the non-negative reals.

Halley's iteration, vectorized over numpy arrays. Initial guesses: ``y`` below
1, ``ln y - ln ln y`` from e upward, and a straight line between W(1) and
W(e) = 1 in between.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numpy.typing import ArrayLike

from .const import (
    LAMBERT_W_LOG_SWITCH,
    LAMBERT_W_MAX_ITERATIONS,
    LAMBERT_W_RESIDUAL_TOLERANCE,
)
from .exceptions import InvalidParameterError, SpecialFunctionError

OMEGA = 0.5671432904097838  # W(1)
_STEP_TOLERANCE = 4.0 * np.finfo(float).eps


@dataclass(frozen=True)
class WEvalReport:
    """One evaluation of W0 with its convergence record."""

    argument: float
    value: float
    iterations: int
    residual: float


def _initial_guess(y: np.ndarray) -> np.ndarray:
    guess = np.array(y, dtype=float)
    mid = (y >= 1.0) & (y < math.e)
    guess[mid] = OMEGA + (1.0 - OMEGA) * (y[mid] - 1.0) / (math.e - 1.0)
    big = y >= math.e
    log_y = np.log(y[big])
    guess[big] = log_y - np.log(log_y)
    return guess


def _halley(y: np.ndarray) -> tuple[np.ndarray, int]:
    w = _initial_guess(y)
    for iteration in range(1, LAMBERT_W_MAX_ITERATIONS + 1):
        ew = np.exp(w)
        f = w * ew - y
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w = w - step
        if np.all(np.abs(step) <= _STEP_TOLERANCE * (1.0 + np.abs(w))):
            return w, iteration
    raise SpecialFunctionError(
        f"Lambert W did not converge in {LAMBERT_W_MAX_ITERATIONS} iterations"
    )


def _as_domain_array(y: ArrayLike) -> np.ndarray:
    values = np.asarray(y, dtype=float)
    if np.any(np.isnan(values)) or np.any(np.isinf(values)):
        raise InvalidParameterError("Lambert W needs finite arguments")
    if np.any(values < 0):
        raise InvalidParameterError(
            "Lambert W is only supported for y >= 0 (principal branch)"
        )
    return values


def lambert_w0(y: ArrayLike) -> float | np.ndarray:
    """Return x >= 0 with x * exp(x) = y, for scalar or array y >= 0."""
    values = _as_domain_array(y)
    flat = np.atleast_1d(values).ravel()
    w, _ = _halley(flat)
    w = np.maximum(w, 0.0)
    if values.ndim == 0:
        return float(w[0])
    return w.reshape(values.shape)


def lambert_w0_report(y: float) -> WEvalReport:
    """Evaluate W0 at a scalar and report iterations and residual."""
    values = _as_domain_array(y)
    if values.ndim != 0:
        raise InvalidParameterError("lambert_w0_report takes a scalar argument")
    w, iterations = _halley(np.atleast_1d(values))
    value = max(float(w[0]), 0.0)
    residual = value * math.exp(value) - float(values)
    if abs(residual) > LAMBERT_W_RESIDUAL_TOLERANCE * max(1.0, float(values)):
        raise SpecialFunctionError(
            f"Lambert W residual {residual!r} too large at y={float(values)!r}"
        )
    return WEvalReport(
        argument=float(values),
        value=value,
        iterations=iterations,
        residual=residual,
    )


def lambert_w0_exp(log_y: ArrayLike) -> float | np.ndarray:
    """Return W0(exp(log_y)) without forming exp(log_y) for large exponents."""
    s = np.asarray(log_y, dtype=float)
    if np.any(np.isnan(s)) or np.any(np.isposinf(s)):
        raise InvalidParameterError("lambert_w0_exp needs finite exponents")
    flat = np.atleast_1d(s).ravel()
    w = np.empty_like(flat)

    small = flat <= LAMBERT_W_LOG_SWITCH
    if np.any(small):
        w[small], _ = _halley(np.exp(flat[small]))
    large = ~small
    if np.any(large):
        # Newton on w + ln(w) = s, converges from s - ln(s) in a few steps
        t = flat[large]
        guess = t - np.log(t)
        for _ in range(LAMBERT_W_MAX_ITERATIONS):
            step = (guess + np.log(guess) - t) * guess / (guess + 1.0)
            guess = guess - step
            if np.all(np.abs(step) <= _STEP_TOLERANCE * guess):
                break
        else:
            raise SpecialFunctionError("Lambert W (log form) did not converge")
        w[large] = guess

    w = np.maximum(w, 0.0)
    if s.ndim == 0:
        return float(w[0])
    return w.reshape(s.shape)
