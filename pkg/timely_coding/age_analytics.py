"""Closed-form average age for the selective encoding policies.

Every policy reduces to the renewal form

    age = E[Y^2] / (2 E[Y]) + E[S],    Y = S + W,

with S the codeword length of a successful update and W the waiting time
until the next successful arrival. The evaluators take moments, not pmfs, so
they score solver output, Shannon baselines and grid candidates alike.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
import math

import numpy as np

from .const import Policy
from .exceptions import InvalidParameterError
from .pmf import (
    Pmf,
    conditional_randomized,
    conditional_topk,
    pmf_with_empty,
    prefix_mass,
    randomized_mass,
)


@dataclass(frozen=True)
class LengthMoments:
    """First and second moments of the codeword length, in bits and bits^2."""

    mean: float
    second: float

    def __post_init__(self) -> None:
        """Validate moment feasibility."""
        if self.mean < 0 or self.second < 0:
            raise InvalidParameterError("Length moments must be non-negative")
        # Jensen, with slack for rounding in the sums
        if self.second < self.mean**2 * (1.0 - 1e-12) - 1e-300:
            raise InvalidParameterError(
                f"E[L^2]={self.second!r} below E[L]^2={self.mean**2!r}"
            )


@dataclass(frozen=True)
class WaitingMoments:
    """First and second moments of the waiting time W."""

    mean: float
    second: float

    def __post_init__(self) -> None:
        """Validate moment feasibility."""
        if not self.mean > 0 or not self.second > 0:
            raise InvalidParameterError("Waiting-time moments must be positive")
        if self.second < self.mean**2 * (1.0 - 1e-12):
            raise InvalidParameterError("E[W^2] must be at least E[W]^2")


@dataclass(frozen=True)
class CycleMoments:
    """First and second moments of the update cycle Y = S + W."""

    mean: float
    second: float


def length_moments(lengths: Sequence[float] | np.ndarray, pmf: Pmf) -> LengthMoments:
    """Return E[L] and E[L^2] of ``lengths`` under ``pmf``."""
    values = np.asarray(lengths, dtype=float)
    if values.shape != pmf.probs.shape:
        raise InvalidParameterError(
            f"{values.size} lengths for a pmf of size {pmf.n}"
        )
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InvalidParameterError("Codeword lengths must be finite and >= 0")
    mean = math.fsum(pmf.probs * values)
    second = math.fsum(pmf.probs * values * values)
    return LengthMoments(mean=mean, second=max(second, mean * mean))


def _check_probability(q: float) -> None:
    if not 0 < q <= 1:
        raise InvalidParameterError(f"Probability must lie in (0, 1], got {q}")


def _check_rate(arrival_rate: float) -> None:
    if not arrival_rate > 0 or not math.isfinite(arrival_rate):
        raise InvalidParameterError(f"Arrival rate must be positive: {arrival_rate}")


def geometric_moments(q: float) -> tuple[float, float]:
    """Return E[M], E[M^2] for M ~ Geometric(q) on {1, 2, ...}."""
    _check_probability(q)
    return 1.0 / q, (2.0 - q) / (q * q)


def cycle_moments(lm: LengthMoments, q: float, arrival_rate: float) -> CycleMoments:
    """Return E[Y], E[Y^2] with W a Geometric(q) sum of Exp(rate) gaps."""
    _check_rate(arrival_rate)
    mean_m, second_m = geometric_moments(q)
    mean_z = 1.0 / arrival_rate
    second_z = 2.0 / arrival_rate**2
    mean = lm.mean + mean_m * mean_z
    second = (
        lm.second
        + 2.0 * mean_m * mean_z * lm.mean
        + mean_m * second_z
        + (second_m - mean_m) * mean_z**2
    )
    return CycleMoments(mean=mean, second=second)


def age_from_cycle(cm: CycleMoments, mean_service: float) -> float:
    """Return E[Y^2] / (2 E[Y]) + E[S]."""
    return cm.second / (2.0 * cm.mean) + mean_service


def renewal_age(lm: LengthMoments, wm: WaitingMoments) -> float:
    """Return the average age for independent service S and waiting time W."""
    return (lm.second + 2.0 * wm.mean * lm.mean + wm.second) / (
        2.0 * (lm.mean + wm.mean)
    ) + lm.mean


def exponential_waiting(rate: float) -> WaitingMoments:
    """Return the moments of an Exp(rate) waiting time."""
    _check_rate(rate)
    mean = 1.0 / rate
    return WaitingMoments(mean=mean, second=2.0 * mean * mean)


def age_policy1(lm: LengthMoments, q_k: float, arrival_rate: float) -> float:
    """Average age of highest-k selective encoding."""
    _check_probability(q_k)
    _check_rate(arrival_rate)
    return renewal_age(lm, exponential_waiting(arrival_rate * q_k))


def age_policy2(lm: LengthMoments, q_k_alpha: float, arrival_rate: float) -> float:
    """Average age of randomized selective encoding."""
    return age_policy1(lm, q_k_alpha, arrival_rate)


def waiting_moments_empty(
    q_k: float, arrival_rate: float, empty_length: float
) -> WaitingMoments:
    """Waiting-time moments when every discarded arrival sends the empty symbol.

    W = (M - 1) c + Z_1 + ... + Z_M with M ~ Geometric(q_k), Z ~ Exp(rate).
    """
    _check_probability(q_k)
    _check_rate(arrival_rate)
    if empty_length < 0 or not math.isfinite(empty_length):
        raise InvalidParameterError(f"Empty-symbol length must be >= 0: {empty_length}")
    c = empty_length
    a = 1.0 / (arrival_rate * q_k)
    mean = c * (1.0 / q_k - 1.0) + a
    second = (
        (2.0 - q_k) * (1.0 - q_k) / (q_k * q_k) * c * c
        + 4.0 * (1.0 - q_k) / (arrival_rate * q_k * q_k) * c
        + 2.0 * a * a
    )
    return WaitingMoments(mean=mean, second=second)


def age_policy3_noreset(lm_cond: LengthMoments, wm: WaitingMoments) -> float:
    """Average age when the empty symbol is sent but does not reset the age."""
    return renewal_age(lm_cond, wm)


def age_policy3_reset(lm_full: LengthMoments, arrival_rate: float) -> float:
    """Average age when the empty symbol resets the age."""
    return renewal_age(lm_full, exponential_waiting(arrival_rate))


def evaluate_age(
    policy: Policy,
    pmf: Pmf,
    lengths: Sequence[float] | np.ndarray,
    arrival_rate: float,
    *,
    k: int,
    alpha: float | None = None,
    empty_length: float | None = None,
) -> float:
    """Score a length vector under any policy.

    ``lengths`` has k entries for highest-k and empty-noreset, n entries for
    randomized, and k + 1 (empty symbol last) for empty-reset.
    """
    if policy is Policy.HIGHEST_K:
        lm = length_moments(lengths, conditional_topk(pmf, k))
        return age_policy1(lm, prefix_mass(pmf, k), arrival_rate)
    if policy is Policy.RANDOMIZED:
        if alpha is None:
            raise InvalidParameterError("The randomized policy needs alpha")
        lm = length_moments(lengths, conditional_randomized(pmf, k, alpha))
        return age_policy2(lm, randomized_mass(pmf, k, alpha), arrival_rate)
    if policy is Policy.EMPTY_NORESET:
        if empty_length is None:
            raise InvalidParameterError("The empty-noreset policy needs empty_length")
        if k >= pmf.n:
            raise InvalidParameterError("The empty symbol needs k < n")
        lm = length_moments(lengths, conditional_topk(pmf, k))
        wm = waiting_moments_empty(prefix_mass(pmf, k), arrival_rate, empty_length)
        return age_policy3_noreset(lm, wm)
    if policy is Policy.EMPTY_RESET:
        lm = length_moments(lengths, pmf_with_empty(pmf, k))
        return age_policy3_reset(lm, arrival_rate)
    raise InvalidParameterError(f"Unknown policy {policy!r}")
