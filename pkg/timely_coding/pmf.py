"""Source distributions and the policy-conditional pmfs derived from them."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .const import MIN_ENCODED_PROBABILITY, PMF_SUM_TOLERANCE
from .exceptions import InvalidParameterError, PmfValidationError

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability vector over realizations x_1..x_n.

    Entries are stored read-only. Unless ``ordered`` is False the entries must
    be non-increasing in index, which is what "the k most probable
    realizations" relies on.
    """

    probs: np.ndarray
    ordered: bool = field(default=True)

    def __post_init__(self) -> None:
        """Validate and freeze the probability vector."""
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise PmfValidationError("A pmf needs a non-empty 1-D probability vector")
        if not np.all(np.isfinite(probs)):
            raise PmfValidationError("Pmf entries must be finite")
        if np.any(probs < 0):
            raise PmfValidationError("Pmf entries must be non-negative")
        total = math.fsum(probs)
        if abs(total - 1.0) > PMF_SUM_TOLERANCE:
            raise PmfValidationError(f"Pmf entries sum to {total!r}, not 1")
        if self.ordered and np.any(np.diff(probs) > 0):
            raise PmfValidationError(
                "Pmf entries must be non-increasing; use normalize_and_sort()"
            )
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        """Number of realizations."""
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pmf):
            return NotImplemented
        return self.ordered == other.ordered and np.array_equal(
            self.probs, other.probs
        )

    def __hash__(self) -> int:
        return hash((self.ordered, self.probs.tobytes()))

    def ties(self) -> list[tuple[int, int]]:
        """Return 1-based index pairs of adjacent equal entries."""
        equal = np.flatnonzero(self.probs[:-1] == self.probs[1:])
        return [(int(i) + 1, int(i) + 2) for i in equal]

    def as_list(self) -> list[float]:
        """Return the entries as plain floats."""
        return [float(p) for p in self.probs]


@dataclass(frozen=True)
class SelectionSet:
    """Sorted set of distinct 1-based realization indices."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        """Normalize to a sorted tuple and validate."""
        try:
            values = [int(i) for i in self.indices]
        except (TypeError, ValueError) as err:
            raise InvalidParameterError("Selection indices must be integers") from err
        if not values:
            raise InvalidParameterError("A selection must contain at least one index")
        if len(set(values)) != len(values):
            raise InvalidParameterError(f"Duplicate selection indices: {values}")
        if min(values) < 1:
            raise InvalidParameterError("Selection indices start at 1")
        object.__setattr__(self, "indices", tuple(sorted(values)))

    @classmethod
    def prefix(cls, k: int) -> SelectionSet:
        """Return {1..k}, the highest-k selection."""
        if k < 1:
            raise InvalidParameterError(f"k must be at least 1, got {k}")
        return cls(tuple(range(1, k + 1)))

    @classmethod
    def parse(cls, text: str) -> SelectionSet:
        """Parse a dash-joined selection such as ``1-7-8-9-10``."""
        try:
            return cls(tuple(int(part) for part in text.strip().split("-")))
        except ValueError as err:
            raise InvalidParameterError(f"Invalid selection {text!r}") from err

    @property
    def k(self) -> int:
        """Number of selected realizations."""
        return len(self.indices)

    def __str__(self) -> str:
        return "-".join(str(i) for i in self.indices)

    def is_prefix(self) -> bool:
        """Return True if this is {1..k}."""
        return self.indices == tuple(range(1, self.k + 1))

    def validate_against(self, pmf: Pmf) -> None:
        """Check that every index addresses a realization of ``pmf``."""
        if self.indices[-1] > pmf.n:
            raise InvalidParameterError(
                f"Selection index {self.indices[-1]} exceeds n={pmf.n}"
            )

    def positions(self) -> np.ndarray:
        """Return the 0-based positions of the selected realizations."""
        return np.asarray(self.indices, dtype=int) - 1


def zipf_pmf(n: int, s: float) -> Pmf:
    """Return the truncated Zipf(n, s) pmf, entry i proportional to i^-s."""
    if n < 1:
        raise InvalidParameterError(f"Zipf needs n >= 1, got {n}")
    if s < 0:
        raise InvalidParameterError(f"Zipf needs s >= 0, got {s}")
    weights = np.arange(1, n + 1, dtype=float) ** (-float(s))
    return Pmf(weights / math.fsum(weights))


def dyadic_pmf(n: int) -> Pmf:
    """Return 2^-i for i < n with the last atom doubled to 2^-(n-1)."""
    if n < 2:
        raise InvalidParameterError(f"The dyadic pmf needs n >= 2, got {n}")
    probs = np.exp2(-np.arange(1, n + 1, dtype=float))
    probs[-1] = 2.0 ** (-(n - 1))
    return Pmf(probs)


def uniform_pmf(n: int) -> Pmf:
    """Return the uniform pmf over n realizations."""
    if n < 1:
        raise InvalidParameterError(f"A uniform pmf needs n >= 1, got {n}")
    return Pmf(np.full(n, 1.0 / n))


def normalize_and_sort(weights: Iterable[float]) -> tuple[Pmf, tuple[int, ...]]:
    """Normalize weights, sort them non-increasing and return the permutation.

    The permutation lists, for each entry of the returned pmf, the 1-based
    position it had in ``weights``. Equal weights keep their input order.
    """
    values = np.asarray(list(weights), dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise PmfValidationError("Need at least one weight")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise PmfValidationError("Weights must be finite and non-negative")
    total = math.fsum(values)
    if total <= 0:
        raise PmfValidationError("Weights must not all be zero")
    order = np.argsort(-values, kind="stable")
    return Pmf(values[order] / total), tuple(int(i) + 1 for i in order)


def _check_k(pmf: Pmf, k: int, *, upper: int | None = None) -> None:
    upper = pmf.n if upper is None else upper
    if not 1 <= k <= upper:
        raise InvalidParameterError(f"k must lie in [1, {upper}], got {k}")


def prefix_mass(pmf: Pmf, k: int) -> float:
    """Return q_k, the mass of the k most probable realizations."""
    _check_k(pmf, k)
    return head_mass(pmf, SelectionSet.prefix(k))


def head_mass(pmf: Pmf, sel: SelectionSet) -> float:
    """Return the total probability of the selected realizations."""
    sel.validate_against(pmf)
    if sel.k == pmf.n:
        return 1.0
    return math.fsum(pmf.probs[sel.positions()])


def conditional_subset(pmf: Pmf, sel: SelectionSet) -> Pmf:
    """Return the pmf conditioned on the realization lying in ``sel``."""
    sel.validate_against(pmf)
    if sel.k == pmf.n:
        return pmf
    head = pmf.probs[sel.positions()]
    mass = math.fsum(head)
    if mass <= 0:
        raise PmfValidationError(f"Selection {sel} has zero probability")
    return Pmf(head / mass, ordered=pmf.ordered)


def conditional_topk(pmf: Pmf, k: int) -> Pmf:
    """Return the pmf of the k most probable realizations, renormalized."""
    _check_k(pmf, k)
    if k < pmf.n and pmf.probs[k - 1] == pmf.probs[k]:
        _LOGGER.info(
            "Tie at the selection boundary: P(x_%d) == P(x_%d); index order decides",
            k,
            k + 1,
        )
    return conditional_subset(pmf, SelectionSet.prefix(k))


def randomized_mass(pmf: Pmf, k: int, alpha: float) -> float:
    """Return q_{k,alpha} = q_k + alpha * (1 - q_k)."""
    _check_alpha(alpha)
    _check_k(pmf, k)
    if k == pmf.n or alpha == 1.0:
        return 1.0
    return math.fsum(pmf.probs[:k]) + alpha * math.fsum(pmf.probs[k:])


def _check_alpha(alpha: float) -> None:
    if alpha == 0:
        raise InvalidParameterError(
            "alpha = 0 gives the tail zero encoding mass; use the highest-k policy"
        )
    if not 0 < alpha <= 1:
        raise InvalidParameterError(f"alpha must lie in (0, 1], got {alpha}")


def conditional_randomized(pmf: Pmf, k: int, alpha: float) -> Pmf:
    """Return the encoding pmf of the randomized policy over all n symbols."""
    mass = randomized_mass(pmf, k, alpha)
    if mass == 1.0:
        return pmf
    weights = pmf.probs.copy()
    weights[k:] *= alpha
    return Pmf(weights / mass)


def pmf_with_empty(pmf: Pmf, k: int) -> Pmf:
    """Return the k head probabilities followed by the empty symbol's mass.

    The result is deliberately left in this order even when the empty symbol
    outweighs some head entries.
    """
    _check_k(pmf, k, upper=pmf.n - 1)
    empty = 1.0 - math.fsum(pmf.probs[:k])
    return Pmf(np.append(pmf.probs[:k], empty), ordered=False)


def effective_rate(pmf: Pmf, sel: SelectionSet, arrival_rate: float) -> float:
    """Return lambda_e, the rate of arrivals that fall in the selection."""
    if not arrival_rate > 0:
        raise InvalidParameterError(f"Arrival rate must be positive: {arrival_rate}")
    return arrival_rate * head_mass(pmf, sel)


def require_encodable(pmf: Pmf) -> None:
    """Reject pmfs with entries too small for a finite codeword length."""
    smallest = float(pmf.probs.min())
    if smallest < MIN_ENCODED_PROBABILITY:
        raise PmfValidationError(
            f"Encoding pmf has an entry {smallest!r} below {MIN_ENCODED_PROBABILITY}"
        )


def as_selection(indices: Sequence[int] | SelectionSet) -> SelectionSet:
    """Coerce a sequence of indices into a SelectionSet."""
    if isinstance(indices, SelectionSet):
        return indices
    return SelectionSet(tuple(indices))
