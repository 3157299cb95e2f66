"""Age-optimal real codeword lengths.

All four policies share one problem shape: minimize

    (E[L^2] + 2 A E[L] + D) / (2 (E[L] + A)) + E[L]
    subject to  sum_i 2^-l_i = K,

where A, D are the first two moments of the waiting time and K is the Kraft
budget (1, or 1 - 2^-c when the empty symbol has a fixed length c). The
fractional objective is handled through the parametric transform

    p(theta) = min_l  1/2 E[L^2] + E[L]^2 + (2A - theta) E[L] + D/2 - theta A,

whose root is the optimal age. For fixed (theta, beta) the stationarity
conditions have a closed-form solution through Lambert W. The outer loop
brackets the root of p(theta); the inner loop brackets the multiplier beta
that meets the Kraft budget.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, replace
import logging
import math
from typing import Any

import numpy as np
from scipy.optimize import brentq

from .age_analytics import (
    evaluate_age,
    LengthMoments,
    length_moments,
    renewal_age,
    waiting_moments_empty,
    WaitingMoments,
)
from .const import (
    BETA_GROWTH,
    BETA_INITIAL_UPPER,
    BETA_LOWER_BOUND,
    DEFAULT_KRAFT_TOLERANCE,
    DEFAULT_MAX_INNER_ITERATIONS,
    DEFAULT_MAX_OUTER_ITERATIONS,
    DEFAULT_THETA_TOLERANCE,
    Policy,
)
from .exceptions import InvalidParameterError, SolverError
from .pmf import (
    Pmf,
    SelectionSet,
    conditional_randomized,
    conditional_subset,
    conditional_topk,
    head_mass,
    pmf_with_empty,
    prefix_mass,
    randomized_mass,
    require_encodable,
)
from .special_functions import lambert_w0_exp

_LOGGER = logging.getLogger(__name__)

LN2 = math.log(2.0)
LN2_SQUARED = LN2 * LN2


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and iteration caps of the two nested root searches."""

    theta_tolerance: float = DEFAULT_THETA_TOLERANCE
    kraft_tolerance: float = DEFAULT_KRAFT_TOLERANCE
    max_outer_iterations: int = DEFAULT_MAX_OUTER_ITERATIONS
    max_inner_iterations: int = DEFAULT_MAX_INNER_ITERATIONS

    def __post_init__(self) -> None:
        """Validate the settings."""
        if not self.theta_tolerance > 0 or not self.kraft_tolerance > 0:
            raise InvalidParameterError("Solver tolerances must be positive")
        if self.max_outer_iterations < 1 or self.max_inner_iterations < 1:
            raise InvalidParameterError("Solver iteration caps must be at least 1")


@dataclass(frozen=True, eq=False)
class CodebookSolution:
    """Optimal lengths for one policy configuration.

    ``lengths`` follows ``probs`` (the encoding pmf); for the empty-reset
    policy the empty symbol is last, for empty-noreset its fixed length is
    ``empty_length`` and is not part of ``lengths``.
    """

    policy: Policy
    lengths: np.ndarray
    probs: np.ndarray
    theta: float
    beta: float
    moments: LengthMoments
    kraft_residual: float
    p_theta_residual: float
    iterations: int
    mean_wait: float
    second_wait: float
    kraft_target: float = 1.0
    empty_length: float | None = None
    inner_iterations: int = 0
    parameters: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON-ready mapping."""
        return {
            "policy": str(self.policy),
            "parameters": dict(self.parameters),
            "lengths": [float(x) for x in self.lengths],
            "probabilities": [float(p) for p in self.probs],
            "theta": self.theta,
            "beta": self.beta,
            "moments": {"mean": self.moments.mean, "second": self.moments.second},
            "waiting": {"mean": self.mean_wait, "second": self.second_wait},
            "kraft_target": self.kraft_target,
            "kraft_residual": self.kraft_residual,
            "p_theta_residual": self.p_theta_residual,
            "empty_length": self.empty_length,
            "iterations": self.iterations,
            "inner_iterations": self.inner_iterations,
        }


@dataclass(frozen=True)
class _Problem:
    """Encoding pmf, waiting-time moments and Kraft budget of one solve."""

    probs: np.ndarray
    mean_wait: float
    second_wait: float
    kraft_target: float


def kraft_sum(lengths: Sequence[float] | np.ndarray) -> float:
    """Return sum_i 2^-l_i."""
    return math.fsum(np.exp2(-np.asarray(lengths, dtype=float)))


def empty_kraft_budget(empty_length: float) -> float:
    """Return 1 - 2^-c, the Kraft budget left after the empty symbol."""
    if not math.isfinite(empty_length):
        raise InvalidParameterError("Empty-symbol length must be finite")
    budget = -math.expm1(-empty_length * LN2)
    if not budget > 0:
        raise InvalidParameterError(
            f"Empty-symbol length {empty_length} leaves no Kraft budget"
        )
    return budget


def _p_value(
    mean: float, second: float, theta: float, mean_wait: float, second_wait: float
) -> float:
    return (
        0.5 * second
        + mean * mean
        + (2.0 * mean_wait - theta) * mean
        + 0.5 * second_wait
        - theta * mean_wait
    )


def p_theta(
    lengths: Sequence[float] | np.ndarray,
    cond_pmf: Pmf,
    theta: float,
    a: float,
    second_wait: float | None = None,
) -> float:
    """Evaluate the parametric objective at fixed lengths.

    ``a`` is the mean waiting time; the second moment defaults to 2 a^2
    (exponential waiting).
    """
    if not a > 0:
        raise InvalidParameterError(f"Mean waiting time must be positive: {a}")
    if len(lengths) != cond_pmf.n:
        raise InvalidParameterError(
            f"{len(lengths)} lengths for a pmf of size {cond_pmf.n}"
        )
    lm = length_moments(lengths, cond_pmf)
    d = 2.0 * a * a if second_wait is None else second_wait
    return _p_value(lm.mean, lm.second, theta, a, d)


def _lengths(
    probs: np.ndarray, theta: float, beta: float, a: float, kraft_target: float
) -> np.ndarray:
    # log of the W argument (beta ln^2 2 / P) 2^((-theta + 2 beta ln2 K + 2a) / 3)
    log_scale = math.log(beta * LN2_SQUARED)
    exponent = (-theta + 2.0 * beta * LN2 * kraft_target + 2.0 * a) / 3.0
    log_arg = log_scale - np.log(probs) + exponent * LN2
    w = np.asarray(lambert_w0_exp(log_arg))
    # ln W = s - W holds exactly; it is the accurate form while W is small
    with np.errstate(divide="ignore"):
        log_w = np.where(log_arg > 1.0, np.log(np.maximum(w, 1e-300)), log_arg - w)
    return (log_scale - np.log(probs) - log_w) / LN2


def lengths_from_theta_beta(
    cond_pmf: Pmf,
    theta: float,
    beta: float,
    a: float,
    kraft_target: float = 1.0,
) -> np.ndarray:
    """Return the stationary lengths for a fixed (theta, beta) pair."""
    if not beta > 0:
        raise InvalidParameterError(f"beta must be positive, got {beta}")
    if np.any(cond_pmf.probs <= 0):
        raise InvalidParameterError("Every encoded symbol needs positive probability")
    return _lengths(cond_pmf.probs, theta, beta, a, kraft_target)


def shannon_lengths(pmf: Pmf, kraft_target: float = 1.0) -> np.ndarray:
    """Return -log2(K P_i), which meets the Kraft budget K with equality."""
    return -np.log2(kraft_target * pmf.probs)


class _CodebookSearch:
    """Nested root search for one problem instance."""

    def __init__(self, problem: _Problem, settings: SolverSettings) -> None:
        """Initialize."""
        self.problem = problem
        self.settings = settings
        self.inner_iterations = 0
        self._beta_hint = BETA_INITIAL_UPPER

    def kraft_excess(self, theta: float, log_beta: float) -> float:
        """Return the Kraft sum minus the budget at (theta, e^log_beta)."""
        p = self.problem
        lengths = _lengths(
            p.probs, theta, math.exp(log_beta), p.mean_wait, p.kraft_target
        )
        return kraft_sum(lengths) - p.kraft_target

    def lengths_at(self, theta: float) -> tuple[np.ndarray, float]:
        """Return the minimizing lengths and multiplier of p(theta)."""
        p = self.problem
        size = p.probs.size
        equal_length = (theta - 2.0 * p.mean_wait) / 3.0
        # With beta = 0 every length equals (theta - 2A)/3; keep it if feasible
        if size * 2.0 ** (-equal_length) <= p.kraft_target:
            return np.full(size, equal_length), 0.0

        lower = math.log(BETA_LOWER_BOUND)
        f_lower = self.kraft_excess(theta, lower)
        if f_lower <= 0:
            return self._finish(theta, BETA_LOWER_BOUND), BETA_LOWER_BOUND

        upper = math.log(max(self._beta_hint, BETA_INITIAL_UPPER))
        f_upper = self.kraft_excess(theta, upper)
        previous = f_lower
        expansions = 0
        while f_upper > 0:
            if f_upper > previous:
                _LOGGER.warning(
                    "Kraft sum not monotone in beta at theta=%.12g; "
                    "the multiplier may not be unique",
                    theta,
                )
            expansions += 1
            if expansions > self.settings.max_inner_iterations:
                raise SolverError(
                    "Could not bracket the Kraft multiplier",
                    {"theta": theta, "beta_upper": math.exp(upper)},
                )
            previous = f_upper
            upper += math.log(BETA_GROWTH)
            f_upper = self.kraft_excess(theta, upper)

        log_beta, result = brentq(
            lambda s: self.kraft_excess(theta, s),
            lower,
            upper,
            xtol=1e-15,
            rtol=4.0 * np.finfo(float).eps,
            maxiter=self.settings.max_inner_iterations,
            full_output=True,
            disp=False,
        )
        self.inner_iterations += result.iterations + expansions
        if not result.converged:
            raise SolverError(
                "Kraft multiplier search did not converge",
                {"theta": theta, "iterations": result.iterations},
            )
        beta = math.exp(log_beta)
        self._beta_hint = beta * BETA_GROWTH
        return self._finish(theta, beta), beta

    def _finish(self, theta: float, beta: float) -> np.ndarray:
        p = self.problem
        return _lengths(p.probs, theta, beta, p.mean_wait, p.kraft_target)

    def p_at(self, theta: float) -> float:
        """Return p(theta)."""
        lengths, _ = self.lengths_at(theta)
        mean, second = self.moments(lengths)
        p = self.problem
        return _p_value(mean, second, theta, p.mean_wait, p.second_wait)

    def moments(self, lengths: np.ndarray) -> tuple[float, float]:
        """Return E[L] and E[L^2] under the encoding pmf."""
        probs = self.problem.probs
        return math.fsum(probs * lengths), math.fsum(probs * lengths * lengths)

    def age(self, lengths: np.ndarray) -> float:
        """Return the objective at ``lengths``."""
        mean, second = self.moments(lengths)
        p = self.problem
        return (second + 2.0 * p.mean_wait * mean + p.second_wait) / (
            2.0 * (mean + p.mean_wait)
        ) + mean

    def bracket(self) -> tuple[float, float]:
        """Return theta values with p(lower) >= 0 >= p(upper)."""
        shannon = -np.log2(self.problem.kraft_target * self.problem.probs)
        lower = self.moments(shannon)[0]
        upper = self.age(shannon)
        width = max(upper - lower, 1.0)
        for _ in range(self.settings.max_outer_iterations):
            if self.p_at(lower) >= 0:
                break
            lower -= width
            width *= 2.0
        else:
            raise SolverError("Could not bracket theta from below", {"theta": lower})
        for _ in range(self.settings.max_outer_iterations):
            if self.p_at(upper) <= 0:
                break
            upper += width
            width *= 2.0
        else:
            raise SolverError("Could not bracket theta from above", {"theta": upper})
        return lower, upper


def _solve(
    problem: _Problem, settings: SolverSettings, policy: Policy
) -> CodebookSolution:
    """Solve one problem instance."""
    if problem.probs.size == 1:
        return _single_symbol(problem, policy)

    search = _CodebookSearch(problem, settings)
    lower, upper = search.bracket()
    _LOGGER.debug("theta bracket [%.12g, %.12g]", lower, upper)
    theta, result = brentq(
        search.p_at,
        lower,
        upper,
        xtol=1e-14,
        rtol=4.0 * np.finfo(float).eps,
        maxiter=settings.max_outer_iterations,
        full_output=True,
        disp=False,
    )
    diagnostics: dict[str, Any] = {
        "theta": theta,
        "bracket": (lower, upper),
        "iterations": result.iterations,
    }
    if not result.converged:
        raise SolverError("Outer theta search did not converge", diagnostics)

    lengths, beta = search.lengths_at(theta)
    mean, second = search.moments(lengths)
    p_residual = _p_value(mean, second, theta, problem.mean_wait, problem.second_wait)
    kraft_residual = kraft_sum(lengths) - problem.kraft_target
    diagnostics.update(
        beta=beta, p_theta_residual=p_residual, kraft_residual=kraft_residual
    )
    if abs(p_residual) > settings.theta_tolerance * max(1.0, theta * theta):
        raise SolverError("p(theta) residual above tolerance", diagnostics)
    if abs(kraft_residual) > settings.kraft_tolerance:
        raise SolverError("Kraft residual above tolerance", diagnostics)
    _LOGGER.debug(
        "Converged: theta=%.12g beta=%.6g after %d outer / %d inner iterations",
        theta,
        beta,
        result.iterations,
        search.inner_iterations,
    )
    return CodebookSolution(
        policy=policy,
        lengths=lengths,
        probs=problem.probs,
        theta=float(theta),
        beta=beta,
        moments=LengthMoments(mean=mean, second=max(second, mean * mean)),
        kraft_residual=kraft_residual,
        p_theta_residual=p_residual,
        iterations=result.iterations,
        mean_wait=problem.mean_wait,
        second_wait=problem.second_wait,
        kraft_target=problem.kraft_target,
        inner_iterations=search.inner_iterations,
    )


def _single_symbol(problem: _Problem, policy: Policy) -> CodebookSolution:
    """Closed form: Kraft equality fixes the only length at -log2 K."""
    length = max(-math.log2(problem.kraft_target), 0.0)
    lengths = np.array([length])
    lm = LengthMoments(mean=length, second=length * length)
    theta = renewal_age(
        lm, WaitingMoments(mean=problem.mean_wait, second=problem.second_wait)
    )
    # the multiplier that makes the single stationarity condition hold
    beta = (3.0 * length + 2.0 * problem.mean_wait - theta) * 2.0**length / LN2
    return CodebookSolution(
        policy=policy,
        lengths=lengths,
        probs=problem.probs,
        theta=theta,
        beta=beta,
        moments=lm,
        kraft_residual=kraft_sum(lengths) - problem.kraft_target,
        p_theta_residual=_p_value(
            length, length * length, theta, problem.mean_wait, problem.second_wait
        ),
        iterations=0,
        mean_wait=problem.mean_wait,
        second_wait=problem.second_wait,
        kraft_target=problem.kraft_target,
    )


def _check_rate(arrival_rate: float) -> None:
    if not arrival_rate > 0 or not math.isfinite(arrival_rate):
        raise InvalidParameterError(f"Arrival rate must be positive: {arrival_rate}")


def _exponential_problem(cond: Pmf, rate: float) -> _Problem:
    require_encodable(cond)
    a = 1.0 / rate
    return _Problem(cond.probs, a, 2.0 * a * a, 1.0)


def solve_selection(
    pmf: Pmf,
    selection: SelectionSet,
    arrival_rate: float,
    settings: SolverSettings | None = None,
) -> CodebookSolution:
    """Solve the highest-k problem for an arbitrary encoded subset."""
    _check_rate(arrival_rate)
    cond = conditional_subset(pmf, selection)
    rate = arrival_rate * head_mass(pmf, selection)
    solution = _solve(
        _exponential_problem(cond, rate),
        settings or SolverSettings(),
        Policy.HIGHEST_K,
    )
    return replace(
        solution,
        parameters={
            "k": selection.k,
            "selection": str(selection),
            "lambda": arrival_rate,
            "lambda_e": rate,
        },
    )


def solve_policy1(
    pmf: Pmf,
    k: int,
    arrival_rate: float,
    settings: SolverSettings | None = None,
) -> CodebookSolution:
    """Optimal lengths under highest-k selective encoding."""
    _check_rate(arrival_rate)
    cond = conditional_topk(pmf, k)
    q_k = prefix_mass(pmf, k)
    solution = _solve(
        _exponential_problem(cond, arrival_rate * q_k),
        settings or SolverSettings(),
        Policy.HIGHEST_K,
    )
    return replace(
        solution, parameters={"k": k, "lambda": arrival_rate, "q": q_k}
    )


def solve_policy2(
    pmf: Pmf,
    k: int,
    alpha: float,
    arrival_rate: float,
    settings: SolverSettings | None = None,
) -> CodebookSolution:
    """Optimal lengths under randomized selective encoding (n codewords)."""
    _check_rate(arrival_rate)
    cond = conditional_randomized(pmf, k, alpha)
    q = randomized_mass(pmf, k, alpha)
    solution = _solve(
        _exponential_problem(cond, arrival_rate * q),
        settings or SolverSettings(),
        Policy.RANDOMIZED,
    )
    return replace(
        solution,
        parameters={"k": k, "alpha": alpha, "lambda": arrival_rate, "q": q},
    )


def solve_policy3_noreset(
    pmf: Pmf,
    k: int,
    arrival_rate: float,
    empty_length: float,
    settings: SolverSettings | None = None,
) -> CodebookSolution:
    """Optimal head lengths when a fixed-length empty symbol does not reset age."""
    _check_rate(arrival_rate)
    if not 1 <= k < pmf.n:
        raise InvalidParameterError(f"The empty symbol needs 1 <= k < n, got k={k}")
    if not empty_length > 0:
        raise InvalidParameterError(
            f"Empty-symbol length must be positive, got {empty_length}"
        )
    budget = empty_kraft_budget(empty_length)
    cond = conditional_topk(pmf, k)
    require_encodable(cond)
    q_k = prefix_mass(pmf, k)
    wm = waiting_moments_empty(q_k, arrival_rate, empty_length)
    solution = _solve(
        _Problem(cond.probs, wm.mean, wm.second, budget),
        settings or SolverSettings(),
        Policy.EMPTY_NORESET,
    )
    return replace(
        solution,
        empty_length=empty_length,
        parameters={
            "k": k,
            "lambda": arrival_rate,
            "empty_length": empty_length,
            "q": q_k,
        },
    )


def solve_policy3_reset(
    pmf: Pmf,
    k: int,
    arrival_rate: float,
    settings: SolverSettings | None = None,
) -> CodebookSolution:
    """Optimal lengths for k head symbols plus an age-resetting empty symbol."""
    _check_rate(arrival_rate)
    extended = pmf_with_empty(pmf, k)
    solution = _solve(
        _exponential_problem(extended, arrival_rate),
        settings or SolverSettings(),
        Policy.EMPTY_RESET,
    )
    return replace(solution, parameters={"k": k, "lambda": arrival_rate})


def solve_policy(
    policy: Policy,
    pmf: Pmf,
    k: int,
    arrival_rate: float,
    *,
    alpha: float | None = None,
    empty_length: float | None = None,
    settings: SolverSettings | None = None,
) -> CodebookSolution:
    """Dispatch to the solver of ``policy``."""
    if policy is Policy.HIGHEST_K:
        return solve_policy1(pmf, k, arrival_rate, settings)
    if policy is Policy.RANDOMIZED:
        if alpha is None:
            raise InvalidParameterError("The randomized policy needs alpha")
        return solve_policy2(pmf, k, alpha, arrival_rate, settings)
    if policy is Policy.EMPTY_NORESET:
        if empty_length is None:
            raise InvalidParameterError("The empty-noreset policy needs empty_length")
        return solve_policy3_noreset(pmf, k, arrival_rate, empty_length, settings)
    if policy is Policy.EMPTY_RESET:
        return solve_policy3_reset(pmf, k, arrival_rate, settings)
    raise InvalidParameterError(f"Unknown policy {policy!r}")


def shannon_solution(
    policy: Policy,
    pmf: Pmf,
    k: int,
    arrival_rate: float,
    *,
    alpha: float | None = None,
    empty_length: float | None = None,
) -> tuple[np.ndarray, float]:
    """Return Shannon lengths for the policy's encoding pmf and their age."""
    if policy is Policy.HIGHEST_K:
        lengths = shannon_lengths(conditional_topk(pmf, k))
    elif policy is Policy.RANDOMIZED:
        if alpha is None:
            raise InvalidParameterError("The randomized policy needs alpha")
        lengths = shannon_lengths(conditional_randomized(pmf, k, alpha))
    elif policy is Policy.EMPTY_NORESET:
        if empty_length is None:
            raise InvalidParameterError("The empty-noreset policy needs empty_length")
        lengths = shannon_lengths(
            conditional_topk(pmf, k), empty_kraft_budget(empty_length)
        )
    elif policy is Policy.EMPTY_RESET:
        lengths = shannon_lengths(pmf_with_empty(pmf, k))
    else:
        raise InvalidParameterError(f"Unknown policy {policy!r}")
    age = evaluate_age(
        policy,
        pmf,
        np.maximum(lengths, 0.0),
        arrival_rate,
        k=k,
        alpha=alpha,
        empty_length=empty_length,
    )
    return lengths, age


def kkt_residuals(solution: CodebookSolution) -> np.ndarray:
    """Return P l + 2 E[L] P + (2A - theta) P - beta ln2 2^-l per coordinate."""
    probs = solution.probs
    lengths = solution.lengths
    mean = solution.moments.mean
    return (
        probs * lengths
        + 2.0 * mean * probs
        + (2.0 * solution.mean_wait - solution.theta) * probs
        - solution.beta * LN2 * np.exp2(-lengths)
    )
