"""Exogenous parameter search: sweeps over k, alpha and the empty-symbol length,
and exhaustive search over encoded subsets."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
import dataclasses
from dataclasses import dataclass, field
import functools
import itertools
import logging
import math

import numpy as np

from .const import (
    DEFAULT_ALPHA_STEP,
    DEFAULT_EMPTY_LENGTH_MAX,
    DEFAULT_EMPTY_LENGTH_MIN,
    DEFAULT_EMPTY_LENGTH_STEP,
    DEFAULT_RANKED_ROWS,
    EMPTY_SYMBOL_POLICIES,
    MAX_ENUMERATED_SUBSETS,
    TIE_TOLERANCE,
    Policy,
)
from .exceptions import (
    InvalidParameterError,
    SearchError,
    SolverError,
    SpecialFunctionError,
)
from .parallel import map_ordered
from .pmf import (
    Pmf,
    SelectionSet,
    head_mass,
    prefix_mass,
    randomized_mass,
)
from .solver import CodebookSolution, SolverSettings, solve_policy, solve_selection

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepPoint:
    """Outcome of one solve in a sweep."""

    param: float
    age: float | None
    converged: bool
    iterations: int = 0
    encoded_mass: float | None = None
    effective_rate: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    """Ages along one parameter grid.

    ``grid`` and ``ages`` hold converged points only; ``points`` keeps every
    attempted point, failures included.
    """

    parameter: str
    points: tuple[SweepPoint, ...]
    grid: np.ndarray
    ages: np.ndarray
    argmin_value: float
    argmin_age: float
    ties: tuple[float, ...]
    failures: tuple[SweepPoint, ...] = ()


@dataclass(frozen=True)
class SelectionRow:
    """One enumerated subset with its effective rate and optimal age."""

    selection: SelectionSet
    effective_rate: float
    age: float


@dataclass(frozen=True)
class SelectionResult:
    """Best subset of a fixed size, with the top of the ranking."""

    selection: SelectionSet
    effective_rate: float
    age: float
    ranked_table: tuple[SelectionRow, ...]
    solution: CodebookSolution
    evaluated: int
    failures: tuple[str, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class _SweepTask:
    policy: Policy
    pmf: Pmf
    k: int
    arrival_rate: float
    alpha: float | None
    empty_length: float | None
    settings: SolverSettings


def default_alpha_grid() -> np.ndarray:
    """Return 0.05, 0.10, ..., 1.0."""
    steps = int(round(1.0 / DEFAULT_ALPHA_STEP))
    return np.round(np.arange(1, steps + 1) * DEFAULT_ALPHA_STEP, 10)


def default_empty_length_grid() -> np.ndarray:
    """Return a 0.1-step grid over [0.5, 15] merged with the integers 1..15."""
    span = DEFAULT_EMPTY_LENGTH_MAX - DEFAULT_EMPTY_LENGTH_MIN
    count = int(round(span / DEFAULT_EMPTY_LENGTH_STEP))
    fine = DEFAULT_EMPTY_LENGTH_MIN + DEFAULT_EMPTY_LENGTH_STEP * np.arange(count + 1)
    integers = np.arange(1, int(DEFAULT_EMPTY_LENGTH_MAX) + 1, dtype=float)
    return np.unique(np.round(np.concatenate([fine, integers]), 10))


def _encoded_mass(task: _SweepTask) -> float:
    if task.policy is Policy.RANDOMIZED:
        assert task.alpha is not None
        return randomized_mass(task.pmf, task.k, task.alpha)
    if task.policy is Policy.EMPTY_RESET:
        return 1.0
    return prefix_mass(task.pmf, task.k)


def _run_point(param: float, task: _SweepTask) -> SweepPoint:
    try:
        solution = solve_policy(
            task.policy,
            task.pmf,
            task.k,
            task.arrival_rate,
            alpha=task.alpha,
            empty_length=task.empty_length,
            settings=task.settings,
        )
    except (SolverError, SpecialFunctionError) as err:
        return SweepPoint(param=param, age=None, converged=False, error=str(err))
    mass = _encoded_mass(task)
    return SweepPoint(
        param=param,
        age=solution.theta,
        converged=True,
        iterations=solution.iterations,
        encoded_mass=mass,
        effective_rate=task.arrival_rate * mass,
    )


def _k_point(task: _SweepTask, k: int) -> SweepPoint:
    return _run_point(float(k), _with(task, k=k))


def _alpha_point(task: _SweepTask, alpha: float) -> SweepPoint:
    return _run_point(float(alpha), _with(task, alpha=alpha))


def _empty_point(task: _SweepTask, empty_length: float) -> SweepPoint:
    return _run_point(float(empty_length), _with(task, empty_length=empty_length))


def _with(task: _SweepTask, **changes: object) -> _SweepTask:
    return dataclasses.replace(task, **changes)  # type: ignore[arg-type]


def _assemble(parameter: str, points: Sequence[SweepPoint]) -> SweepResult:
    """Drop failed points and locate the minimum; ties go to the smallest value."""
    failures = tuple(p for p in points if not p.converged)
    for point in failures:
        _LOGGER.warning(
            "Excluding %s=%.12g from the sweep: %s", parameter, point.param, point.error
        )
    converged = [p for p in points if p.converged]
    if not converged:
        raise SearchError(f"No point of the {parameter} sweep converged")

    grid = np.array([p.param for p in converged])
    ages = np.array([p.age for p in converged], dtype=float)
    best = float(ages.min())
    tied = sorted(float(v) for v in grid[ages <= best + TIE_TOLERANCE])
    if len(tied) > 1:
        _LOGGER.info("Tied minimum over %s: %s", parameter, tied)
    argmin_value = tied[0]
    argmin_age = float(ages[grid == argmin_value][0])
    for point in converged:
        _LOGGER.debug("%s=%.12g age=%.12g", parameter, point.param, point.age)
    return SweepResult(
        parameter=parameter,
        points=tuple(points),
        grid=grid,
        ages=ages,
        argmin_value=argmin_value,
        argmin_age=argmin_age,
        ties=tuple(tied),
        failures=failures,
    )


def _check_rate(arrival_rate: float) -> None:
    if not arrival_rate > 0 or not math.isfinite(arrival_rate):
        raise InvalidParameterError(f"Arrival rate must be positive: {arrival_rate}")


def sweep_k(
    pmf: Pmf,
    arrival_rate: float,
    policy: Policy = Policy.HIGHEST_K,
    k_range: tuple[int, int] | None = None,
    settings: SolverSettings | None = None,
    *,
    alpha: float | None = None,
    empty_length: float | None = None,
    jobs: int | None = 1,
) -> SweepResult:
    """Solve ``policy`` for every k in the inclusive ``k_range``."""
    _check_rate(arrival_rate)
    upper_limit = pmf.n - 1 if policy in EMPTY_SYMBOL_POLICIES else pmf.n
    low, high = k_range if k_range is not None else (1, upper_limit)
    if not 1 <= low <= high <= upper_limit:
        raise InvalidParameterError(
            f"k range [{low}, {high}] must lie within [1, {upper_limit}]"
        )
    if policy is Policy.RANDOMIZED and alpha is None:
        raise InvalidParameterError("A randomized k sweep needs alpha")
    if policy is Policy.EMPTY_NORESET and empty_length is None:
        raise InvalidParameterError("An empty-noreset k sweep needs empty_length")
    task = _SweepTask(
        policy,
        pmf,
        low,
        arrival_rate,
        alpha,
        empty_length,
        settings or SolverSettings(),
    )
    points = map_ordered(functools.partial(_k_point, task), range(low, high + 1), jobs)
    return _assemble("k", points)


def sweep_alpha(
    pmf: Pmf,
    k: int,
    arrival_rate: float,
    alpha_grid: Iterable[float] | None = None,
    settings: SolverSettings | None = None,
    *,
    jobs: int | None = 1,
) -> SweepResult:
    """Solve the randomized policy at every alpha of the grid."""
    _check_rate(arrival_rate)
    if alpha_grid is None:
        alpha_grid = default_alpha_grid()
    grid = [float(a) for a in alpha_grid]
    if not grid:
        raise InvalidParameterError("The alpha grid is empty")
    for alpha in grid:
        randomized_mass(pmf, k, alpha)
    task = _SweepTask(
        Policy.RANDOMIZED,
        pmf,
        k,
        arrival_rate,
        grid[0],
        None,
        settings or SolverSettings(),
    )
    points = map_ordered(functools.partial(_alpha_point, task), grid, jobs)
    return _assemble("alpha", points)


def sweep_empty_length(
    pmf: Pmf,
    k: int,
    arrival_rate: float,
    c_grid: Iterable[float] | None = None,
    settings: SolverSettings | None = None,
    *,
    jobs: int | None = 1,
) -> SweepResult:
    """Solve the empty-noreset policy at every empty-symbol length of the grid."""
    _check_rate(arrival_rate)
    if c_grid is None:
        c_grid = default_empty_length_grid()
    grid = [float(c) for c in c_grid]
    if not grid:
        raise InvalidParameterError("The empty-length grid is empty")
    if min(grid) <= 0:
        raise InvalidParameterError("Empty-symbol lengths must be positive")
    if not 1 <= k < pmf.n:
        raise InvalidParameterError(f"The empty symbol needs 1 <= k < n, got k={k}")
    task = _SweepTask(
        Policy.EMPTY_NORESET,
        pmf,
        k,
        arrival_rate,
        None,
        grid[0],
        settings or SolverSettings(),
    )
    points = map_ordered(functools.partial(_empty_point, task), grid, jobs)
    return _assemble("empty_length", points)


def _selection_point(
    pmf: Pmf,
    arrival_rate: float,
    settings: SolverSettings,
    selection: SelectionSet,
) -> CodebookSolution | str:
    try:
        return solve_selection(pmf, selection, arrival_rate, settings)
    except (SolverError, SpecialFunctionError) as err:
        return str(err)


def best_selection(
    pmf: Pmf,
    k: int,
    arrival_rate: float,
    settings: SolverSettings | None = None,
    *,
    top: int = DEFAULT_RANKED_ROWS,
    jobs: int | None = 1,
) -> SelectionResult:
    """Enumerate every k-subset and return the one with the lowest optimal age.

    Subsets are visited in lexicographic order; among tied ages the first one
    visited wins.
    """
    _check_rate(arrival_rate)
    if not 1 <= k <= pmf.n:
        raise InvalidParameterError(f"k must lie in [1, {pmf.n}], got {k}")
    count = math.comb(pmf.n, k)
    if count > MAX_ENUMERATED_SUBSETS:
        raise InvalidParameterError(
            f"C({pmf.n}, {k}) = {count} subsets exceeds the enumeration limit "
            f"{MAX_ENUMERATED_SUBSETS}; heuristic selection is not supported"
        )

    selections = [
        SelectionSet(indices)
        for indices in itertools.combinations(range(1, pmf.n + 1), k)
    ]
    _LOGGER.debug("Enumerating %d subsets of size %d", count, k)
    outcomes = map_ordered(
        functools.partial(
            _selection_point, pmf, arrival_rate, settings or SolverSettings()
        ),
        selections,
        jobs,
    )

    rows: list[tuple[SelectionRow, CodebookSolution]] = []
    failures: list[str] = []
    for selection, outcome in zip(selections, outcomes):
        if isinstance(outcome, str):
            _LOGGER.warning("Excluding selection %s: %s", selection, outcome)
            failures.append(str(selection))
            continue
        rate = arrival_rate * head_mass(pmf, selection)
        rows.append((SelectionRow(selection, rate, outcome.theta), outcome))
    if not rows:
        raise SearchError(f"No subset of size {k} could be solved")

    best_age = min(row.age for row, _ in rows)
    best_row, best_solution = next(
        (row, solution) for row, solution in rows if row.age <= best_age + TIE_TOLERANCE
    )
    ranked = sorted(
        (row for row, _ in rows), key=lambda r: (r.age, r.selection.indices)
    )
    return SelectionResult(
        selection=best_row.selection,
        effective_rate=best_row.effective_rate,
        age=best_row.age,
        ranked_table=tuple(ranked[: max(top, 1)]),
        solution=best_solution,
        evaluated=len(rows),
        failures=tuple(failures),
    )
