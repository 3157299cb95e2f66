"""Tests for the Monte Carlo age estimators."""

import numpy as np
import pytest

from timely_coding.age_analytics import waiting_moments_empty
from timely_coding.const import DEFAULT_CYCLES, Policy
from timely_coding.exceptions import InvalidParameterError
from timely_coding.pmf import (
    Pmf,
    SelectionSet,
    dyadic_pmf,
    prefix_mass,
    uniform_pmf,
    zipf_pmf,
)
from timely_coding.simulator import SimConfig, simulate, simulate_trajectory
from timely_coding.solver import CodebookSolution, solve_policy, solve_selection


def _config(
    solution: CodebookSolution,
    pmf: Pmf,
    rate: float,
    **kwargs: object,
) -> SimConfig:
    params = solution.parameters
    return SimConfig(
        policy=solution.policy,
        pmf=pmf,
        lengths=solution.lengths,
        arrival_rate=rate,
        k=params.get("k"),
        alpha=params.get("alpha"),
        empty_length=solution.empty_length,
        **kwargs,  # type: ignore[arg-type]
    )


POLICY_CASES = [
    (Policy.HIGHEST_K, dyadic_pmf(10), 5, 1.0, None, None),
    (Policy.RANDOMIZED, zipf_pmf(10, 0.4), 3, 1.0, 0.4, None),
    (Policy.EMPTY_NORESET, dyadic_pmf(10), 4, 5.0, None, 3.0),
    (Policy.EMPTY_RESET, dyadic_pmf(10), 3, 5.0, None, None),
]


def test_single_symbol_without_service() -> None:
    """Instant delivery of every arrival gives age 1/lambda."""
    config = SimConfig(Policy.HIGHEST_K, Pmf([1.0]), [0.0], 2.0, k=1, cycles=200_000)

    estimate = simulate(config)

    assert estimate.mean_age == pytest.approx(0.5, abs=2 * estimate.half_width_95)
    assert estimate.cycles == 200_000


@pytest.mark.parametrize(
    ("policy", "pmf", "k", "rate", "alpha", "empty_length"), POLICY_CASES
)
def test_cycle_estimate_matches_analytical_age(
    policy: Policy,
    pmf: Pmf,
    k: int,
    rate: float,
    alpha: float | None,
    empty_length: float | None,
) -> None:
    """The renewal-reward estimate brackets the optimal age."""
    solution = solve_policy(
        policy, pmf, k, rate, alpha=alpha, empty_length=empty_length
    )
    config = _config(solution, pmf, rate, cycles=200_000, seed=7)

    estimate = simulate(config)

    assert estimate.half_width_95 > 0
    assert abs(estimate.mean_age - solution.theta) <= 2 * estimate.half_width_95


BATTERY = [
    (Policy.HIGHEST_K, dyadic_pmf(10), 5, 0.1, None, None),
    (Policy.HIGHEST_K, zipf_pmf(100, 0.4), 15, 1.0, None, None),
    (Policy.HIGHEST_K, uniform_pmf(8), 8, 2.0, None, None),
    (Policy.RANDOMIZED, zipf_pmf(10, 0.4), 3, 1.0, 0.4, None),
    (Policy.RANDOMIZED, dyadic_pmf(10), 5, 0.5, 0.2, None),
    (Policy.RANDOMIZED, zipf_pmf(20, 1.0), 10, 2.0, 0.7, None),
    (Policy.EMPTY_NORESET, dyadic_pmf(10), 4, 5.0, None, 3.0),
    (Policy.EMPTY_NORESET, zipf_pmf(10, 1.0), 2, 1.0, None, 1.5),
    (Policy.EMPTY_NORESET, uniform_pmf(6), 3, 0.5, None, 2.0),
    (Policy.EMPTY_RESET, dyadic_pmf(10), 3, 5.0, None, None),
    (Policy.EMPTY_RESET, zipf_pmf(10, 0.4), 1, 0.5, None, None),
    (Policy.EMPTY_RESET, zipf_pmf(20, 1.0), 6, 2.0, None, None),
]


@pytest.mark.slow
@pytest.mark.parametrize(
    ("policy", "pmf", "k", "rate", "alpha", "empty_length"), BATTERY
)
def test_million_cycle_battery(
    policy: Policy,
    pmf: Pmf,
    k: int,
    rate: float,
    alpha: float | None,
    empty_length: float | None,
) -> None:
    """Every policy lands inside the 95% interval at a million cycles."""
    solution = solve_policy(
        policy, pmf, k, rate, alpha=alpha, empty_length=empty_length
    )
    config = _config(solution, pmf, rate, cycles=DEFAULT_CYCLES, seed=2024)

    estimate = simulate(config)

    assert estimate.cycles == 1_000_000
    assert abs(estimate.mean_age - solution.theta) <= 2 * estimate.half_width_95


def test_published_selection_age_by_simulation() -> None:
    """The five most probable dyadic symbols at rate 0.1 give age 12.292."""
    pmf = dyadic_pmf(10)
    solution = solve_policy(Policy.HIGHEST_K, pmf, 5, 0.1)
    config = _config(solution, pmf, 0.1, cycles=DEFAULT_CYCLES, seed=17)

    estimate = simulate(config)

    assert solution.theta == pytest.approx(12.292, rel=1e-3)
    assert abs(estimate.mean_age - 12.292) <= 2 * estimate.half_width_95 + 0.013


def test_selection_estimate_matches_analytical_age() -> None:
    """Non-prefix selections are simulated on their own conditional pmf."""
    pmf = dyadic_pmf(10)
    selection = SelectionSet.parse("1-7-8-9-10")
    solution = solve_selection(pmf, selection, 1.0)
    config = SimConfig(
        Policy.HIGHEST_K,
        pmf,
        solution.lengths,
        1.0,
        selection=selection,
        cycles=200_000,
    )

    estimate = simulate(config)

    assert abs(estimate.mean_age - solution.theta) <= 2 * estimate.half_width_95


def test_seeded_runs_are_reproducible_across_workers() -> None:
    """Blocks are keyed by (seed, index) so the worker count does not matter."""
    pmf = dyadic_pmf(10)
    solution = solve_policy(Policy.HIGHEST_K, pmf, 5, 1.0)
    config = _config(solution, pmf, 1.0, cycles=50_000, block_size=10_000, seed=3)

    first = simulate(config)

    assert simulate(config) == first
    assert simulate(config, jobs=2) == first
    other = _config(solution, pmf, 1.0, cycles=50_000, block_size=10_000, seed=4)
    assert simulate(other).mean_age != first.mean_age


def test_mean_wait_matches_empty_symbol_formula() -> None:
    """Discarded arrivals lengthen the wait by whole empty symbols."""
    pmf = dyadic_pmf(10)
    solution = solve_policy(Policy.EMPTY_NORESET, pmf, 2, 5.0, empty_length=2.0)
    config = _config(solution, pmf, 5.0, cycles=200_000, seed=11)

    estimate = simulate(config)

    expected = waiting_moments_empty(prefix_mass(pmf, 2), 5.0, 2.0).mean
    assert abs(estimate.mean_wait - expected) <= 2 * estimate.mean_wait_half_width


def test_trajectory_single_symbol() -> None:
    """Without service the age is the time since the last arrival."""
    config = SimConfig(Policy.HIGHEST_K, Pmf([1.0]), [0.0], 2.0, k=1, seed=5)

    estimate = simulate_trajectory(config, horizon=20_000.0, record_events=False)

    assert estimate.mean_age == pytest.approx(0.5, abs=2 * estimate.half_width_95)
    assert estimate.events == ()
    assert estimate.deliveries == estimate.arrivals


@pytest.mark.parametrize(
    ("policy", "pmf", "k", "rate", "alpha", "empty_length"), POLICY_CASES
)
def test_trajectory_agrees_with_cycle_estimate(
    policy: Policy,
    pmf: Pmf,
    k: int,
    rate: float,
    alpha: float | None,
    empty_length: float | None,
) -> None:
    """Path integration and the cycle estimator are independent routes to the age."""
    solution = solve_policy(
        policy, pmf, k, rate, alpha=alpha, empty_length=empty_length
    )
    config = _config(solution, pmf, rate, cycles=200_000, seed=9)

    cycles = simulate(config)
    path = simulate_trajectory(config, horizon=100_000.0, record_events=False)

    tolerance = 1.5 * (cycles.half_width_95 + path.half_width_95)
    assert abs(path.mean_age - cycles.mean_age) <= tolerance
    assert path.batches == 20


def test_trajectory_noreset_matches_analytical_age() -> None:
    """Blocking during the empty symbol is what the closed form assumes."""
    pmf = dyadic_pmf(10)
    solution = solve_policy(Policy.EMPTY_NORESET, pmf, 4, 5.0, empty_length=3.0)
    config = _config(solution, pmf, 5.0, seed=13)

    path = simulate_trajectory(config, horizon=20_000.0, record_events=False)

    assert abs(path.mean_age - solution.theta) <= 2 * path.half_width_95


def test_trajectory_events() -> None:
    """Empty symbols do not reset the age under the no-reset policy."""
    pmf = dyadic_pmf(10)
    solution = solve_policy(Policy.EMPTY_NORESET, pmf, 2, 1.0, empty_length=2.0)
    config = _config(solution, pmf, 1.0, seed=1)

    estimate = simulate_trajectory(config, horizon=2_000.0)

    events = estimate.events
    assert events
    empties = [e for e in events if e.empty]
    assert empties
    assert all(not e.resets and e.length == 2.0 for e in empties)
    assert all(e.resets and 1 <= e.symbol <= 2 for e in events if not e.empty)
    times = [e.time for e in events]
    assert times == sorted(times)
    assert times[-1] <= 2_000.0
    assert all(e.age >= e.length - 1e-9 for e in events)
    assert estimate.deliveries == sum(e.resets for e in events)


def test_trajectory_validation() -> None:
    """The horizon must be positive and at least two batches are needed."""
    config = SimConfig(Policy.HIGHEST_K, Pmf([1.0]), [0.0], 2.0, k=1)

    with pytest.raises(InvalidParameterError):
        simulate_trajectory(config, horizon=0.0)
    with pytest.raises(InvalidParameterError):
        simulate_trajectory(config, horizon=10.0, batches=1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"lengths": [1.0, 2.0]},
        {"lengths": [-1.0, 1.0, 2.0]},
        {"arrival_rate": 0.0},
        {"cycles": 0},
        {"seed": -1},
        {"k": None},
        {"policy": Policy.RANDOMIZED, "selection": SelectionSet.prefix(3)},
        {"policy": Policy.RANDOMIZED, "lengths": np.ones(10)},
        {"policy": "lowest-k"},
    ],
)
def test_invalid_configs(kwargs: dict[str, object]) -> None:
    """Malformed scenarios are refused up front."""
    base: dict[str, object] = {
        "policy": Policy.HIGHEST_K,
        "pmf": dyadic_pmf(10),
        "lengths": [1.0, 2.0, 2.0],
        "arrival_rate": 1.0,
        "k": 3,
    }
    base.update(kwargs)

    with pytest.raises(InvalidParameterError):
        SimConfig(**base)  # type: ignore[arg-type]
