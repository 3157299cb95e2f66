"""Tests for parameter sweeps and subset search."""

from typing import Any

import numpy as np
import pytest

from timely_coding import search
from timely_coding.const import Policy
from timely_coding.exceptions import InvalidParameterError, SearchError, SolverError
from timely_coding.pmf import SelectionSet, dyadic_pmf, uniform_pmf, zipf_pmf
from timely_coding.search import (
    best_selection,
    default_alpha_grid,
    default_empty_length_grid,
    sweep_alpha,
    sweep_empty_length,
    sweep_k,
)
from timely_coding.solver import solve_policy1, solve_policy3_noreset


def test_singleton_k_range() -> None:
    """A one-point range has that point as its argmin."""
    result = sweep_k(uniform_pmf(4), 1.0, k_range=(4, 4))

    assert result.grid.tolist() == [4.0]
    assert result.argmin_value == 4.0
    assert result.argmin_age == pytest.approx(11 / 3, rel=1e-9)
    assert result.ties == (4.0,)
    assert not result.failures


def test_sweep_k_points_match_direct_solves() -> None:
    """Each sweep point is the corresponding policy solve."""
    pmf = zipf_pmf(12, 0.4)
    result = sweep_k(pmf, 1.0)

    assert result.grid.tolist() == [float(k) for k in range(1, 13)]
    assert result.ages[-1] == solve_policy1(pmf, 12, 1.0).theta
    assert result.ages[4] == solve_policy1(pmf, 5, 1.0).theta
    assert result.argmin_age == result.ages.min()
    assert result.points[0].encoded_mass == pytest.approx(pmf.probs[0])
    assert result.points[0].effective_rate == pytest.approx(pmf.probs[0])


def test_sweep_k_empty_policy_range() -> None:
    """Empty-symbol sweeps stop at k = n - 1 and need their parameter."""
    pmf = dyadic_pmf(6)

    result = sweep_k(pmf, 5.0, Policy.EMPTY_NORESET, empty_length=3.0)
    assert result.grid.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]
    with pytest.raises(InvalidParameterError):
        sweep_k(pmf, 5.0, Policy.EMPTY_RESET, k_range=(1, 6))
    with pytest.raises(InvalidParameterError, match="empty_length"):
        sweep_k(pmf, 5.0, Policy.EMPTY_NORESET)
    with pytest.raises(InvalidParameterError, match="alpha"):
        sweep_k(pmf, 5.0, Policy.RANDOMIZED)


def test_sweep_alpha_without_tail_is_flat() -> None:
    """With k = n alpha has no effect and the smallest grid value wins the tie."""
    result = sweep_alpha(dyadic_pmf(5), 5, 1.0)

    assert np.all(result.ages == result.ages[0])
    assert result.argmin_value == 0.05
    assert len(result.ties) == 20


def test_sweep_alpha_rejects_bad_grid() -> None:
    """alpha outside (0, 1] and empty grids are refused."""
    with pytest.raises(InvalidParameterError):
        sweep_alpha(dyadic_pmf(5), 2, 1.0, [0.5, 1.2])
    with pytest.raises(InvalidParameterError):
        sweep_alpha(dyadic_pmf(5), 2, 1.0, [])


def test_sweep_empty_length_matches_direct_solves() -> None:
    """Every grid point is the no-reset solve at that length."""
    pmf = dyadic_pmf(10)
    result = sweep_empty_length(pmf, 4, 5.0, [1.0, 2.0, 3.0, 4.0, 5.0])

    assert result.ages[2] == solve_policy3_noreset(pmf, 4, 5.0, 3.0).theta
    assert result.argmin_value in result.grid


def test_sweep_empty_length_validation() -> None:
    """Non-positive lengths and a k without a tail are refused."""
    with pytest.raises(InvalidParameterError):
        sweep_empty_length(dyadic_pmf(10), 4, 5.0, [0.0, 1.0])
    with pytest.raises(InvalidParameterError):
        sweep_empty_length(dyadic_pmf(10), 10, 5.0, [1.0])


def test_failed_points_are_excluded_and_logged(
    monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture
) -> None:
    """A point whose solve fails is reported and left out of the argmin."""
    real_solve = search.solve_policy

    def flaky_solve(policy: Policy, pmf: Any, k: int, *args: Any, **kwargs: Any) -> Any:
        if k == 2:
            raise SolverError("did not converge", {"theta": 1.0})
        return real_solve(policy, pmf, k, *args, **kwargs)

    monkeypatch.setattr(search, "solve_policy", flaky_solve)
    result = sweep_k(dyadic_pmf(6), 1.0, k_range=(1, 3))

    assert result.grid.tolist() == [1.0, 3.0]
    assert [p.param for p in result.failures] == [2.0]
    assert result.failures[0].error == "did not converge"
    assert len(result.points) == 3
    assert "Excluding k=2" in caplog.text


def test_all_points_failing_raises(monkeypatch: pytest.MonkeyPatch) -> None:
    """A sweep without a converged point has no argmin."""

    def failing_solve(*args: Any, **kwargs: Any) -> Any:
        raise SolverError("did not converge")

    monkeypatch.setattr(search, "solve_policy", failing_solve)
    with pytest.raises(SearchError):
        sweep_k(dyadic_pmf(6), 1.0)


def test_parallel_sweep_matches_serial() -> None:
    """The worker count does not change the result."""
    pmf = zipf_pmf(10, 0.4)

    serial = sweep_k(pmf, 0.5, jobs=1)
    parallel = sweep_k(pmf, 0.5, jobs=2)

    np.testing.assert_array_equal(serial.ages, parallel.ages)


def test_best_selection_over_full_set() -> None:
    """With k = n there is one subset: everything."""
    pmf = dyadic_pmf(6)
    result = best_selection(pmf, 6, 1.0)

    assert result.selection == SelectionSet.prefix(6)
    assert result.evaluated == 1
    assert result.age == solve_policy1(pmf, 6, 1.0).theta
    assert result.effective_rate == 1.0


def test_best_selection_beats_prefix() -> None:
    """The best subset is never worse than the k most probable symbols."""
    pmf = dyadic_pmf(6)
    result = best_selection(pmf, 3, 1.0, top=5)

    assert result.evaluated == 20
    assert result.age <= solve_policy1(pmf, 3, 1.0).theta + 1e-12
    assert len(result.ranked_table) == 5
    ages = [row.age for row in result.ranked_table]
    assert ages == sorted(ages)
    assert result.ranked_table[0].age == pytest.approx(result.age, abs=1e-9)
    assert result.solution.theta == result.age


def test_best_selection_enumeration_limit() -> None:
    """C(40, 20) subsets are too many to enumerate."""
    with pytest.raises(InvalidParameterError, match="enumeration limit"):
        best_selection(zipf_pmf(40, 1.0), 20, 1.0)


def test_default_grids() -> None:
    """The alpha grid steps by 0.05 and the length grid includes the integers."""
    alpha = default_alpha_grid()
    lengths = default_empty_length_grid()

    assert alpha.size == 20
    assert alpha[0] == 0.05
    assert alpha[-1] == 1.0
    assert lengths[0] == 0.5
    assert lengths[-1] == 15.0
    assert set(range(1, 16)) <= set(lengths.tolist())
    assert np.all(np.diff(lengths) > 0)
