"""Age-optimal selective encoding of a discrete source."""

from .age_analytics import (
    LengthMoments,
    WaitingMoments,
    age_policy1,
    age_policy2,
    age_policy3_noreset,
    age_policy3_reset,
    evaluate_age,
    length_moments,
    waiting_moments_empty,
)
from .const import Policy
from .exceptions import (
    InvalidParameterError,
    PmfValidationError,
    SearchError,
    SolverError,
    SpecialFunctionError,
    TimelyCodingError,
)
from .pmf import Pmf, SelectionSet, dyadic_pmf, uniform_pmf, zipf_pmf
from .search import best_selection, sweep_alpha, sweep_empty_length, sweep_k
from .simulator import SimConfig, simulate, simulate_trajectory
from .solver import (
    CodebookSolution,
    SolverSettings,
    solve_policy,
    solve_policy1,
    solve_policy2,
    solve_policy3_noreset,
    solve_policy3_reset,
    solve_selection,
)
from .special_functions import lambert_w0

__all__ = [
    "CodebookSolution",
    "InvalidParameterError",
    "LengthMoments",
    "Pmf",
    "PmfValidationError",
    "Policy",
    "SearchError",
    "SelectionSet",
    "SimConfig",
    "SolverError",
    "SolverSettings",
    "SpecialFunctionError",
    "TimelyCodingError",
    "WaitingMoments",
    "age_policy1",
    "age_policy2",
    "age_policy3_noreset",
    "age_policy3_reset",
    "best_selection",
    "dyadic_pmf",
    "evaluate_age",
    "lambert_w0",
    "length_moments",
    "simulate",
    "simulate_trajectory",
    "solve_policy",
    "solve_policy1",
    "solve_policy2",
    "solve_policy3_noreset",
    "solve_policy3_reset",
    "solve_selection",
    "sweep_alpha",
    "sweep_empty_length",
    "sweep_k",
    "uniform_pmf",
    "waiting_moments_empty",
    "zipf_pmf",
]
