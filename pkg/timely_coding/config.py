"""Run configuration for the timely_coding command line."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
import json
import logging
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    CONF_ALPHA,
    CONF_BLOCK_SIZE,
    CONF_CYCLES,
    CONF_EMIT_PLOT_DATA,
    CONF_EMPTY_LENGTH,
    CONF_FAMILY,
    CONF_FILE,
    CONF_GRIDS,
    CONF_HORIZON,
    CONF_JOBS,
    CONF_K,
    CONF_K_RANGE,
    CONF_KRAFT_TOLERANCE,
    CONF_LAMBDA,
    CONF_LENGTHS,
    CONF_MAX_INNER_ITERATIONS,
    CONF_MAX_OUTER_ITERATIONS,
    CONF_N,
    CONF_NAME,
    CONF_OUT,
    CONF_POLICY,
    CONF_S,
    CONF_SEED,
    CONF_SELECTION,
    CONF_SIMULATION,
    CONF_SOLVER,
    CONF_SORT,
    CONF_SOURCE,
    CONF_THETA_TOLERANCE,
    CONF_TOP,
    CONF_TRAJECTORY,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_CYCLES,
    DEFAULT_HORIZON,
    DEFAULT_JOBS,
    DEFAULT_KRAFT_TOLERANCE,
    DEFAULT_MAX_INNER_ITERATIONS,
    DEFAULT_MAX_OUTER_ITERATIONS,
    DEFAULT_OUT,
    DEFAULT_RANKED_ROWS,
    DEFAULT_SEED,
    DEFAULT_THETA_TOLERANCE,
    FAMILY_DYADIC,
    FAMILY_UNIFORM,
    FAMILY_ZIPF,
    FAMILIES,
    Policy,
)
from .exceptions import InvalidParameterError
from .pmf import Pmf, SelectionSet, dyadic_pmf, uniform_pmf, zipf_pmf
from .pmf_parser import PmfFileParser
from .solver import SolverSettings

_LOGGER = logging.getLogger(__name__)


class InvalidConfig(InvalidParameterError):
    """Error to indicate the run configuration is invalid."""


def _positive(value: Any) -> float:
    try:
        number = float(value)
    except (TypeError, ValueError) as err:
        raise vol.Invalid(f"expected a positive number, got {value!r}") from err
    if not number > 0:
        raise vol.Invalid(f"expected a positive number, got {value}")
    return number


def _lambdas(value: Any) -> tuple[float, ...]:
    values = value if isinstance(value, list | tuple) else [value]
    if not values:
        raise vol.Invalid("at least one arrival rate is required")
    return tuple(_positive(v) for v in values)


def _selection(value: Any) -> SelectionSet:
    try:
        if isinstance(value, str):
            return SelectionSet.parse(value)
        return SelectionSet(tuple(value))
    except (InvalidParameterError, TypeError) as err:
        raise vol.Invalid(f"invalid selection {value!r}: {err}") from err


def _k_range(value: Any) -> tuple[int, int]:
    if not isinstance(value, list | tuple) or len(value) != 2:
        raise vol.Invalid("k_range must be a [low, high] pair")
    try:
        low, high = (int(v) for v in value)
    except (TypeError, ValueError) as err:
        raise vol.Invalid(f"k_range {value!r} must hold integers") from err
    if not 1 <= low <= high:
        raise vol.Invalid(f"k_range [{low}, {high}] must satisfy 1 <= low <= high")
    return low, high


def _one_source(source: dict[str, Any]) -> dict[str, Any]:
    if (CONF_FAMILY in source) == (CONF_FILE in source):
        raise vol.Invalid("exactly one of source.family and source.file is required")
    if CONF_FAMILY in source:
        if CONF_N not in source:
            raise vol.Invalid("source.n is required with source.family")
        if source[CONF_FAMILY] == FAMILY_ZIPF and CONF_S not in source:
            raise vol.Invalid("source.s is required for the zipf family")
    return source


SOURCE_SCHEMA = vol.All(
    vol.Schema(
        {
            vol.Optional(CONF_FAMILY): vol.In(FAMILIES),
            vol.Optional(CONF_N): vol.All(int, vol.Range(min=1)),
            vol.Optional(CONF_S): vol.All(vol.Coerce(float), vol.Range(min=0)),
            vol.Optional(CONF_FILE): vol.IsFile(),
            vol.Optional(CONF_SORT, default=False): bool,
        }
    ),
    _one_source,
)

POLICY_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_NAME, default=str(Policy.HIGHEST_K)): vol.All(
            vol.In([str(p) for p in Policy]), vol.Coerce(Policy)
        ),
        vol.Optional(CONF_K): vol.All(int, vol.Range(min=1)),
        vol.Optional(CONF_ALPHA): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1, min_included=False)
        ),
        vol.Optional(CONF_EMPTY_LENGTH): _positive,
        vol.Optional(CONF_SELECTION): _selection,
        vol.Optional(CONF_LENGTHS): vol.All(
            [vol.All(vol.Coerce(float), vol.Range(min=0))], vol.Length(min=1)
        ),
    }
)

GRIDS_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_K_RANGE): _k_range,
        vol.Optional(CONF_ALPHA): vol.All(
            [vol.All(vol.Coerce(float), vol.Range(min=0, max=1, min_included=False))],
            vol.Length(min=1),
        ),
        vol.Optional(CONF_EMPTY_LENGTH): vol.All([_positive], vol.Length(min=1)),
        vol.Optional(CONF_K): vol.All(
            [vol.All(int, vol.Range(min=1))], vol.Length(min=1)
        ),
    }
)

SOLVER_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_THETA_TOLERANCE, default=DEFAULT_THETA_TOLERANCE): _positive,
        vol.Optional(CONF_KRAFT_TOLERANCE, default=DEFAULT_KRAFT_TOLERANCE): _positive,
        vol.Optional(
            CONF_MAX_OUTER_ITERATIONS, default=DEFAULT_MAX_OUTER_ITERATIONS
        ): vol.All(int, vol.Range(min=1)),
        vol.Optional(
            CONF_MAX_INNER_ITERATIONS, default=DEFAULT_MAX_INNER_ITERATIONS
        ): vol.All(int, vol.Range(min=1)),
    }
)

SIMULATION_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_CYCLES, default=DEFAULT_CYCLES): vol.All(
            int, vol.Range(min=1)
        ),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(
            int, vol.Range(min=0, max=2**64 - 1)
        ),
        vol.Optional(CONF_BLOCK_SIZE, default=DEFAULT_BLOCK_SIZE): vol.All(
            int, vol.Range(min=1)
        ),
        vol.Optional(CONF_HORIZON, default=DEFAULT_HORIZON): _positive,
        vol.Optional(CONF_TRAJECTORY, default=False): bool,
    }
)

RUN_CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_SOURCE): SOURCE_SCHEMA,
        vol.Optional(CONF_POLICY, default=dict): POLICY_SCHEMA,
        vol.Optional(CONF_LAMBDA, default=1.0): _lambdas,
        vol.Optional(CONF_GRIDS, default=dict): GRIDS_SCHEMA,
        vol.Optional(CONF_SOLVER, default=dict): SOLVER_SCHEMA,
        vol.Optional(CONF_SIMULATION, default=dict): SIMULATION_SCHEMA,
        vol.Optional(CONF_JOBS, default=DEFAULT_JOBS): vol.All(int, vol.Range(min=0)),
        vol.Optional(CONF_OUT, default=DEFAULT_OUT): str,
        vol.Optional(CONF_EMIT_PLOT_DATA, default=False): bool,
        vol.Optional(CONF_TOP, default=DEFAULT_RANKED_ROWS): vol.All(
            int, vol.Range(min=1)
        ),
    }
)


@dataclass(frozen=True)
class SourceConfig:
    """Where the source pmf comes from."""

    family: str | None = None
    n: int | None = None
    s: float | None = None
    file: str | None = None
    sort: bool = False

    def load_pmf(self) -> Pmf:
        """Build or read the pmf."""
        if self.file is not None:
            return PmfFileParser.load(self.file, sort=self.sort)
        assert self.n is not None
        if self.family == FAMILY_ZIPF:
            assert self.s is not None
            return zipf_pmf(self.n, self.s)
        if self.family == FAMILY_DYADIC:
            return dyadic_pmf(self.n)
        if self.family == FAMILY_UNIFORM:
            return uniform_pmf(self.n)
        raise InvalidConfig(f"Unknown pmf family {self.family!r}")


@dataclass(frozen=True)
class PolicyConfig:
    """Policy and its parameters."""

    name: Policy = Policy.HIGHEST_K
    k: int | None = None
    alpha: float | None = None
    empty_length: float | None = None
    selection: SelectionSet | None = None
    lengths: tuple[float, ...] | None = None


@dataclass(frozen=True)
class GridConfig:
    """Sweep grids; missing grids fall back to the search defaults."""

    k_range: tuple[int, int] | None = None
    alpha: tuple[float, ...] | None = None
    empty_length: tuple[float, ...] | None = None
    k: tuple[int, ...] | None = None


@dataclass(frozen=True)
class SimulationConfig:
    """Monte Carlo settings."""

    cycles: int = DEFAULT_CYCLES
    seed: int = DEFAULT_SEED
    block_size: int = DEFAULT_BLOCK_SIZE
    horizon: float = DEFAULT_HORIZON
    trajectory: bool = False


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration."""

    source: SourceConfig
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    lambdas: tuple[float, ...] = (1.0,)
    grids: GridConfig = field(default_factory=GridConfig)
    solver: SolverSettings = field(default_factory=SolverSettings)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    jobs: int = DEFAULT_JOBS
    out: Path = Path(DEFAULT_OUT)
    emit_plot_data: bool = False
    top: int = DEFAULT_RANKED_ROWS

    def as_dict(self) -> dict[str, Any]:
        """Return a JSON-ready echo of the configuration."""
        policy = self.policy
        return {
            CONF_SOURCE: {
                key: value
                for key, value in (
                    (CONF_FAMILY, self.source.family),
                    (CONF_N, self.source.n),
                    (CONF_S, self.source.s),
                    (CONF_FILE, self.source.file),
                    (CONF_SORT, self.source.sort),
                )
                if value is not None
            },
            CONF_POLICY: {
                CONF_NAME: str(policy.name),
                CONF_K: policy.k,
                CONF_ALPHA: policy.alpha,
                CONF_EMPTY_LENGTH: policy.empty_length,
                CONF_SELECTION: (
                    None if policy.selection is None else str(policy.selection)
                ),
            },
            CONF_LAMBDA: list(self.lambdas),
            CONF_SIMULATION: {
                CONF_CYCLES: self.simulation.cycles,
                CONF_SEED: self.simulation.seed,
                CONF_BLOCK_SIZE: self.simulation.block_size,
            },
        }


def validate_config(data: Mapping[str, Any]) -> RunConfig:
    """Validate a raw configuration mapping and build a RunConfig."""
    try:
        valid = RUN_CONFIG_SCHEMA(dict(data))
    except vol.Invalid as err:
        raise InvalidConfig(f"Invalid configuration: {err}") from err

    source = valid[CONF_SOURCE]
    policy = valid[CONF_POLICY]
    grids = valid[CONF_GRIDS]
    solver = valid[CONF_SOLVER]
    simulation = valid[CONF_SIMULATION]
    return RunConfig(
        source=SourceConfig(
            family=source.get(CONF_FAMILY),
            n=source.get(CONF_N),
            s=source.get(CONF_S),
            file=source.get(CONF_FILE),
            sort=source[CONF_SORT],
        ),
        policy=PolicyConfig(
            name=policy[CONF_NAME],
            k=policy.get(CONF_K),
            alpha=policy.get(CONF_ALPHA),
            empty_length=policy.get(CONF_EMPTY_LENGTH),
            selection=policy.get(CONF_SELECTION),
            lengths=_optional_tuple(policy.get(CONF_LENGTHS)),
        ),
        lambdas=valid[CONF_LAMBDA],
        grids=GridConfig(
            k_range=grids.get(CONF_K_RANGE),
            alpha=_optional_tuple(grids.get(CONF_ALPHA)),
            empty_length=_optional_tuple(grids.get(CONF_EMPTY_LENGTH)),
            k=_optional_tuple(grids.get(CONF_K)),
        ),
        solver=SolverSettings(
            theta_tolerance=solver[CONF_THETA_TOLERANCE],
            kraft_tolerance=solver[CONF_KRAFT_TOLERANCE],
            max_outer_iterations=solver[CONF_MAX_OUTER_ITERATIONS],
            max_inner_iterations=solver[CONF_MAX_INNER_ITERATIONS],
        ),
        simulation=SimulationConfig(
            cycles=simulation[CONF_CYCLES],
            seed=simulation[CONF_SEED],
            block_size=simulation[CONF_BLOCK_SIZE],
            horizon=simulation[CONF_HORIZON],
            trajectory=simulation[CONF_TRAJECTORY],
        ),
        jobs=valid[CONF_JOBS],
        out=Path(valid[CONF_OUT]),
        emit_plot_data=valid[CONF_EMIT_PLOT_DATA],
        top=valid[CONF_TOP],
    )


def _optional_tuple(values: list[Any] | None) -> tuple[Any, ...] | None:
    return None if values is None else tuple(values)


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a JSON configuration file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as err:
        raise InvalidConfig(f"Cannot read config file {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise InvalidConfig(f"Config file {path} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise InvalidConfig(f"Config file {path} must hold a JSON object")
    _LOGGER.debug("Loaded config file %s", path)
    return data


def merge_overrides(
    base: Mapping[str, Any], overrides: Mapping[str, Any]
) -> dict[str, Any]:
    """Return ``base`` with ``overrides`` applied; None values are skipped.

    Nested mappings merge key by key, so a flag overriding ``policy.k`` keeps
    the file's ``policy.name``.
    """
    merged: dict[str, Any] = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        current = merged.get(key)
        if isinstance(value, Mapping) and isinstance(current, Mapping):
            merged[key] = merge_overrides(current, value)
        elif isinstance(value, Mapping):
            merged[key] = merge_overrides({}, value)
        else:
            merged[key] = value
    return merged
