"""Command line for solving, sweeping, subset search and simulation.

Usage: timely-coding <command> [options]
Example: timely-coding solve --family dyadic --n 10 --k 5 --lambda 0.1
Example: timely-coding sweep-k --family zipf --n 100 --s 0.4 --lambda 0.3 1
Example: timely-coding simulate --config run.json --cycles 1000000 --seed 7
"""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
import json
import logging
from pathlib import Path
import sys
from typing import Any

import numpy as np

from .age_analytics import age_policy1, evaluate_age, length_moments
from .config import (
    InvalidConfig,
    RunConfig,
    load_config_file,
    merge_overrides,
    validate_config,
)
from .const import (
    CODEBOOK_FILENAME,
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
    CONF_LAMBDA,
    CONF_LENGTHS,
    CONF_N,
    CONF_NAME,
    CONF_OUT,
    CONF_POLICY,
    CONF_S,
    CONF_SEED,
    CONF_SELECTION,
    CONF_SIMULATION,
    CONF_SORT,
    CONF_SOURCE,
    CONF_TOP,
    CONF_TRAJECTORY,
    EMPTY_SYMBOL_POLICIES,
    EVENTS_FILENAME,
    EXIT_ERROR,
    EXIT_OK,
    EXIT_PARTIAL,
    FAMILIES,
    SELECTION_FILENAME,
    SIMULATION_FILENAME,
    Policy,
)
from .exceptions import TimelyCodingError
from .output import (
    format_float,
    series_label,
    write_events_csv,
    write_json,
    write_plot_data,
    write_selection_csv,
    write_sweep_csv,
)
from .pmf import Pmf, conditional_subset, head_mass
from .search import (
    SweepResult,
    best_selection,
    sweep_alpha,
    sweep_empty_length,
    sweep_k,
)
from .simulator import SimConfig, simulate, simulate_trajectory
from .solver import (
    CodebookSolution,
    kkt_residuals,
    shannon_solution,
    solve_policy,
    solve_selection,
)

_LOGGER = logging.getLogger(__name__)


def _output_path(config: RunConfig, stem: str, suffix: str, label: str | None) -> Path:
    """Return ``out/stem.suffix``, or ``out/stem_label.suffix`` for a series."""
    name = f"{stem}.{suffix}" if label is None else f"{stem}_{label}.{suffix}"
    return config.out / name


def _lambda_label(config: RunConfig, rate: float) -> str | None:
    return series_label("lambda", rate) if len(config.lambdas) > 1 else None


def _resolve_k(config: RunConfig, pmf: Pmf) -> int:
    """Return the configured k; highest-k and randomized default to n."""
    policy = config.policy
    if policy.k is not None:
        return policy.k
    if policy.selection is not None:
        return policy.selection.k
    if policy.name in EMPTY_SYMBOL_POLICIES:
        raise InvalidConfig(f"The {policy.name} policy needs policy.k")
    return pmf.n


def _solve(config: RunConfig, pmf: Pmf, rate: float) -> CodebookSolution:
    policy = config.policy
    if policy.selection is not None:
        if policy.name is not Policy.HIGHEST_K:
            raise InvalidConfig("An explicit selection needs the highest-k policy")
        return solve_selection(pmf, policy.selection, rate, config.solver)
    return solve_policy(
        policy.name,
        pmf,
        _resolve_k(config, pmf),
        rate,
        alpha=policy.alpha,
        empty_length=policy.empty_length,
        settings=config.solver,
    )


def cmd_solve(config: RunConfig) -> int:
    """Solve for the optimal codebook at every configured arrival rate."""
    pmf = config.source.load_pmf()
    for rate in config.lambdas:
        solution = _solve(config, pmf, rate)
        record = solution.as_dict()
        record["kkt_max_residual"] = float(np.max(np.abs(kkt_residuals(solution))))
        if config.policy.selection is None:
            _, shannon_age = shannon_solution(
                config.policy.name,
                pmf,
                _resolve_k(config, pmf),
                rate,
                alpha=config.policy.alpha,
                empty_length=config.policy.empty_length,
            )
            record["shannon_age"] = shannon_age
        stem = CODEBOOK_FILENAME.removesuffix(".json")
        path = _output_path(config, stem, "json", _lambda_label(config, rate))
        write_json(path, record)
        print(format_float(solution.theta))
    return EXIT_OK


def _report_sweep(label: str, result: SweepResult) -> None:
    print(
        f"{label}: argmin {result.parameter}={format_float(result.argmin_value)} "
        f"age={format_float(result.argmin_age)}"
    )


def _finish_sweep(
    config: RunConfig, stem: str, series: dict[str, SweepResult]
) -> int:
    for label, result in series.items():
        path_label = label if len(series) > 1 else None
        write_sweep_csv(_output_path(config, stem, "csv", path_label), result)
        _report_sweep(label, result)
    if config.emit_plot_data:
        write_plot_data(_output_path(config, f"plot_{stem}", "csv", None), series)
    if any(result.failures for result in series.values()):
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_sweep_k(config: RunConfig) -> int:
    """Sweep k at every configured arrival rate."""
    pmf = config.source.load_pmf()
    policy = config.policy
    series = {
        series_label("lambda", rate): sweep_k(
            pmf,
            rate,
            policy.name,
            config.grids.k_range,
            config.solver,
            alpha=policy.alpha,
            empty_length=policy.empty_length,
            jobs=config.jobs,
        )
        for rate in config.lambdas
    }
    return _finish_sweep(config, "sweep_k", series)


def cmd_sweep_alpha(config: RunConfig) -> int:
    """Sweep alpha of the randomized policy at every configured arrival rate."""
    pmf = config.source.load_pmf()
    k = _resolve_k(config, pmf)
    series = {
        series_label("lambda", rate): sweep_alpha(
            pmf, k, rate, config.grids.alpha, config.solver, jobs=config.jobs
        )
        for rate in config.lambdas
    }
    return _finish_sweep(config, "sweep_alpha", series)


def cmd_sweep_empty(config: RunConfig) -> int:
    """Sweep the empty-symbol length for every configured k and arrival rate."""
    pmf = config.source.load_pmf()
    ks = config.grids.k
    if ks is None:
        if config.policy.k is None:
            raise InvalidConfig("sweep-empty needs policy.k or grids.k")
        ks = (config.policy.k,)
    series: dict[str, SweepResult] = {}
    for rate in config.lambdas:
        for k in ks:
            label = series_label("k", k)
            if len(config.lambdas) > 1:
                label = f"{series_label('lambda', rate)}_{label}"
            series[label] = sweep_empty_length(
                pmf, k, rate, config.grids.empty_length, config.solver, jobs=config.jobs
            )
    return _finish_sweep(config, "sweep_empty_length", series)


def cmd_select(config: RunConfig) -> int:
    """Search every k-subset for the lowest optimal age."""
    pmf = config.source.load_pmf()
    if config.policy.k is None:
        raise InvalidConfig("select needs policy.k")
    status = EXIT_OK
    stem = SELECTION_FILENAME.removesuffix(".csv")
    for rate in config.lambdas:
        result = best_selection(
            pmf, config.policy.k, rate, config.solver, top=config.top, jobs=config.jobs
        )
        write_selection_csv(
            _output_path(config, stem, "csv", _lambda_label(config, rate)), result
        )
        print(
            f"{result.selection},{format_float(result.effective_rate)},"
            f"{format_float(result.age)}"
        )
        if result.failures:
            status = EXIT_PARTIAL
    return status


def _analytical_age(
    config: RunConfig, pmf: Pmf, lengths: np.ndarray, rate: float
) -> float:
    policy = config.policy
    if policy.selection is not None:
        lm = length_moments(lengths, conditional_subset(pmf, policy.selection))
        return age_policy1(lm, head_mass(pmf, policy.selection), rate)
    return evaluate_age(
        policy.name,
        pmf,
        lengths,
        rate,
        k=_resolve_k(config, pmf),
        alpha=policy.alpha,
        empty_length=policy.empty_length,
    )


def cmd_simulate(config: RunConfig) -> int:
    """Simulate the configured policy with solved or supplied lengths."""
    pmf = config.source.load_pmf()
    policy = config.policy
    sim = config.simulation
    stem = SIMULATION_FILENAME.removesuffix(".json")
    for rate in config.lambdas:
        if policy.lengths is not None:
            lengths = np.asarray(policy.lengths, dtype=float)
        else:
            lengths = _solve(config, pmf, rate).lengths
        sim_config = SimConfig(
            policy=policy.name,
            pmf=pmf,
            lengths=lengths,
            arrival_rate=rate,
            k=None if policy.selection is not None else _resolve_k(config, pmf),
            alpha=policy.alpha,
            empty_length=policy.empty_length,
            selection=policy.selection,
            cycles=sim.cycles,
            seed=sim.seed,
            block_size=sim.block_size,
        )
        estimate = simulate(sim_config, jobs=config.jobs)
        record: dict[str, Any] = {
            "estimate": estimate.as_dict(),
            "analytical_age": _analytical_age(config, pmf, lengths, rate),
            "lambda": rate,
            "lengths": lengths,
            "config": config.as_dict(),
        }
        label = _lambda_label(config, rate)
        if sim.trajectory:
            trajectory = simulate_trajectory(sim_config, sim.horizon)
            record["trajectory"] = trajectory.as_dict()
            events_stem = EVENTS_FILENAME.removesuffix(".csv")
            write_events_csv(
                _output_path(config, events_stem, "csv", label), trajectory.events
            )
        write_json(_output_path(config, stem, "json", label), record)
        print(
            f"{format_float(estimate.mean_age)} +/- "
            f"{format_float(estimate.half_width_95)}"
        )
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "solve": cmd_solve,
    "sweep-k": cmd_sweep_k,
    "sweep-alpha": cmd_sweep_alpha,
    "sweep-empty": cmd_sweep_empty,
    "select": cmd_select,
    "simulate": cmd_simulate,
}


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--pmf", help="pmf file, one probability per line")
    common.add_argument("--sort", action="store_true", default=None)
    common.add_argument("--family", choices=FAMILIES)
    common.add_argument("--n", type=int)
    common.add_argument("--s", type=float)
    common.add_argument("--policy", choices=[str(p) for p in Policy])
    common.add_argument("--k", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--empty-len", type=float, dest="empty_length")
    common.add_argument("--selection", help="dash-joined indices, e.g. 1-7-8-9-10")
    common.add_argument("--lengths", type=float, nargs="+")
    common.add_argument("--lambda", type=float, nargs="+", dest="lambdas")
    common.add_argument("--k-range", type=int, nargs=2, metavar=("LOW", "HIGH"))
    common.add_argument("--alpha-grid", type=float, nargs="+")
    common.add_argument("--empty-grid", type=float, nargs="+")
    common.add_argument("--k-list", type=int, nargs="+")
    common.add_argument("--cycles", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--block-size", type=int)
    common.add_argument("--horizon", type=float)
    common.add_argument("--trajectory", action="store_true", default=None)
    common.add_argument("--jobs", type=int)
    common.add_argument("--out")
    common.add_argument("--emit-plot-data", action="store_true", default=None)
    common.add_argument("--top", type=int)
    common.add_argument("-v", "--verbose", action="count", default=0)
    return common


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per workflow."""
    parser = argparse.ArgumentParser(
        prog="timely-coding",
        description="Age-optimal selective encoding: solve, sweep, select, simulate",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_arguments()
    for name, func in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=func.__doc__)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Map command-line flags onto configuration keys."""
    return {
        CONF_SOURCE: {
            CONF_FAMILY: args.family,
            CONF_N: args.n,
            CONF_S: args.s,
            CONF_FILE: args.pmf,
            CONF_SORT: args.sort,
        },
        CONF_POLICY: {
            CONF_NAME: args.policy,
            CONF_K: args.k,
            CONF_ALPHA: args.alpha,
            CONF_EMPTY_LENGTH: args.empty_length,
            CONF_SELECTION: args.selection,
            CONF_LENGTHS: args.lengths,
        },
        CONF_LAMBDA: args.lambdas,
        CONF_GRIDS: {
            CONF_K_RANGE: args.k_range,
            CONF_ALPHA: args.alpha_grid,
            CONF_EMPTY_LENGTH: args.empty_grid,
            CONF_K: args.k_list,
        },
        CONF_SIMULATION: {
            CONF_CYCLES: args.cycles,
            CONF_SEED: args.seed,
            CONF_BLOCK_SIZE: args.block_size,
            CONF_HORIZON: args.horizon,
            CONF_TRAJECTORY: args.trajectory,
        },
        CONF_JOBS: args.jobs,
        CONF_OUT: args.out,
        CONF_EMIT_PLOT_DATA: args.emit_plot_data,
        CONF_TOP: args.top,
    }


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Run one command and return its exit status."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)

    try:
        base = load_config_file(args.config) if args.config is not None else {}
        config = validate_config(merge_overrides(base, _overrides(args)))
        _LOGGER.info("Running %s", args.command)
        status = COMMANDS[args.command](config)
    except TimelyCodingError as err:
        _LOGGER.debug("Command failed", exc_info=True)
        print(
            json.dumps({"error": type(err).__name__, "message": str(err)}),
            file=sys.stderr,
        )
        return EXIT_ERROR

    _LOGGER.info("Finished %s with status %d", args.command, status)
    return status


if __name__ == "__main__":
    sys.exit(main())
