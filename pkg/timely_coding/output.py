"""Result files: codebook JSON, sweep and selection CSVs, simulation summaries."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
import csv
import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from .const import FLOAT_SIGNIFICANT_DIGITS
from .search import SelectionResult, SweepResult
from .simulator import TrajectoryEvent

_LOGGER = logging.getLogger(__name__)

SWEEP_COLUMNS = ("param", "age", "converged", "iterations")
SELECTION_COLUMNS = ("selection", "lambda_e", "age")
PLOT_COLUMNS = ("series", "param", "age")
EVENT_COLUMNS = ("time", "generated", "symbol", "length", "empty", "resets", "age")


def format_float(value: float) -> str:
    """Return ``value`` with 12 significant digits."""
    return f"{value:.{FLOAT_SIGNIFICANT_DIGITS}g}"


def _rounded(value: Any) -> Any:
    """Round every float in a JSON-ready structure to 12 significant digits."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float | np.floating):
        number = float(value)
        return float(format_float(number)) if math.isfinite(number) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_rounded(v) for v in value.tolist()]
    if isinstance(value, Mapping):
        return {str(k): _rounded(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_rounded(v) for v in value]
    return value


def dumps_json(data: Mapping[str, Any]) -> str:
    """Serialize with sorted keys and a trailing newline."""
    return json.dumps(_rounded(data), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, data: Mapping[str, Any]) -> Path:
    """Write ``data`` as JSON, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(data), encoding="utf-8")
    _LOGGER.debug("Wrote %s", path)
    return path


def _write_rows(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    _LOGGER.debug("Wrote %s", path)
    return path


def _param_text(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else format_float(value)


def write_sweep_csv(path: Path, result: SweepResult) -> Path:
    """Write one row per attempted grid point; failed points have no age."""
    rows = [
        (
            _param_text(point.param),
            "" if point.age is None else format_float(point.age),
            "true" if point.converged else "false",
            str(point.iterations),
        )
        for point in result.points
    ]
    return _write_rows(path, SWEEP_COLUMNS, rows)


def write_plot_data(path: Path, series: Mapping[str, SweepResult]) -> Path:
    """Write every converged point of several sweeps as one tidy table."""
    rows = [
        (label, _param_text(param), format_float(age))
        for label, result in series.items()
        for param, age in zip(result.grid, result.ages)
    ]
    return _write_rows(path, PLOT_COLUMNS, rows)


def write_selection_csv(path: Path, result: SelectionResult) -> Path:
    """Write the ranked subsets, best first."""
    rows = [
        (str(row.selection), format_float(row.effective_rate), format_float(row.age))
        for row in result.ranked_table
    ]
    return _write_rows(path, SELECTION_COLUMNS, rows)


def write_events_csv(path: Path, events: Iterable[TrajectoryEvent]) -> Path:
    """Write a trajectory event log."""
    rows = [
        (
            format_float(event.time),
            format_float(event.generated),
            str(event.symbol),
            format_float(event.length),
            "true" if event.empty else "false",
            "true" if event.resets else "false",
            format_float(event.age),
        )
        for event in events
    ]
    return _write_rows(path, EVENT_COLUMNS, rows)


def series_label(name: str, value: float) -> str:
    """Return a file-name-safe label such as ``lambda_0.3``."""
    return f"{name}_{_param_text(value)}"
