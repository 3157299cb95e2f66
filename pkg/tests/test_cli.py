"""Tests for the command line."""

import json
from pathlib import Path
from typing import Any

import pytest

from timely_coding import search
from timely_coding.cli import build_parser, main
from timely_coding.const import EXIT_ERROR, EXIT_OK, EXIT_PARTIAL
from timely_coding.exceptions import SolverError


def test_solve_prints_optimal_age(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """Four equiprobable symbols at unit rate have optimal age 11/3."""
    status = main(
        [
            "solve",
            "--family",
            "uniform",
            "--n",
            "4",
            "--lambda",
            "1",
            "--out",
            str(tmp_path),
        ]
    )

    assert status == EXIT_OK
    assert capsys.readouterr().out == "3.66666666667\n"
    record = json.loads((tmp_path / "codebook.json").read_text(encoding="utf-8"))
    assert record["lengths"] == [2.0, 2.0, 2.0, 2.0]
    assert record["policy"] == "highest-k"
    assert record["parameters"]["k"] == 4
    assert record["shannon_age"] == pytest.approx(11 / 3)
    assert record["kkt_max_residual"] <= 1e-8


def test_solve_writes_one_codebook_per_rate(tmp_path: Path) -> None:
    """Several arrival rates get labelled files."""
    status = main(
        [
            "solve",
            "--family",
            "dyadic",
            "--n",
            "10",
            "--k",
            "5",
            "--lambda",
            "0.5",
            "1",
            "--out",
            str(tmp_path),
        ]
    )

    assert status == EXIT_OK
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "codebook_lambda_0.5.json",
        "codebook_lambda_1.json",
    ]


def test_invalid_input_reports_json_error(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """A zipf source without exponent fails with a JSON error on stderr."""
    status = main(["solve", "--family", "zipf", "--n", "10", "--out", str(tmp_path)])

    assert status == EXIT_ERROR
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "InvalidConfig"
    assert "source.s" in error["message"]


def test_empty_policy_needs_k(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """Empty-symbol policies have no default k."""
    status = main(
        [
            "solve",
            "--family",
            "dyadic",
            "--n",
            "10",
            "--policy",
            "empty-reset",
            "--out",
            str(tmp_path),
        ]
    )

    assert status == EXIT_ERROR
    assert "policy.k" in capsys.readouterr().err


def test_config_file_with_flag_overrides(tmp_path: Path) -> None:
    """Flags override single keys of the configuration file."""
    config = tmp_path / "run.json"
    config.write_text(
        json.dumps(
            {
                "source": {"family": "zipf", "n": 10, "s": 0.4},
                "policy": {"name": "randomized", "k": 5, "alpha": 0.5},
                "lambda": 2.0,
            }
        ),
        encoding="utf-8",
    )

    status = main(
        ["solve", "--config", str(config), "--k", "2", "--out", str(tmp_path)]
    )

    assert status == EXIT_OK
    record = json.loads((tmp_path / "codebook.json").read_text(encoding="utf-8"))
    assert record["policy"] == "randomized"
    assert record["parameters"]["k"] == 2
    assert record["parameters"]["alpha"] == 0.5
    assert record["parameters"]["lambda"] == 2.0
    assert len(record["lengths"]) == 10


def test_sweep_k_singleton(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """A one-point k range writes a one-row table."""
    status = main(
        [
            "sweep-k",
            "--family",
            "uniform",
            "--n",
            "4",
            "--k-range",
            "4",
            "4",
            "--out",
            str(tmp_path),
        ]
    )

    assert status == EXIT_OK
    lines = (tmp_path / "sweep_k.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "param,age,converged,iterations"
    assert len(lines) == 2
    assert lines[1].startswith("4,3.66666666667,true,")
    assert "argmin k=4" in capsys.readouterr().out


def test_sweep_empty_series_and_plot_data(tmp_path: Path) -> None:
    """Each k gets its own table and the plot data joins them."""
    status = main(
        [
            "sweep-empty",
            "--family",
            "dyadic",
            "--n",
            "10",
            "--lambda",
            "5",
            "--k-list",
            "2",
            "4",
            "--empty-grid",
            "1",
            "2",
            "3",
            "--emit-plot-data",
            "--out",
            str(tmp_path),
        ]
    )

    assert status == EXIT_OK
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "plot_sweep_empty_length.csv",
        "sweep_empty_length_k_2.csv",
        "sweep_empty_length_k_4.csv",
    ]
    plot = (tmp_path / "plot_sweep_empty_length.csv").read_text(encoding="utf-8")
    assert len(plot.splitlines()) == 7
    assert "k_4,3," in plot


def test_failed_sweep_points_give_partial_status(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """A sweep with excluded points exits with the partial-failure status."""
    real_solve = search.solve_policy

    def flaky_solve(policy: Any, pmf: Any, k: int, *args: Any, **kwargs: Any) -> Any:
        if k == 3:
            raise SolverError("did not converge")
        return real_solve(policy, pmf, k, *args, **kwargs)

    monkeypatch.setattr(search, "solve_policy", flaky_solve)
    status = main(
        ["sweep-k", "--family", "dyadic", "--n", "6", "--out", str(tmp_path)]
    )

    assert status == EXIT_PARTIAL
    lines = (tmp_path / "sweep_k.csv").read_text(encoding="utf-8").splitlines()
    assert lines[3] == "3,,false,0"


def test_select(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """The best subset is printed and the ranking written."""
    status = main(
        [
            "select",
            "--family",
            "dyadic",
            "--n",
            "6",
            "--k",
            "6",
            "--top",
            "3",
            "--out",
            str(tmp_path),
        ]
    )

    assert status == EXIT_OK
    selection, rate, _ = capsys.readouterr().out.strip().split(",")
    assert selection == "1-2-3-4-5-6"
    assert rate == "1"
    lines = (tmp_path / "selection.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "selection,lambda_e,age"
    assert len(lines) == 2


def test_simulate_is_deterministic(tmp_path: Path) -> None:
    """The same seed gives byte-identical results."""
    args = [
        "simulate",
        "--family",
        "dyadic",
        "--n",
        "10",
        "--k",
        "5",
        "--cycles",
        "20000",
        "--seed",
        "3",
    ]

    assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([*args, "--out", str(tmp_path / "b"), "--jobs", "2"]) == EXIT_OK

    first = (tmp_path / "a" / "simulation.json").read_bytes()
    assert first == (tmp_path / "b" / "simulation.json").read_bytes()
    record = json.loads(first)
    assert record["estimate"]["cycles"] == 20000
    assert record["estimate"]["seed"] == 3
    assert record["analytical_age"] == pytest.approx(
        record["estimate"]["mean_age"], abs=3 * record["estimate"]["half_width_95"]
    )


def test_simulate_with_supplied_lengths_and_trajectory(tmp_path: Path) -> None:
    """Given lengths skip the solver; the trajectory adds an event log."""
    status = main(
        [
            "simulate",
            "--family",
            "dyadic",
            "--n",
            "3",
            "--policy",
            "empty-noreset",
            "--k",
            "1",
            "--empty-len",
            "1",
            "--lengths",
            "1",
            "--cycles",
            "1000",
            "--trajectory",
            "--horizon",
            "100",
            "--out",
            str(tmp_path),
        ]
    )

    assert status == EXIT_OK
    record = json.loads((tmp_path / "simulation.json").read_text(encoding="utf-8"))
    assert record["lengths"] == [1.0]
    assert record["trajectory"]["horizon"] == 100.0
    events = (tmp_path / "events.csv").read_text(encoding="utf-8").splitlines()
    assert events[0] == "time,generated,symbol,length,empty,resets,age"


def test_every_command_is_registered() -> None:
    """The parser knows every workflow."""
    parser = build_parser()

    commands = ("solve", "sweep-k", "sweep-alpha", "sweep-empty", "select", "simulate")
    for command in commands:
        assert parser.parse_args([command]).command == command


def test_undecodable_pmf_file_reports_json_error(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """A pmf file that is not UTF-8 exits with the error status."""
    path = tmp_path / "binary.pmf"
    path.write_bytes(b"\xff\xfe\x00\x01")

    status = main(["solve", "--pmf", str(path), "--out", str(tmp_path)])

    assert status == EXIT_ERROR
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "PmfParseError"
