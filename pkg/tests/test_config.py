"""Tests for run configuration validation."""

import json
from pathlib import Path

import pytest

from timely_coding.config import (
    InvalidConfig,
    load_config_file,
    merge_overrides,
    validate_config,
)
from timely_coding.const import (
    DEFAULT_CYCLES,
    DEFAULT_KRAFT_TOLERANCE,
    DEFAULT_RANKED_ROWS,
    Policy,
)
from timely_coding.pmf import SelectionSet

ZIPF_SOURCE = {"family": "zipf", "n": 10, "s": 0.4}


def test_minimal_config_gets_defaults() -> None:
    """Only the source is required."""
    config = validate_config({"source": ZIPF_SOURCE})

    assert config.policy.name is Policy.HIGHEST_K
    assert config.lambdas == (1.0,)
    assert config.solver.kraft_tolerance == DEFAULT_KRAFT_TOLERANCE
    assert config.simulation.cycles == DEFAULT_CYCLES
    assert config.simulation.trajectory is False
    assert config.top == DEFAULT_RANKED_ROWS
    assert config.out == Path(".")
    assert config.source.load_pmf().n == 10


def test_full_config() -> None:
    """Every section is parsed into its typed form."""
    config = validate_config(
        {
            "source": {"family": "dyadic", "n": 10},
            "policy": {"name": "empty-noreset", "k": 4, "empty_length": 3},
            "lambda": [0.5, 1, 2],
            "grids": {"k_range": [2, 8], "empty_length": [1, 2, 3], "k": [2, 4]},
            "solver": {"theta_tolerance": 1e-10, "max_outer_iterations": 50},
            "simulation": {"cycles": 1000, "seed": 42, "trajectory": True},
            "jobs": 0,
            "out": "results",
            "emit_plot_data": True,
        }
    )

    assert config.policy.name is Policy.EMPTY_NORESET
    assert config.policy.empty_length == 3.0
    assert config.lambdas == (0.5, 1.0, 2.0)
    assert config.grids.k_range == (2, 8)
    assert config.grids.empty_length == (1.0, 2.0, 3.0)
    assert config.grids.k == (2, 4)
    assert config.solver.theta_tolerance == 1e-10
    assert config.solver.max_outer_iterations == 50
    assert config.simulation.seed == 42
    assert config.simulation.trajectory is True
    assert config.jobs == 0
    assert config.out == Path("results")
    assert config.emit_plot_data is True


def test_scalar_lambda_and_string_selection() -> None:
    """A single rate and a dash-joined selection are accepted."""
    config = validate_config(
        {"source": ZIPF_SOURCE, "lambda": 0.3, "policy": {"selection": "1-7-8"}}
    )

    assert config.lambdas == (0.3,)
    assert config.policy.selection == SelectionSet((1, 7, 8))


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"source": {"family": "zipf", "n": 10}},
        {"source": {"family": "dyadic"}},
        {"source": {"family": "binomial", "n": 10}},
        {"source": {"family": "dyadic", "n": 10, "file": "source.pmf"}},
        {"source": {"file": "does/not/exist.pmf"}},
        {"source": ZIPF_SOURCE, "policy": {"name": "lowest-k"}},
        {"source": ZIPF_SOURCE, "policy": {"alpha": 0}},
        {"source": ZIPF_SOURCE, "policy": {"empty_length": -1}},
        {"source": ZIPF_SOURCE, "policy": {"selection": "1-1"}},
        {"source": ZIPF_SOURCE, "lambda": [0.5, -1]},
        {"source": ZIPF_SOURCE, "lambda": []},
        {"source": ZIPF_SOURCE, "lambda": {"x": 1}},
        {"source": ZIPF_SOURCE, "lambda": "fast"},
        {"source": ZIPF_SOURCE, "grids": {"k_range": ["a", 3]}},
        {"source": ZIPF_SOURCE, "policy": {"name": 3}},
        {"source": ZIPF_SOURCE, "grids": {"k_range": [5, 3]}},
        {"source": ZIPF_SOURCE, "solver": {"kraft_tolerance": 0}},
        {"source": ZIPF_SOURCE, "simulation": {"seed": -1}},
        {"source": ZIPF_SOURCE, "unknown": 1},
    ],
)
def test_invalid_configs(data: dict) -> None:
    """Invalid values are reported as configuration errors."""
    with pytest.raises(InvalidConfig, match="Invalid configuration"):
        validate_config(data)


def test_file_source(tmp_path: Path) -> None:
    """A pmf file source is read and optionally sorted."""
    path = tmp_path / "weights.pmf"
    path.write_text("1\n2\n1\n", encoding="utf-8")

    config = validate_config({"source": {"file": str(path), "sort": True}})

    assert config.source.load_pmf().probs.tolist() == [0.5, 0.25, 0.25]


def test_as_dict_echo() -> None:
    """The echo names the source, the policy and the simulation seed."""
    config = validate_config(
        {"source": ZIPF_SOURCE, "policy": {"name": "randomized", "k": 3, "alpha": 0.5}}
    )

    echo = config.as_dict()

    assert echo["source"] == {"family": "zipf", "n": 10, "s": 0.4, "sort": False}
    assert echo["policy"]["name"] == "randomized"
    assert echo["policy"]["alpha"] == 0.5
    assert echo["lambda"] == [1.0]
    json.dumps(echo)


def test_load_config_file(tmp_path: Path) -> None:
    """JSON objects load; other content is refused."""
    good = tmp_path / "run.json"
    good.write_text(json.dumps({"source": ZIPF_SOURCE}), encoding="utf-8")
    broken = tmp_path / "broken.json"
    broken.write_text("{source:", encoding="utf-8")
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")

    assert load_config_file(good) == {"source": ZIPF_SOURCE}
    with pytest.raises(InvalidConfig, match="not valid JSON"):
        load_config_file(broken)
    with pytest.raises(InvalidConfig, match="JSON object"):
        load_config_file(listing)
    with pytest.raises(InvalidConfig, match="Cannot read"):
        load_config_file(tmp_path / "missing.json")


def test_merge_overrides_is_deep_and_skips_none() -> None:
    """Flags replace single nested keys and unset flags change nothing."""
    base = {"source": ZIPF_SOURCE, "policy": {"name": "randomized", "alpha": 0.5}}

    merged = merge_overrides(
        base, {"policy": {"k": 3, "alpha": None}, "lambda": None, "jobs": 2}
    )

    assert merged["policy"] == {"name": "randomized", "alpha": 0.5, "k": 3}
    assert "lambda" not in merged
    assert merged["jobs"] == 2
    assert base["policy"] == {"name": "randomized", "alpha": 0.5}


@pytest.mark.parametrize(
    "name", ["highest-k", "randomized", "empty-noreset", "empty-reset"]
)
def test_policy_names_become_policies(name: str) -> None:
    """Policy names in the file are turned into Policy members."""
    config = validate_config({"source": ZIPF_SOURCE, "policy": {"name": name}})

    assert config.policy.name is Policy(name)


def test_undecodable_config_file(tmp_path: Path) -> None:
    """A file that is not UTF-8 is reported as unreadable."""
    path = tmp_path / "run.json"
    path.write_bytes(b'{"source": "\xff"}')

    with pytest.raises(InvalidConfig, match="Cannot read"):
        load_config_file(path)
