"""Unit tests for run configuration."""

import json
from pathlib import Path

import pytest

from config.run_config import (
    apply_override,
    dump_run_config,
    has_key,
    load_run_config,
    parse_run_config,
    parse_value,
    parse_values,
)
from core import ConfigError

pytestmark = pytest.mark.unit

REPO_ROOT = Path(__file__).resolve().parents[2]


@pytest.fixture
def config(half_line_config_data):
    return parse_run_config(half_line_config_data)


def test_defaults_fill_missing_blocks():
    config = parse_run_config({"grid": {"n": 2, "nodes_per_axis": 33}})
    assert config.grid.half_width == 1.0
    assert config.coefficients.family == "identity"
    assert config.f.family == "constant"
    assert config.boundary.profile == "zero"
    assert config.solver.method == "psor"
    assert config.solver.tol == 1e-10
    assert config.suites == []
    assert config.synthetic is None


@pytest.mark.parametrize(
    ("data", "key"),
    [
        ({"grid": {"n": 4, "nodes_per_axis": 33}}, "grid.n"),
        ({"grid": {"n": 2, "nodes_per_axis": 5}}, "grid.nodes_per_axis"),
        ({"grid": {"n": 2, "nodes_per_axis": 33, "spacing": 0.1}}, "grid.spacing"),
        ({"grid": {"n": 2, "nodes_per_axis": 33}, "solver": {"tol": 0}}, "solver.tol"),
        ({"grid": {"n": 2, "nodes_per_axis": 33}, "solver": {"method": "newton"}}, "solver.method"),
        (
            {"grid": {"n": 2, "nodes_per_axis": 33}, "coefficients": {"family": "identity", "params": {"t": 1}}},
            "coefficients.params",
        ),
        ({"grid": {"n": 2, "nodes_per_axis": 33}, "suites": [{"name": "telepathy"}]}, "suites.0.name"),
        (
            {"grid": {"n": 2, "nodes_per_axis": 33}, "suites": [{"name": "uniqueness", "params": {"pairs": 3}}]},
            "suites.0.params",
        ),
        ({"grid": {"n": 2, "nodes_per_axis": 33}, "boundary": {"profile": "custom"}}, "boundary.params"),
        ({"grid": {"n": 2, "nodes_per_axis": 33}, "unknown": 1}, "unknown"),
    ],
)
def test_errors_name_the_offending_key(data, key):
    with pytest.raises(ConfigError) as exc_info:
        parse_run_config(data)
    assert exc_info.value.message.startswith(f"{key}: ")
    assert exc_info.value.exit_code == 2


def test_suite_names_are_case_insensitive():
    config = parse_run_config({"grid": {"n": 1, "nodes_per_axis": 33}, "suites": [{"name": "Uniqueness"}]})
    assert config.suites[0].name == "uniqueness"


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_run_config(broken)


def test_dump_and_reload(tmp_path, config):
    path = tmp_path / "out" / "config.json"
    text = dump_run_config(config, path)
    assert path.read_text() == text
    assert load_run_config(path) == config


@pytest.mark.parametrize("path", sorted((REPO_ROOT / "config" / "runs").glob("*.json")), ids=lambda p: p.stem)
def test_shipped_run_configs_are_valid(path):
    load_run_config(path)


def test_template_is_valid():
    load_run_config(REPO_ROOT / "config" / "run_template.json")


def test_parse_value():
    assert parse_value("1/64") == 0.015625
    assert parse_value("0.3") == 0.3
    assert parse_value("4") == 4
    assert parse_value("true") is True
    assert parse_value("active_set") == "active_set"
    assert parse_value("[1, 2]") == [1, 2]


def test_parse_values():
    assert parse_values("1/32, 1/64,") == [0.03125, 0.015625]
    assert parse_values("") == []


def test_has_key(config):
    assert has_key(config, "grid.h")
    assert has_key(config, "solver.tol")
    assert has_key(config, "suites.0.params.competitors")
    assert has_key(config, "boundary.params.coefficient")
    # new names are allowed only inside params blocks
    assert has_key(config, "suites.1.params.point")
    assert not has_key(config, "solver.omega")
    assert not has_key(config, "suites.9.name")


def test_override_grid_spacing(config):
    updated = apply_override(config, "grid.h", 1 / 64)
    assert updated.grid.nodes_per_axis == 129
    assert config.grid.nodes_per_axis == 65


def test_override_grid_spacing_must_divide_the_box(config):
    with pytest.raises(ConfigError, match="not an integer"):
        apply_override(config, "grid.h", 0.3)
    with pytest.raises(ConfigError, match="positive"):
        apply_override(config, "grid.h", 0)


def test_override_nested_keys(config):
    assert apply_override(config, "solver.method", "active_set").solver.method == "active_set"
    updated = apply_override(config, "suites.0.params.competitors", 5)
    assert updated.suites[0].params == {"competitors": 5}
    assert apply_override(config, "f.params.value", 2.0).f.params == {"value": 2.0}


def test_override_rejects_unknown_keys(config):
    with pytest.raises(ConfigError, match="does not exist"):
        apply_override(config, "solver.omega", 1.2)
    with pytest.raises(ConfigError, match="out of range"):
        apply_override(config, "suites.7.name", "comparison")
    with pytest.raises(ConfigError, match="coefficients.params"):
        apply_override(config, "coefficients.params.t", 0.5)


def test_override_result_is_validated(config):
    with pytest.raises(ConfigError, match="solver.tol"):
        apply_override(config, "solver.tol", -1.0)


def test_config_is_json_serializable(config):
    data = json.loads(dump_run_config(config))
    assert data["grid"]["nodes_per_axis"] == 65
    assert data["suites"][0]["name"] == "uniqueness"
