"""Pytest configuration and shared fixtures."""

import json
import logging
from pathlib import Path

import pytest

from config.settings import reset_settings
from core.cache import get_cache
from core.coeff import make_coefficients
from core.fixtures import boundary_data, synthetic_field
from core.grid import build_grid
from core.logging_config import set_run_id
from core.solver import ObstacleProblemSpec, solve_obstacle
from core.suites import SuiteContext


@pytest.fixture(autouse=True)
def clean_state():
    """Fresh settings, cache and root handlers for every test."""
    reset_settings()
    get_cache().clear()
    yield
    reset_settings()
    set_run_id(None)
    logging.getLogger().handlers.clear()


@pytest.fixture
def grid_1d():
    """h = 1/32 on [-1, 1]."""
    return build_grid(1, 1.0, 65)


@pytest.fixture
def grid_2d():
    """h = 1/32 on [-1, 1]²."""
    return build_grid(2, 1.0, 65)


@pytest.fixture(scope="session")
def half_line_spec():
    """Identity coefficients, f = 1, boundary data of (x⁺)²/2 in 1D."""
    grid = build_grid(1, 1.0, 65)
    return ObstacleProblemSpec(
        grid=grid,
        coefficients=make_coefficients(grid),
        boundary=boundary_data(grid, "half_space", {"coefficient": 0.5}),
    )


@pytest.fixture(scope="session")
def half_line_result(half_line_spec):
    return solve_obstacle(half_line_spec, "psor")


@pytest.fixture(scope="session")
def radial_spec():
    """Radial closed form with r0 = 0.4 on a coarse 2D grid."""
    grid = build_grid(2, 1.0, 33)
    return ObstacleProblemSpec(
        grid=grid,
        coefficients=make_coefficients(grid),
        boundary=boundary_data(grid, "radial", {"r0": 0.4}),
    )


@pytest.fixture(scope="session")
def radial_result(radial_spec):
    return solve_obstacle(radial_spec, "active_set")


@pytest.fixture
def half_line_context(half_line_result, half_line_spec):
    return SuiteContext.from_result(half_line_result, half_line_spec)


@pytest.fixture
def synthetic_context():
    """Factory for contexts of synthetic fields (τ_pos = 0)."""

    def _make(kind: str, n: int = 2, nodes_per_axis: int = 65, **params):
        grid = build_grid(n, 1.0, nodes_per_axis)
        return SuiteContext.from_field(synthetic_field(grid, kind, params), label=kind)

    return _make


@pytest.fixture
def half_line_config_data():
    """Run config of the 1D half-line fixture with the fast suites."""
    return {
        "grid": {"n": 1, "half_width": 1.0, "nodes_per_axis": 65},
        "coefficients": {"family": "identity"},
        "f": {"family": "constant", "params": {"value": 1.0}},
        "boundary": {"profile": "half_space", "params": {"coefficient": 0.5}},
        "solver": {"method": "psor", "tol": 1e-10},
        "suites": [
            {"name": "uniqueness", "params": {"competitors": 20}},
            {"name": "optimal_regularity"},
            {"name": "nondegeneracy"},
            {"name": "alternative"},
        ],
        "seed": 0,
    }


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict to a JSON file and return its path."""

    def _write(data: dict, name: str = "run.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return _write
