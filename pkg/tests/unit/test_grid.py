"""Unit tests for grids, fields and node sets."""

import math

import numpy as np
import pytest

from core import PreconditionError, ValidationError
from core.grid import Grid, ScalarField, ball_nodes, build_grid, measure, unit_ball_volume

pytestmark = pytest.mark.unit


def test_spacing_and_shape():
    grid = build_grid(2, 1.0, 65)
    assert grid.spacing == pytest.approx(1 / 32)
    assert grid.shape == (65, 65)
    assert grid.node_count == 65**2
    assert grid.cell_volume == pytest.approx(1 / 32**2)


def test_axis_is_antisymmetric_with_exact_center():
    grid = build_grid(1, 1.0, 65)
    assert grid.axis[32] == 0.0
    np.testing.assert_array_equal(grid.axis, -grid.axis[::-1])
    assert grid.axis[0] == -1.0
    assert grid.axis[-1] == 1.0


def test_coordinates_are_lexicographic():
    grid = build_grid(2, 1.0, 9)
    # axis 0 varies slowest
    assert grid.coordinates[0].tolist() == [-1.0, -1.0]
    assert grid.coordinates[1].tolist() == [-1.0, -0.75]
    assert grid.coordinates[9].tolist() == [-0.75, -1.0]


def test_build_grid_rejects_coarse_resolution():
    with pytest.raises(ValidationError, match="at least 9"):
        build_grid(2, 1.0, 8)


def test_build_grid_rejects_dimension():
    with pytest.raises(ValidationError):
        build_grid(4, 1.0, 17)


def test_grid_rejects_nonpositive_half_width():
    with pytest.raises(ValidationError):
        Grid(dimension=1, half_width=0.0, nodes_per_axis=9)


def test_boundary_mask():
    grid = build_grid(2, 1.0, 9)
    assert int(grid.boundary_mask.sum()) == 81 - 49
    assert grid.interior_indices.size == 49
    assert not np.any(grid.boundary_mask[grid.interior_indices])


def test_trapezoid_weights():
    grid = build_grid(2, 1.0, 9)
    weights = grid.trapezoid_weights.reshape(grid.shape)
    assert weights[0, 0] == 0.25
    assert weights[0, 4] == 0.5
    assert weights[4, 4] == 1.0


def test_nearest_node():
    grid = build_grid(2, 1.0, 9)
    index = grid.nearest_node([0.01, -0.74])
    assert grid.coordinates[index].tolist() == [0.0, -0.75]


def test_ball_nodes_uses_strict_inequality():
    grid = build_grid(1, 1.0, 9)
    nodes = ball_nodes(grid, [0.0], 0.5)
    # nodes at ±0.5 lie on the sphere and are excluded
    assert grid.coordinates[nodes, 0].tolist() == [-0.25, 0.0, 0.25]


def test_ball_nodes_sorted_and_inside():
    grid = build_grid(2, 1.0, 17)
    center = np.array([0.1, -0.2])
    nodes = ball_nodes(grid, center, 0.3)
    assert np.all(np.diff(nodes) > 0)
    distances = np.linalg.norm(grid.coordinates[nodes] - center, axis=1)
    assert np.all(distances < 0.3)
    outside = np.setdiff1d(np.arange(grid.node_count), nodes)
    assert np.all(np.linalg.norm(grid.coordinates[outside] - center, axis=1) >= 0.3)


def test_ball_nodes_rejects_bad_radius():
    grid = build_grid(1, 1.0, 9)
    with pytest.raises(PreconditionError):
        ball_nodes(grid, [0.0], 0.0)


def test_measure_of_mask_and_indices():
    grid = build_grid(2, 1.0, 9)
    mask = np.zeros(grid.node_count, dtype=bool)
    mask[:4] = True
    assert measure(grid, mask) == pytest.approx(4 * 0.25**2)
    assert measure(grid, np.array([1, 1, 2])) == pytest.approx(2 * 0.25**2)


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_scalar_field_is_read_only():
    grid = build_grid(1, 1.0, 9)
    field = ScalarField.from_function(grid, lambda x: x[:, 0] ** 2)
    assert field.max_abs() == 1.0
    with pytest.raises(ValueError):
        field.values[0] = 5.0


def test_scalar_field_size_mismatch():
    grid = build_grid(1, 1.0, 9)
    with pytest.raises(ValidationError):
        ScalarField(grid, np.zeros(8))
