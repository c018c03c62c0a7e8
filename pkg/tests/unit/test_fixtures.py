"""Unit tests for closed forms, synthetic fields and boundary profiles."""

import numpy as np
import pytest

from core import ValidationError
from core.artifacts import write_field
from core.fixtures import (
    boundary_data,
    closed_form_solution,
    free_boundary_error,
    half_space,
    paraboloid,
    radial,
    synthetic_field,
)
from core.grid import ScalarField, build_grid

pytestmark = pytest.mark.unit


def test_half_space_profile():
    coords = np.array([[0.0, -0.5], [0.0, 0.5], [1.0, 1.0]])
    np.testing.assert_allclose(half_space(coords, 0.5), [0.0, 0.125, 0.5])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_radial_vanishes_on_the_ball(n):
    coords = np.zeros((3, n))
    coords[:, 0] = [0.0, 0.4, 0.8]
    values = radial(coords, 0.4)
    assert values[0] == 0.0
    assert values[1] == pytest.approx(0.0, abs=1e-15)
    assert values[2] > 0.0


def test_radial_one_dimension_is_quadratic():
    coords = np.array([[0.9], [-0.9]])
    np.testing.assert_allclose(radial(coords, 0.4), [0.125, 0.125])


def test_radial_requires_positive_radius():
    with pytest.raises(ValidationError):
        radial(np.zeros((1, 2)), 0.0)


def test_paraboloid_has_unit_laplacian():
    coords = np.array([[1.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(paraboloid(coords), [0.25, 0.5])


def test_synthetic_field_kinds(grid_2d):
    quartic = synthetic_field(grid_2d, "quartic")
    assert quartic.values.min() == 0.0
    assert quartic.max_abs() == pytest.approx(1.0)
    line = synthetic_field(grid_2d, "line_contact")
    assert np.count_nonzero(line.values == 0.0) == grid_2d.nodes_per_axis


def test_synthetic_field_unknown_kind(grid_2d):
    with pytest.raises(ValidationError, match="unknown synthetic field"):
        synthetic_field(grid_2d, "saddle")


def test_boundary_data_is_zero_inside(grid_2d):
    psi = boundary_data(grid_2d, "half_space", {"coefficient": 1.0})
    assert np.all(psi[grid_2d.interior_mask] == 0.0)
    top = grid_2d.coordinates[:, 1] == 1.0
    np.testing.assert_allclose(psi[top], 1.0)


def test_boundary_data_unknown_profile(grid_2d):
    with pytest.raises(ValidationError, match="unknown boundary profile"):
        boundary_data(grid_2d, "spiral")


def test_custom_boundary_reads_field_file(tmp_path, grid_1d):
    field = ScalarField.from_function(grid_1d, lambda x: x[:, 0] ** 2)
    path = write_field(tmp_path / "psi.txt", field)
    psi = boundary_data(grid_1d, "custom", {"path": str(path)})
    assert psi[0] == pytest.approx(1.0)
    assert psi[-1] == pytest.approx(1.0)
    assert np.all(psi[1:-1] == 0.0)


def test_custom_boundary_rejects_other_grid(tmp_path, grid_1d):
    other = build_grid(1, 1.0, 33)
    path = write_field(tmp_path / "psi.txt", ScalarField.zeros(other))
    with pytest.raises(ValidationError, match="expected"):
        boundary_data(grid_1d, "custom", {"path": str(path)})


def test_custom_boundary_requires_path(grid_1d):
    with pytest.raises(ValidationError, match="path"):
        boundary_data(grid_1d, "custom", {})


def test_closed_form_for_matching_data(grid_1d):
    exact = closed_form_solution(
        grid_1d, "half_space", {"coefficient": 0.5}, "identity", {}, "constant", {"value": 1.0}
    )
    assert exact is not None
    np.testing.assert_allclose(exact.values, 0.5 * np.maximum(grid_1d.axis, 0.0) ** 2)


def test_closed_form_needs_compatible_data(grid_1d):
    # f = 2 does not match the coefficient 0.5
    assert (
        closed_form_solution(
            grid_1d, "half_space", {"coefficient": 0.5}, "identity", {}, "constant", {"value": 2.0}
        )
        is None
    )
    assert (
        closed_form_solution(
            grid_1d, "radial", {"r0": 0.4}, "checkerboard", {"t": 0.3}, "constant", {"value": 1.0}
        )
        is None
    )
    constant_identity = closed_form_solution(
        grid_1d, "radial", {"r0": 0.4}, "constant", {"matrix": [[1.0]]}, "constant", {}
    )
    assert constant_identity is not None


def test_free_boundary_error():
    points = np.array([[0.1, 0.0], [0.2, 0.03125]])
    assert free_boundary_error(points, "half_space", {}) == pytest.approx(0.03125)
    ring = np.array([[0.5, 0.0]])
    assert free_boundary_error(ring, "radial", {"r0": 0.4}) == pytest.approx(0.1)
    assert free_boundary_error(np.empty((0, 2)), "radial", {}) is None
    assert free_boundary_error(ring, "zero", {}) is None
