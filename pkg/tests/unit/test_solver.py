"""Unit tests for assembly, the LCP solvers and the equivalence check."""

import numpy as np
import pytest

from core import NonConvergenceError, PreconditionError, ValidationError
from core import solver
from core.coeff import certify, make_coefficients
from core.exceptions import UnsupportedCoefficientsError
from core.fb import extract_geometry
from core.fixtures import boundary_data, free_boundary_error, half_space, radial
from core.grid import Grid, ScalarField, build_grid
from core.solver import (
    ObstacleProblemSpec,
    SolverMethod,
    constant_reference_solve,
    energy,
    energy_matrix,
    equivalence_check,
    solve_obstacle,
)
from experiments.convergence import convergence_orders

pytestmark = pytest.mark.unit


def test_energy_matrix_is_symmetric(grid_2d):
    coefficients = make_coefficients(grid_2d, "smooth_oscillation", {"t": 0.3})
    M = energy_matrix(grid_2d, coefficients)
    assert abs(M - M.T).max() == 0


def test_one_dimensional_stencil(half_line_spec):
    op = half_line_spec.operator
    h = half_line_spec.grid.spacing
    np.testing.assert_allclose(op.K.diagonal(), 2 / h**2)
    assert op.K[1, 0] == pytest.approx(-1 / h**2)


def test_variable_off_diagonal_is_unsupported():
    grid = build_grid(2, 1.0, 9)
    s = 0.1 * grid.coordinates[:, 0]
    matrices = np.zeros((grid.node_count, 2, 2))
    matrices[:, 0, 0] = matrices[:, 1, 1] = 1.0
    matrices[:, 0, 1] = matrices[:, 1, 0] = s
    coefficients = certify(grid, matrices, np.ones(grid.node_count))
    with pytest.raises(UnsupportedCoefficientsError):
        energy_matrix(grid, coefficients)


def test_spec_rejects_negative_boundary(grid_1d):
    psi = -np.ones(grid_1d.node_count)
    with pytest.raises(ValidationError, match="nonnegative"):
        ObstacleProblemSpec(grid_1d, make_coefficients(grid_1d), psi)


def test_spec_ignores_interior_boundary_entries(grid_1d):
    psi = np.ones(grid_1d.node_count)
    spec = ObstacleProblemSpec(grid_1d, make_coefficients(grid_1d), psi)
    assert spec.boundary[grid_1d.interior_mask].sum() == 0.0
    assert spec.boundary[grid_1d.boundary_mask].tolist() == [1.0, 1.0]


@pytest.mark.parametrize("method", ["psor", "active_set"])
def test_half_line_is_solved_exactly(half_line_spec, method):
    result = solve_obstacle(half_line_spec, method)
    exact = half_space(half_line_spec.grid.coordinates, 0.5)
    assert result.converged
    assert result.method == method
    assert result.residual <= result.tolerance
    assert np.all(result.w.values >= 0)
    assert np.max(np.abs(result.w.values - exact)) <= 1e-8


def test_residual_target_scales_with_f(grid_1d):
    coefficients = make_coefficients(grid_1d, rhs_params={"value": 3.0})
    spec = ObstacleProblemSpec(grid_1d, coefficients, boundary_data(grid_1d, "half_space", {"coefficient": 1.5}))
    result = solve_obstacle(spec)
    assert result.tolerance == pytest.approx(3e-10)


def test_zero_boundary_gives_zero_solution(grid_2d):
    spec = ObstacleProblemSpec(grid_2d, make_coefficients(grid_2d), np.zeros(grid_2d.node_count))
    result = solve_obstacle(spec, "active_set")
    assert result.iterations == 0
    assert result.residual == 0.0
    assert result.w.max_abs() == 0.0
    assert result.positive.size == 0


def test_nonconvergence_carries_result(half_line_spec):
    spec = ObstacleProblemSpec(
        half_line_spec.grid, half_line_spec.coefficients, half_line_spec.boundary, max_iter=1
    )
    with pytest.raises(NonConvergenceError) as exc_info:
        solve_obstacle(spec, "psor")
    error = exc_info.value
    assert error.exit_code == 3
    assert error.result is not None
    assert not error.result.converged
    assert error.result.iterations == 1
    assert error.details["residual"] > error.details["target"]


def test_active_set_cycle_is_reported(monkeypatch):
    # One unknown, K = 2, F = 1 − 4 < 0; an inner solve ten times too large
    # flips the active set to {0} and the exact w = 0 step flips it back.
    grid = Grid(dimension=1, half_width=1.0, nodes_per_axis=3)
    spec = ObstacleProblemSpec(grid, make_coefficients(grid), np.array([2.0, 0.0, 2.0]))
    monkeypatch.setattr(solver, "_restricted_solve", lambda K_sub, b, x0, target: 10.0 * b / K_sub.diagonal())
    with pytest.raises(NonConvergenceError, match="cycled") as exc_info:
        solve_obstacle(spec, "active_set")
    error = exc_info.value
    assert error.details["cycle_start"] == 0
    assert error.details["iterations"] == 2
    assert not error.result.converged


def test_active_set_budget_follows_unknowns(half_line_spec):
    result = solve_obstacle(half_line_spec, "active_set")
    assert result.iterations <= half_line_spec.grid.interior_indices.size + solver.ACTIVE_SET_SLACK


def test_unknown_method(half_line_spec):
    with pytest.raises(ValidationError, match="unknown solver method"):
        solve_obstacle(half_line_spec, "multigrid")


def test_methods_agree_in_two_dimensions(radial_spec, radial_result):
    psor = solve_obstacle(radial_spec, SolverMethod.PSOR)
    difference = np.max(np.abs(psor.w.values - radial_result.w.values))
    assert difference <= 1e-6 * radial_result.w.max_abs()
    assert psor.residual <= psor.tolerance
    assert radial_result.residual <= radial_result.tolerance


def test_complementarity_holds(radial_spec, radial_result):
    op = radial_spec.operator
    w = radial_result.w.values[radial_spec.grid.interior_indices]
    multiplier = op.K @ w + op.load
    assert np.all(w >= 0)
    assert np.min(multiplier) >= -radial_result.tolerance
    assert np.max(np.abs(np.minimum(w, multiplier))) <= radial_result.tolerance


def test_solution_keeps_boundary_data(radial_spec, radial_result):
    grid = radial_spec.grid
    np.testing.assert_array_equal(
        radial_result.w.values[grid.boundary_mask], radial_spec.boundary[grid.boundary_mask]
    )


def test_summary_counts(half_line_result):
    summary = half_line_result.summary()
    assert summary.active_count + summary.positive_count == 63
    assert summary.converged


def test_energy_is_minimal_along_perturbations(half_line_spec, half_line_result):
    base = energy(half_line_result.w, half_line_spec)
    values = half_line_result.w.values.copy()
    values[10] += 1e-3
    perturbed = ScalarField(half_line_spec.grid, values)
    assert energy(perturbed, half_line_spec) > base


def test_equivalence_check(half_line_spec, half_line_result):
    report = equivalence_check(half_line_result, half_line_spec, competitors=40, seed=1)
    assert report.weak_defect <= 1e-8
    assert report.inactive_count == half_line_result.positive.size
    assert report.competitors == 40
    assert report.minimal
    assert report.competitor_margin > 0


def test_constant_reference_solve_rejects_mu_outside_range(half_line_spec, half_line_result):
    with pytest.raises(PreconditionError, match="outside"):
        constant_reference_solve(half_line_spec, half_line_result.w, mu=2.0)


def test_constant_reference_solve_reproduces_constant_problem(half_line_spec, half_line_result):
    companion = constant_reference_solve(half_line_spec, half_line_result.w)
    np.testing.assert_allclose(companion.w.values, half_line_result.w.values, atol=1e-8)


def test_stencil_is_second_order_on_a_sine():
    errors, spacings = [], []
    for nodes in (65, 129, 257):
        grid = build_grid(1, 1.0, nodes)
        spec = ObstacleProblemSpec(grid, make_coefficients(grid), np.zeros(grid.node_count))
        x = grid.coordinates[:, 0]
        interior = grid.interior_indices
        defect = spec.operator.apply(np.sin(np.pi * x)) - np.pi**2 * np.sin(np.pi * x[interior])
        errors.append(float(np.max(np.abs(defect))))
        spacings.append(grid.spacing)
    assert all(order >= 1.9 for order in convergence_orders(spacings, errors))


@pytest.mark.parametrize("nodes", [129, 257, 513])
def test_half_line_is_exact_under_refinement(nodes):
    grid = build_grid(1, 1.0, nodes)
    spec = ObstacleProblemSpec(grid, make_coefficients(grid), boundary_data(grid, "half_space"))
    result = solve_obstacle(spec, "active_set")
    assert np.max(np.abs(result.w.values - half_space(grid.coordinates, 0.5))) <= 1e-8
    points = extract_geometry(result.w).free_boundary_points
    assert free_boundary_error(points, "half_space", None) <= 2 * grid.spacing


@pytest.mark.slow
def test_radial_solution_converges_at_second_order():
    spacings, errors = [], []
    for nodes in (129, 257, 513):
        grid = build_grid(2, 1.0, nodes)
        spec = ObstacleProblemSpec(grid, make_coefficients(grid), boundary_data(grid, "radial", {"r0": 0.4}))
        result = solve_obstacle(spec, "active_set")
        exact = radial(grid.coordinates, 0.4)
        errors.append(float(np.max(np.abs(result.w.values - exact))))
        spacings.append(grid.spacing)
        points = extract_geometry(result.w).free_boundary_points
        assert free_boundary_error(points, "radial", {"r0": 0.4}) <= 2 * grid.spacing
    overall = convergence_orders([spacings[0], spacings[-1]], [errors[0], errors[-1]])[0]
    assert overall >= 1.5


def test_coarse_radial_free_boundary_is_within_two_h(radial_spec, radial_result):
    points = extract_geometry(radial_result.w).free_boundary_points
    error = free_boundary_error(points, "radial", {"r0": 0.4})
    assert error is not None
    assert error <= 2 * radial_spec.grid.spacing
