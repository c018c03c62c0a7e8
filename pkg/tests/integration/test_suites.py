"""Integration tests for the experiment suites on closed-form fixtures."""

import numpy as np
import pytest

import experiments  # noqa: F401
from core.coeff import make_coefficients
from core.fixtures import boundary_data
from core.grid import build_grid
from core.solver import ObstacleProblemSpec, solve_obstacle
from core.suites import SuiteContext, get_suite, list_suites
from experiments.blowup import BlowupSuite
from experiments.density import AlternativeSuite
from experiments.regularity import NondegeneracySuite, OptimalRegularitySuite
from experiments.reifenberg import ReifenbergSuite
from experiments.solver_checks import ComparisonSuite, UniquenessSuite
from experiments.stability import MeasureStabilitySuite

pytestmark = pytest.mark.integration


def test_registry_lists_builtin_suites():
    assert set(list_suites()) >= {
        "uniqueness",
        "comparison",
        "optimal_regularity",
        "nondegeneracy",
        "alternative",
        "blowup",
        "reifenberg",
        "measure_stability",
    }
    assert get_suite("Blowup") is BlowupSuite


class TestHalfLine:
    """The 1D half-line solution is (x⁺)²/2 exactly."""

    def test_uniqueness(self, half_line_context):
        report = UniquenessSuite().execute(half_line_context, {"competitors": 20})
        assert report.passed is True
        assert report.summary["relative_disagreement"] <= 1e-6
        assert report.summary["equivalence"]["minimal"] is True

    def test_optimal_regularity(self, half_line_context):
        report = OptimalRegularitySuite().execute(half_line_context)
        assert report.passed is True
        assert report.summary["point"] == [0.0]
        for row in report.tables["sup_ratios"]:
            assert row["ratio"] == pytest.approx(0.5, rel=1e-6)

    def test_nondegeneracy(self, half_line_context):
        report = NondegeneracySuite().execute(half_line_context)
        assert report.passed is True
        assert report.asserted is True
        assert report.summary["min_ratio"] == pytest.approx(0.5, rel=1e-6)

    def test_alternative(self, half_line_context):
        report = AlternativeSuite().execute(half_line_context)
        assert report.passed is True
        assert report.summary["counts"]["regular"] == 1
        # one radius, 8h: 8 of the 15 nodes of the ball have x ≤ 0
        assert [row["radius"] for row in report.tables["densities"]] == [0.25]
        row = report.tables["densities"][0]
        assert row["density"] == pytest.approx(8 / 15)
        assert row["interface_density"] == pytest.approx(0.5)

    def test_comparison(self, half_line_context):
        report = ComparisonSuite().execute(half_line_context, {"pairs": 3})
        assert report.passed is True
        assert len(report.tables["boundary_pairs"]) == 3
        assert len(report.tables["f_pairs"]) == 2

    def test_measure_stability_table(self, half_line_context):
        report = MeasureStabilitySuite().execute(half_line_context)
        assert not report.aborted
        rows = report.tables["levels"]
        assert [row["t"] for row in rows] == [0.4, 0.2, 0.1, 0.05]
        assert set(report.summary["monotone"]) == {"symmetric_difference", "sup_difference", "hausdorff"}

    def test_reports_fingerprint_the_problem(self, half_line_context):
        report = NondegeneracySuite().execute(half_line_context)
        assert report.fingerprint["grid"]["nodes_per_axis"] == 65
        assert report.fingerprint["method"] == "psor"
        assert "problem" in report.fingerprint


class TestSyntheticFields:
    def test_half_space_blowup(self, synthetic_context):
        report = BlowupSuite().execute(synthetic_context("half_space", nodes_per_axis=129))
        assert report.passed is True
        assert report.summary["classification"] == "regular"
        assert report.summary["fit"]["direction"] == [0.0, 1.0]
        assert report.summary["fit"]["coefficient"] == pytest.approx(0.5)
        assert [row["eps"] for row in report.tables["rescalings"]] == [1.0, 0.5, 0.25]
        assert "coefficient_averages" not in report.tables

    def test_line_contact_blowup_aborts(self, synthetic_context):
        report = BlowupSuite().execute(synthetic_context("line_contact"))
        assert report.aborted is True
        assert report.passed is None
        assert report.summary["classification"] == "singular"

    def test_quartic_nondegeneracy_is_a_negative_control(self, synthetic_context):
        report = NondegeneracySuite().execute(synthetic_context("quartic", nodes_per_axis=129))
        assert report.passed is False
        assert report.asserted is False
        assert not report.blocking_failure

    def test_quartic_can_be_asserted(self, synthetic_context):
        report = NondegeneracySuite().execute(
            synthetic_context("quartic", nodes_per_axis=129), asserted=True
        )
        assert report.blocking_failure

    def test_quartic_is_flagged_not_quadratic(self, synthetic_context):
        report = OptimalRegularitySuite().execute(synthetic_context("quartic", nodes_per_axis=129))
        assert report.summary["growth_exponent"] == pytest.approx(4.0)
        assert report.summary["degenerate_not_quadratic"] is True

    def test_line_contact_points_are_singular(self, synthetic_context):
        report = AlternativeSuite().execute(synthetic_context("line_contact"), {"samples": 4})
        assert report.passed is True
        assert report.summary["counts"]["singular"] == 4
        assert report.summary["counts"]["regular"] == 0

    def test_half_space_points_are_regular(self, synthetic_context):
        report = AlternativeSuite().execute(synthetic_context("half_space"), {"samples": 4})
        assert report.passed is True
        assert report.summary["counts"]["regular"] == 4

    @pytest.mark.slow
    def test_half_space_is_flat(self, synthetic_context):
        report = ReifenbergSuite().execute(synthetic_context("half_space", nodes_per_axis=257))
        assert report.passed is True
        assert [row["radius"] for row in report.tables["theta_K"]] == [0.25, 0.125]
        assert report.summary["theta_K_min_radius"] == pytest.approx(1 / 32, rel=1e-6)

    def test_reifenberg_aborts_on_singular_points(self, synthetic_context):
        report = ReifenbergSuite().execute(
            synthetic_context("line_contact", nodes_per_axis=129), {"samples": 2}
        )
        assert report.aborted is True
        assert report.blocking_failure

    def test_solver_suites_need_a_problem(self, synthetic_context):
        report = UniquenessSuite().execute(synthetic_context("half_space"))
        assert report.aborted is True
        assert "needs a solved problem" in report.notes[0]


class TestComparison:
    def test_twenty_boundary_pairs_on_the_half_line(self, half_line_context):
        report = ComparisonSuite().execute(half_line_context, {"pairs": 20})
        assert report.passed is True
        assert report.summary["boundary_pairs_ordered"] == 20
        assert report.summary["f_pairs_ordered"] == 2

    def test_twenty_boundary_pairs_on_the_disk(self, radial_spec, radial_result):
        context = SuiteContext.from_result(radial_result, radial_spec, seed=5)
        report = ComparisonSuite().execute(context, {"pairs": 20})
        assert report.passed is True
        assert all(row["max_violation"] <= 1e-8 for row in report.tables["boundary_pairs"])


class TestMeasureStability:
    def test_zero_boundary_gives_no_evidence(self):
        grid = build_grid(2, 1.0, 33)
        spec = ObstacleProblemSpec(grid, make_coefficients(grid), np.zeros(grid.node_count))
        context = SuiteContext.from_result(solve_obstacle(spec, "active_set"), spec)
        report = MeasureStabilitySuite().execute(context)
        assert not report.aborted
        assert report.passed is False
        assert report.summary["sqrt_law_slope"] is None
        assert report.summary["symmetric_difference_strictly_decreasing"] is False
        assert all(row["symmetric_difference"] == 0.0 for row in report.tables["levels"])


class TestCircle:
    """The exact radial field: w vanishes on the closed disk of radius 0.4."""

    def test_sampled_points_are_regular(self, synthetic_context):
        context = synthetic_context("radial", nodes_per_axis=257, r0=0.4)
        report = AlternativeSuite().execute(context, {"samples": 8})
        assert report.passed is True
        assert report.summary["counts"] == {"regular": 8, "singular": 0, "undetermined": 0}

    @pytest.mark.slow
    def test_solved_points_are_regular(self):
        grid = build_grid(2, 1.0, 129)
        spec = ObstacleProblemSpec(grid, make_coefficients(grid), boundary_data(grid, "radial", {"r0": 0.4}))
        context = SuiteContext.from_result(solve_obstacle(spec, "active_set"), spec)
        report = AlternativeSuite().execute(context, {"samples": 8})
        assert report.passed is True
        assert report.summary["counts"]["regular"] == 8

    @pytest.mark.slow
    def test_blowup_is_a_half_space_solution(self, synthetic_context):
        report = BlowupSuite().execute(synthetic_context("radial", nodes_per_axis=1025, r0=0.4))
        assert report.passed is True
        center = np.array(report.summary["center"])
        assert abs(np.linalg.norm(center) - 0.4) <= 0.1 / 512
        fit = report.summary["fit"]
        assert fit["residual"] <= 0.05
        assert fit["coefficient"] == pytest.approx(0.5, abs=0.05)
        # positivity lies outside the disk, so the blowup grows along the outer normal
        cosine = float(np.dot(fit["direction"], center / np.linalg.norm(center)))
        assert cosine >= np.cos(np.radians(5))
        assert report.summary["differences_nonincreasing"] is True

    @pytest.mark.slow
    def test_circle_is_flat(self, synthetic_context):
        report = ReifenbergSuite().execute(synthetic_context("radial", nodes_per_axis=1025, r0=0.4))
        assert report.passed is True
        assert [row["radius"] for row in report.tables["theta_K"]] == [0.25, 0.125, 0.0625, 0.03125]
        assert report.summary["theta_K_min_radius"] <= 0.1
