"""Cross-checks of the discrete problem: uniqueness, comparison, monotonicity in f."""

import itertools
import logging
from typing import Any

import numpy as np

from core.coeff import certify
from core.solver import SolverMethod, equivalence_check, solve_obstacle
from core.suites.base import BaseSuite, SuiteContext
from models.reports import ExperimentReport

logger = logging.getLogger(__name__)

MAX_METHOD_DISAGREEMENT = 1e-6
# Ordering w₁ ≤ w₂ is checked up to this multiple of max(1, ‖w₂‖∞)
ORDER_SLACK = 1e-8


class UniquenessSuite(BaseSuite):
    """PSOR and the active set method return the same solution."""

    suite_name = "uniqueness"
    parameters: dict[str, Any] = {"competitors": 100}

    def run(self, context: SuiteContext, competitors=100) -> ExperimentReport:
        spec = context.require_spec(self.name)
        psor = solve_obstacle(spec, SolverMethod.PSOR)
        active = solve_obstacle(spec, SolverMethod.ACTIVE_SET)
        scale = psor.w.max_abs()
        difference = float(np.max(np.abs(psor.w.values - active.w.values)))
        disagreement = difference / scale if scale > 0 else difference
        equivalence = equivalence_check(psor, spec, competitors=int(competitors), seed=context.seed)
        report = self.new_report(context, {"competitors": competitors})
        rows = [
            {"method": r.method, "iterations": r.iterations, "residual": r.residual, "tolerance": r.tolerance, "energy": r.energy}
            for r in (psor, active)
        ]
        passed = (
            disagreement <= MAX_METHOD_DISAGREEMENT
            and psor.converged
            and active.converged
            and equivalence.minimal
        )
        return report.model_copy(
            update={
                "tables": {"methods": rows},
                "summary": {
                    "relative_disagreement": disagreement,
                    "equivalence": equivalence.model_dump(),
                },
                "tolerances": {
                    "max_method_disagreement": MAX_METHOD_DISAGREEMENT,
                    "residual_target": psor.tolerance,
                },
                "passed": passed,
            }
        )


class ComparisonSuite(BaseSuite):
    """ψ₁ ≤ ψ₂ gives w₁ ≤ w₂; larger constant f gives smaller w."""

    suite_name = "comparison"
    parameters: dict[str, Any] = {"pairs": 20, "f_values": [1.0, 1.5, 2.0], "amplitude": 0.1}

    def run(self, context: SuiteContext, pairs=20, f_values=None, amplitude=0.1) -> ExperimentReport:
        spec = context.require_spec(self.name)
        grid = spec.grid
        rng = np.random.default_rng(context.seed)
        boundary = grid.boundary_mask
        method = context.method
        report = self.new_report(context, {"pairs": pairs, "f_values": f_values, "amplitude": amplitude})

        boundary_rows = []
        for k in range(int(pairs)):
            psi_1 = spec.boundary + rng.uniform(0.0, amplitude, grid.node_count) * boundary
            psi_2 = psi_1 + rng.uniform(0.0, amplitude, grid.node_count) * boundary
            w_1 = solve_obstacle(spec.with_boundary(psi_1), method).w.values
            w_2 = solve_obstacle(spec.with_boundary(psi_2), method).w.values
            violation = float(np.max(w_1 - w_2))
            boundary_rows.append(
                {
                    "pair": k,
                    "max_violation": violation,
                    "ordered": violation <= ORDER_SLACK * max(1.0, float(np.max(np.abs(w_2)))),
                }
            )

        f_rows = []
        f_values = sorted(float(v) for v in (f_values or [1.0, 1.5, 2.0]))
        solutions = []
        for value in f_values:
            coefficients = certify(
                grid,
                spec.coefficients.matrices,
                np.full(grid.node_count, value),
                family=spec.coefficients.family,
                params=spec.coefficients.params,
                rhs_family="constant",
                rhs_params={"value": value},
            )
            solutions.append(solve_obstacle(spec.with_coefficients(coefficients), method).w.values)
        for (f_low, w_low), (f_high, w_high) in itertools.pairwise(zip(f_values, solutions, strict=True)):
            violation = float(np.max(w_high - w_low))
            f_rows.append(
                {
                    "f_low": f_low,
                    "f_high": f_high,
                    "max_violation": violation,
                    "ordered": violation <= ORDER_SLACK * max(1.0, float(np.max(np.abs(w_low)))),
                }
            )

        passed = all(row["ordered"] for row in boundary_rows + f_rows)
        return report.model_copy(
            update={
                "tables": {"boundary_pairs": boundary_rows, "f_pairs": f_rows},
                "summary": {
                    "boundary_pairs_ordered": sum(row["ordered"] for row in boundary_rows),
                    "f_pairs_ordered": sum(row["ordered"] for row in f_rows),
                },
                "tolerances": {"order_slack": ORDER_SLACK},
                "passed": passed,
            }
        )


def uniqueness_suite(context: SuiteContext) -> ExperimentReport:
    return UniquenessSuite().execute(context)


def comparison_suite(context: SuiteContext, pairs: int = 20) -> ExperimentReport:
    return ComparisonSuite().execute(context, {"pairs": pairs})
