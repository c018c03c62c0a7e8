"""Quadratic blowups at a regular point and averaging of the coefficients."""

import logging
from typing import Any

import numpy as np

from core.coeff import ball_average
from core.exceptions import PreconditionError
from core.fb import (
    MIN_RESCALE_FACTOR,
    PointClass,
    classify_point,
    density_profile,
    homogeneity_fit,
    nearest_crossing,
    rescale,
)
from core.grid import Grid
from core.suites.base import BaseSuite, SuiteContext, classification_radii, nonincreasing, resolve_point
from models.reports import ExperimentReport

logger = logging.getLogger(__name__)

MAX_FIT_RESIDUAL = 0.05
TARGET_NODES = 33


def default_eps_list(grid: Grid, x0, levels: int = 3) -> list[float]:
    """16h·2^k for k = levels−1, ..., 0, keeping x0 + ε[-1, 1]^n inside the box."""
    base = MIN_RESCALE_FACTOR * grid.spacing
    room = grid.half_width - float(np.max(np.abs(x0)))
    eps = [base * 2**k for k in reversed(range(levels))]
    return [e for e in eps if e <= room + 1e-12]


class BlowupSuite(BaseSuite):
    """Rescalings w_ε converge and the finest one is a half-space solution."""

    suite_name = "blowup"
    parameters: dict[str, Any] = {
        "point": None,
        "eps": None,
        "target_nodes": TARGET_NODES,
        "radii": None,
        "subgrid": True,
    }

    def run(
        self,
        context: SuiteContext,
        point=None,
        eps=None,
        target_nodes=TARGET_NODES,
        radii=None,
        subgrid=True,
    ) -> ExperimentReport:
        grid = context.grid
        geometry = context.geometry
        node = resolve_point(geometry, point)
        # rescalings are centred on the interface, not on the node beside it
        x0 = nearest_crossing(geometry, node) if subgrid else node
        eps_list = sorted((float(e) for e in (eps or default_eps_list(grid, x0))), reverse=True)
        if not eps_list:
            raise PreconditionError("no admissible ε (the box is too small around the point)")
        report = self.new_report(
            context,
            {"point": node.tolist(), "eps": eps_list, "target_nodes": target_nodes, "subgrid": bool(subgrid)},
        )

        class_radii = radii if radii is not None else classification_radii(grid, node)
        label = classify_point(geometry, node, class_radii)
        if label != PointClass.REGULAR:
            evidence = [
                {"radius": r, "density": d} for r, d in density_profile(geometry, node, class_radii)
            ]
            return report.model_copy(
                update={
                    "tables": {"classification_evidence": evidence},
                    "summary": {"point": node.tolist(), "classification": label.value},
                    "aborted": True,
                    "passed": None,
                    "notes": [f"aborted: point classified {label.value}, blowups need a regular point"],
                }
            )

        target = Grid(dimension=grid.dimension, half_width=1.0, nodes_per_axis=int(target_nodes))
        unit_ball = np.linalg.norm(target.coordinates, axis=1) <= 1.0 + 1e-12

        rescalings = [rescale(context.field, x0, e, target) for e in eps_list]
        rows = []
        differences = []
        for k, (e, w_eps) in enumerate(zip(eps_list, rescalings, strict=True)):
            row: dict[str, Any] = {"eps": e, "sup_unit_ball": float(np.max(w_eps.values[unit_ball]))}
            if k:
                diff = float(np.max(np.abs(w_eps.values - rescalings[k - 1].values)[unit_ball]))
                row["successive_difference"] = diff
                differences.append(diff)
            rows.append(row)

        coefficient_rows = self._coefficient_averages(context, x0, eps_list)
        fit = homogeneity_fit(rescalings[-1])
        converging = nonincreasing(differences)
        passed = converging and fit.residual <= MAX_FIT_RESIDUAL

        notes = []
        if coefficient_rows is None:
            notes.append("no coefficient field (synthetic input); averages skipped")
        return report.model_copy(
            update={
                "tables": {
                    "rescalings": rows,
                    **({"coefficient_averages": coefficient_rows} if coefficient_rows else {}),
                },
                "summary": {
                    "point": node.tolist(),
                    "center": x0.tolist(),
                    "classification": label.value,
                    "fit": fit.model_dump(),
                    "differences_nonincreasing": converging,
                },
                "tolerances": {"max_fit_residual": MAX_FIT_RESIDUAL},
                "passed": passed,
                "notes": notes,
            }
        )

    @staticmethod
    def _coefficient_averages(context: SuiteContext, x0, eps_list) -> list[dict[str, Any]] | None:
        """Averages of a and f over B_ε(x0) and their successive differences."""
        if context.spec is None:
            return None
        coefficients = context.spec.coefficients
        grid = context.grid
        rows = []
        previous = None
        for e in eps_list:
            A = ball_average(grid, coefficients.matrices, x0, e)
            f = float(ball_average(grid, coefficients.f, x0, e))
            row: dict[str, Any] = {"eps": e, "a_average": A.ravel().tolist(), "f_average": f}
            if previous is not None:
                row["a_cauchy"] = float(np.max(np.abs(A - previous[0])))
                row["f_cauchy"] = abs(f - previous[1])
            rows.append(row)
            previous = (A, f)
        return rows


def blowup_suite(context: SuiteContext, x0=None, eps=None) -> ExperimentReport:
    return BlowupSuite().execute(context, {"point": x0, "eps": eps})
