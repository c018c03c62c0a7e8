"""Flatness of the regular free boundary: θ_K(r) → 0."""

import logging
from typing import Any

import numpy as np

from core.coeff import CoefficientFamily
from core.exceptions import PreconditionError
from core.fb import PointClass, classify_point, flatness_modulus
from core.suites.base import (
    BaseSuite,
    SuiteContext,
    classification_radii,
    dyadic_radii,
    eligible_points,
    nonincreasing,
    sample_points,
)
from models.reports import ExperimentReport

logger = logging.getLogger(__name__)

MAX_FINAL_MODULUS = 0.1
TAIL = 3


class ReifenbergSuite(BaseSuite):
    """θ_K(r) = max over K of θ(x, r) decreases to a small value."""

    suite_name = "reifenberg"
    parameters: dict[str, Any] = {
        "points": None,
        "samples": 8,
        "within": 0.5,
        "radii": None,
        "r_max": 0.25,
        "min_radius_factor": 16,
        "subgrid": True,
    }

    def is_negative_control(self, context: SuiteContext) -> bool:
        # Discontinuous coefficients are outside the flatness theory
        return (
            context.spec is not None
            and context.spec.coefficients.family == CoefficientFamily.CHECKERBOARD
        )

    def run(
        self,
        context: SuiteContext,
        points=None,
        samples=8,
        within=0.5,
        radii=None,
        r_max=0.25,
        min_radius_factor=16,
        subgrid=True,
    ) -> ExperimentReport:
        grid = context.grid
        geometry = context.geometry
        if geometry.is_empty:
            raise PreconditionError("free boundary is empty")

        if radii is None:
            radii = dyadic_radii(grid, np.zeros(grid.dimension), r_max, min_radius_factor)
        radii = sorted((float(r) for r in radii), reverse=True)
        if not radii:
            raise PreconditionError(f"no dyadic radius between {min_radius_factor}h and {r_max}")

        if points is None:
            K = sample_points(eligible_points(geometry, radii[0], within), int(samples))
        else:
            K = np.array([grid.coordinates[grid.nearest_node(p)] for p in points])
        if K.size == 0:
            raise PreconditionError("the sample K of free boundary points is empty")
        report = self.new_report(context, {"points": K.tolist(), "radii": radii, "subgrid": bool(subgrid)})

        labels = []
        for x in K:
            labels.append(classify_point(geometry, x, classification_radii(grid, x, radii[0])))
        if any(label != PointClass.REGULAR for label in labels):
            evidence = [
                {"point": x.tolist(), "classification": label.value}
                for x, label in zip(K, labels, strict=True)
            ]
            return report.model_copy(
                update={
                    "tables": {"classification": evidence},
                    "aborted": True,
                    "passed": None,
                    "notes": ["aborted: K contains points that are not regular"],
                }
            )

        per_point = []
        theta_K = {r: 0.0 for r in radii}
        for x in K:
            flatness = flatness_modulus(geometry, x, radii, subgrid=bool(subgrid))
            for row in flatness.rows:
                per_point.append({"point": x.tolist(), "center": flatness.center, **row.model_dump()})
                if row.modulus is not None:
                    theta_K[row.radius] = max(theta_K[row.radius], row.modulus)

        table = [{"radius": r, "theta_K": theta_K[r]} for r in radii]
        tail = [theta_K[r] for r in radii[-TAIL:]]
        final = theta_K[radii[-1]]
        passed = nonincreasing(tail) and final <= MAX_FINAL_MODULUS
        delta = theta_K[radii[0]] / 2
        return report.model_copy(
            update={
                "tables": {"theta_K": table, "per_point": per_point},
                "summary": {
                    "theta_K_min_radius": final,
                    "delta": delta,
                    "points": len(K),
                },
                "tolerances": {"max_final_modulus": MAX_FINAL_MODULUS},
                "passed": passed,
                "notes": [f"K is relatively {delta:.4g}-flat: D_H ≤ 2rδ at every sampled scale"],
            }
        )


def reifenberg_suite(context: SuiteContext, points=None, radii=None) -> ExperimentReport:
    return ReifenbergSuite().execute(context, {"points": points, "radii": radii})
