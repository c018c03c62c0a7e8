"""Density alternative at free boundary points: contact density ½ or 0."""

import logging
from typing import Any

import numpy as np

from core.exceptions import PreconditionError
from core.fb import (
    BAND_SLACK,
    REGULAR_BAND,
    REGULAR_DENSITY,
    SINGULAR_THRESHOLD,
    PointClass,
    classify_point,
    density_profile,
    interface_density,
)
from core.suites.base import (
    BaseSuite,
    SuiteContext,
    classification_radii,
    eligible_points,
    sample_points,
)
from models.reports import ExperimentReport

logger = logging.getLogger(__name__)

# Regular points must sit in [0.4, 0.6] at the finest radius
FINEST_BAND = 0.1


def empirical_onset_radius(profile: list[tuple[float, float]]) -> float | None:
    """Largest radius from which on (towards 0) the density stays within the ½-band."""
    onset = None
    for r, density in reversed(profile):
        if abs(density - REGULAR_DENSITY) > REGULAR_BAND:
            break
        onset = r
    return onset


class AlternativeSuite(BaseSuite):
    """Every sampled free boundary point is regular or singular."""

    suite_name = "alternative"
    parameters: dict[str, Any] = {"points": None, "samples": 8, "radii": None, "r_max": 0.25}

    def run(self, context: SuiteContext, points=None, samples=8, radii=None, r_max=0.25) -> ExperimentReport:
        geometry = context.geometry
        grid = context.grid
        if geometry.is_empty:
            raise PreconditionError("free boundary is empty")

        if points is None:
            chosen = sample_points(eligible_points(geometry, r_max), int(samples))
        else:
            chosen = np.array([grid.coordinates[grid.nearest_node(p)] for p in points])
        if chosen.size == 0:
            raise PreconditionError(f"no free boundary point admits a ball of radius {r_max}")

        density_rows = []
        point_rows = []
        counts = {cls.value: 0 for cls in PointClass}
        finest_ok = True
        for x in chosen:
            point_radii = radii if radii is not None else classification_radii(grid, x, r_max)
            profile = density_profile(geometry, x, point_radii)
            interface = dict(density_profile(geometry, x, point_radii, interface_density))
            label = classify_point(geometry, x, point_radii)
            counts[label.value] += 1
            finest = profile[-1][1]
            if label == PointClass.REGULAR and abs(finest - REGULAR_DENSITY) > FINEST_BAND:
                finest_ok = False
            for r, density in profile:
                density_rows.append(
                    {
                        "point": x.tolist(),
                        "radius": r,
                        "density": density,
                        "interface_density": interface[r],
                    }
                )
            point_rows.append(
                {
                    "point": x.tolist(),
                    "classification": label.value,
                    "finest_radius": profile[-1][0],
                    "finest_density": finest,
                    "onset_radius": empirical_onset_radius(profile),
                }
            )

        report = self.new_report(context, {"points": chosen.tolist(), "radii": radii, "r_max": r_max})
        passed = counts[PointClass.UNDETERMINED.value] == 0 and finest_ok
        onsets = [row["onset_radius"] for row in point_rows if row["onset_radius"] is not None]
        return report.model_copy(
            update={
                "tables": {"densities": density_rows, "classification": point_rows},
                "summary": {
                    "counts": counts,
                    "onset_radius_min": min(onsets) if onsets else None,
                },
                "tolerances": {
                    "regular_band": REGULAR_BAND,
                    "singular_threshold": SINGULAR_THRESHOLD,
                    "band_slack": BAND_SLACK,
                    "finest_band": FINEST_BAND,
                },
                "passed": passed,
                "notes": [
                    "classification uses finite radii; the dichotomy itself is a limit as r → 0",
                    "density is the plain node ratio; interface_density counts free boundary nodes at ½",
                ],
            }
        )


def alternative_suite(context: SuiteContext, points=None, radii=None) -> ExperimentReport:
    return AlternativeSuite().execute(context, {"points": points, "radii": radii})
