"""Base interface for experiment suites."""

import hashlib
import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from core.exceptions import LabError, PreconditionError, ValidationError
from core.fb import FreeBoundaryGeometry, extract_geometry
from core.grid import Grid, ScalarField
from core.solver import ObstacleProblemSpec, SolveResult
from models.reports import ExperimentReport

logger = logging.getLogger(__name__)

# Slack for "nonincreasing" comparisons of computed columns
MONOTONE_SLACK = 1e-10
# Suites classify on dyadic radii down to this many h; the plain contact
# density carries an O(h/r) excess from the FB layer below it
CLASSIFICATION_MIN_FACTOR = 8


@dataclass(frozen=True, eq=False)
class SuiteContext:
    """What a suite inspects: a field, its geometry and, for solved fields, the problem."""

    field: ScalarField
    geometry: FreeBoundaryGeometry
    spec: ObstacleProblemSpec | None = None
    result: SolveResult | None = None
    seed: int = 0
    label: str = "solution"
    method: str = "psor"

    @classmethod
    def from_result(
        cls,
        result: SolveResult,
        spec: ObstacleProblemSpec,
        seed: int = 0,
        tau_pos: float | None = None,
    ) -> "SuiteContext":
        return cls(
            field=result.w,
            geometry=extract_geometry(result.w, tau_pos),
            spec=spec,
            result=result,
            seed=seed,
            method=result.method,
        )

    @classmethod
    def from_field(
        cls, field: ScalarField, tau_pos: float = 0.0, seed: int = 0, label: str = "synthetic"
    ) -> "SuiteContext":
        """Context for a field built directly on the grid (exact zeros, τ_pos = 0)."""
        return cls(field=field, geometry=extract_geometry(field, tau_pos), seed=seed, label=label)

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @cached_property
    def field_digest(self) -> str:
        return hashlib.sha1(self.field.values.tobytes()).hexdigest()

    def require_spec(self, suite: str) -> ObstacleProblemSpec:
        if self.spec is None:
            raise PreconditionError(f"suite '{suite}' needs a solved problem, got a {self.label} field")
        return self.spec

    def fingerprint(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "field": self.label,
            "grid": self.grid.describe(),
            "tau_pos": self.geometry.tau_pos,
            "seed": self.seed,
        }
        if self.spec is not None:
            data["problem"] = self.spec.fingerprint()
            data["method"] = self.method
        return data


# ——— Shared helpers ———


def dyadic_radii(grid: Grid, x, r_max: float = 0.25, min_factor: float = 4) -> list[float]:
    """r_max, r_max/2, ... down to min_factor·h, clipped to balls inside the box."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = min(r_max, grid.half_width - float(np.max(np.abs(x))))
    floor = min_factor * grid.spacing * (1 - 1e-12)
    radii = []
    while r >= floor:
        radii.append(r)
        r /= 2
    return radii


def classification_radii(grid: Grid, x, r_max: float = 0.25) -> list[float]:
    """Dyadic radii used by the suites to classify a free boundary point."""
    return dyadic_radii(grid, x, r_max, CLASSIFICATION_MIN_FACTOR)


def resolve_point(geometry: FreeBoundaryGeometry, point, r_max: float = 0.25) -> np.ndarray:
    """The FB node nearest to ``point``; by default the FB node nearest the origin.

    Only nodes whose ball of radius r_max stays in the box qualify for the default.

    Raises:
        PreconditionError: If the point is not on the free boundary or none qualifies
    """
    grid = geometry.grid
    if point is not None:
        if not geometry.on_free_boundary(point):
            raise PreconditionError(f"{list(point)} is not a free boundary point")
        return grid.coordinates[grid.nearest_node(point)].copy()
    candidates = eligible_points(geometry, r_max)
    if candidates.size == 0:
        raise PreconditionError("free boundary has no point admitting the requested radii")
    return candidates[int(np.argmin(np.linalg.norm(candidates, axis=1)))].copy()


def eligible_points(
    geometry: FreeBoundaryGeometry, r_max: float, within: float | None = None
) -> np.ndarray:
    """FB nodes whose closed r_max-ball lies in the box (optionally with |x| ≤ within)."""
    points = geometry.free_boundary_points
    if points.shape[0] == 0:
        return points
    keep = np.max(np.abs(points), axis=1) + r_max <= geometry.grid.half_width + 1e-12
    if within is not None:
        keep &= np.linalg.norm(points, axis=1) <= within + 1e-12
    return points[keep]


def sample_points(points: np.ndarray, count: int) -> np.ndarray:
    """Up to ``count`` points evenly spaced through the (lexicographic) list."""
    if points.shape[0] <= count:
        return points
    idx = np.unique(np.linspace(0, points.shape[0] - 1, count).round().astype(int))
    return points[idx]


def nonincreasing(values, slack: float = MONOTONE_SLACK) -> bool:
    """Whether each value is at most its predecessor (up to slack × scale)."""
    values = [v for v in values if v is not None]
    scale = max([1.0, *(abs(v) for v in values)])
    return all(b <= a + slack * scale for a, b in zip(values, values[1:], strict=False))


def loglog_slope(x, y) -> float | None:
    """Least-squares slope of log y against log x over positive pairs."""
    pairs = [(a, b) for a, b in zip(x, y, strict=True) if a and b and a > 0 and b > 0]
    if len(pairs) < 2:
        return None
    lx = np.log([a for a, _ in pairs])
    ly = np.log([b for _, b in pairs])
    if np.ptp(lx) == 0:
        return None
    return float(np.polyfit(lx, ly, 1)[0])


def finite_or_none(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class BaseSuite(ABC):
    """Base class for all experiment suites.

    Subclasses declare their parameters with defaults and implement ``run``.
    """

    suite_name: str = ""
    parameters: dict[str, Any] = {}

    @property
    def name(self) -> str:
        return self.suite_name or self.__class__.__name__.lower().replace("suite", "")

    def resolve(self, params: dict[str, Any] | None) -> dict[str, Any]:
        """Merge user parameters into defaults, rejecting unknown names."""
        params = dict(params or {})
        unknown = sorted(set(params) - set(self.parameters))
        if unknown:
            raise ValidationError(
                f"unknown parameter(s) {unknown} for suite '{self.name}'",
                details={"allowed": sorted(self.parameters)},
            )
        return {**self.parameters, **params}

    def is_negative_control(self, context: SuiteContext) -> bool:
        """Whether the fixture is designed to make this suite fail."""
        return False

    def new_report(self, context: SuiteContext, params: dict[str, Any]) -> ExperimentReport:
        return ExperimentReport(
            name=self.name,
            fingerprint={**context.fingerprint(), "params": _jsonable(params)},
        )

    @abstractmethod
    def run(self, context: SuiteContext, **params) -> ExperimentReport:
        """Run the suite.

        Raises:
            PreconditionError: If the hypotheses of the check do not hold
        """

    def execute(
        self,
        context: SuiteContext,
        params: dict[str, Any] | None = None,
        asserted: bool | None = None,
    ) -> ExperimentReport:
        """Run with timing; violated hypotheses become aborted reports."""
        start = time.perf_counter()
        resolved = self.resolve(params)
        try:
            report = self.run(context, **resolved)
        except LabError as exc:
            logger.warning(f"Suite '{self.name}' aborted: {exc.message}")
            report = self.new_report(context, resolved).model_copy(
                update={"aborted": True, "passed": None, "notes": [f"aborted: {exc.message}"]}
            )
        if asserted is None:
            asserted = report.asserted and not self.is_negative_control(context)
        report = report.model_copy(
            update={"asserted": asserted, "wall_time": time.perf_counter() - start}
        )
        outcome = "aborted" if report.aborted else ("passed" if report.passed else "failed")
        logger.info(
            f"Suite '{self.name}' {outcome}"
            + ("" if report.asserted else " (negative control, not asserted)")
        )
        return report


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value
