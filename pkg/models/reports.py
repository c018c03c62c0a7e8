"""Report models serialized to JSON artifacts."""

from typing import Any

from pydantic import BaseModel, Field


class VMORow(BaseModel):
    """One radius of a VMO modulus estimate."""

    radius: float = Field(..., description="Radius r", gt=0)
    oscillation: float = Field(
        ..., description="Largest mean oscillation over sampled centers and dyadic ρ ≤ r", ge=0
    )
    eta: float = Field(..., description="Running modulus η(r), nondecreasing in r", ge=0)


class VMOReport(BaseModel):
    """Discrete estimate of the VMO modulus of a field."""

    rows: list[VMORow] = Field(default_factory=list, description="Rows sorted by radius")
    center_count: int = Field(..., description="Number of sampled centers", ge=0)
    radii: list[float] = Field(default_factory=list, description="Radii evaluated")

    def eta(self) -> list[float]:
        return [row.eta for row in self.rows]


class SolveSummary(BaseModel):
    """JSON summary written next to a solution field."""

    method: str = Field(..., description="Solver method (psor or active_set)")
    iterations: int = Field(..., description="Sweeps or outer iterations used", ge=0)
    residual: float = Field(..., description="Complementarity residual max|min(w, Kw+F)|")
    tolerance: float = Field(..., description="Residual target tol·max(1, ‖f‖∞)")
    energy: float = Field(..., description="Discrete energy J(w)")
    active_count: int = Field(..., description="Interior nodes with w = 0", ge=0)
    positive_count: int = Field(..., description="Interior nodes with w > 0", ge=0)
    converged: bool = Field(..., description="Whether the residual target was met")


class EquivalenceReport(BaseModel):
    """Weak-equation defect and energy-competitor check of a solution."""

    weak_defect: float = Field(..., description="max |(Kw + F)_i| over nodes with w > 0", ge=0)
    inactive_count: int = Field(..., description="Interior nodes with w > 0", ge=0)
    competitors: int = Field(..., description="Feasible competitors sampled", ge=0)
    competitor_margin: float = Field(..., description="min J(v) - J(w) over competitors")
    minimal: bool = Field(..., description="No competitor lowered the energy beyond round-off")


class FlatnessRow(BaseModel):
    """Best plane and Hausdorff distance at one radius."""

    radius: float = Field(..., gt=0)
    normal: list[float] | None = Field(None, description="Unit normal of the fitted plane")
    offset: float | None = Field(None, description="Plane offset normal·x")
    distance: float | None = Field(None, description="Hausdorff distance d(r)")
    ratio: float | None = Field(None, description="d(r)/r")
    modulus: float | None = Field(None, description="Running modulus θ(r) = max over ρ ≤ r of d(ρ)/ρ")
    skipped: bool = Field(default=False, description="Degenerate fit at this radius")
    reason: str | None = Field(None, description="Why the radius was skipped")


class FlatnessReport(BaseModel):
    """Modulus of flatness of the free boundary around one point."""

    center: list[float] = Field(..., description="Free boundary point x")
    rows: list[FlatnessRow] = Field(default_factory=list, description="Rows by decreasing radius")

    def modulus(self) -> dict[float, float | None]:
        return {row.radius: row.modulus for row in self.rows}


class BlowupFit(BaseModel):
    """Least-squares fit of c·((e·x)⁺)² to a rescaled field."""

    direction: list[float] = Field(..., description="Unit direction e")
    coefficient: float = Field(..., description="Fitted constant c")
    residual: float = Field(..., description="Relative L∞ residual", ge=0)


class ExperimentReport(BaseModel):
    """Outcome of one experiment suite."""

    name: str = Field(..., description="Suite name")
    fingerprint: dict[str, Any] = Field(
        default_factory=dict, description="Inputs that reproduce the run"
    )
    tables: dict[str, list[dict[str, Any]]] = Field(
        default_factory=dict, description="Named result tables"
    )
    summary: dict[str, Any] = Field(default_factory=dict, description="Derived quantities")
    tolerances: dict[str, float] = Field(
        default_factory=dict, description="Tolerances every decision refers to"
    )
    passed: bool | None = Field(None, description="Pass/fail; None when aborted")
    asserted: bool = Field(default=True, description="False for negative controls")
    aborted: bool = Field(default=False, description="Suite stopped on a violated hypothesis")
    notes: list[str] = Field(default_factory=list, description="Caveats and flags")
    wall_time: float = Field(default=0.0, exclude=True, description="Seconds (metadata only)")

    @property
    def blocking_failure(self) -> bool:
        """An asserted suite that did not pass."""
        return self.asserted and self.passed is not True


class ArtifactEntry(BaseModel):
    """One file written by a run."""

    path: str = Field(..., description="Path relative to the run directory")
    sha256: str = Field(..., description="Content digest")


class RunManifest(BaseModel):
    """Index of a run's artifacts, written last."""

    command: str = Field(..., description="CLI command that produced the run")
    exit_code: int = Field(..., description="Exit status of the run")
    artifacts: list[ArtifactEntry] = Field(default_factory=list)
