"""Closed-form solutions, synthetic fields and boundary profiles.

Closed forms solve Δw = χ_{w>0} μ with constant μ (identity coefficients);
they provide exact boundary data and reference fields for the solver.
"""

import math
from enum import StrEnum
from pathlib import Path
from typing import Any

import numpy as np

from core.artifacts import read_field_on
from core.exceptions import ValidationError
from core.grid import Grid, ScalarField


class BoundaryProfile(StrEnum):
    """Sources of boundary data ψ."""

    ZERO = "zero"
    HALF_SPACE = "half_space"
    RADIAL = "radial"
    CUSTOM = "custom"


class SyntheticField(StrEnum):
    """Fields built directly on the grid (not solved)."""

    HALF_SPACE = "half_space"
    QUARTIC = "quartic"
    LINE_CONTACT = "line_contact"
    PARABOLOID = "paraboloid"
    RADIAL = "radial"


def half_space(coords: np.ndarray, coefficient: float = 0.5) -> np.ndarray:
    """c·((x_n)⁺)²; solves the problem with f = 2c."""
    return coefficient * np.maximum(coords[:, -1], 0.0) ** 2


def radial(coords: np.ndarray, r0: float, mu: float = 1.0) -> np.ndarray:
    """Radial solution vanishing exactly on the closed ball B_{r0}.

    w(r) solves w'' + (n−1)w'/r = mu for r > r0 with w(r0) = w'(r0) = 0.
    """
    if not r0 > 0:
        raise ValidationError("radial fixture requires r0 > 0")
    n = coords.shape[1]
    r = np.linalg.norm(coords, axis=1)
    outside = r > r0
    rr = np.where(outside, r, r0)
    match n:
        case 1:
            profile = 0.5 * (rr - r0) ** 2
        case 2:
            profile = (rr**2 - r0**2) / 4 - (r0**2 / 2) * np.log(rr / r0)
        case _:
            profile = rr**2 / 6 + r0**3 / (3 * rr) - r0**2 / 2
    return mu * np.where(outside, profile, 0.0)


def quartic(coords: np.ndarray) -> np.ndarray:
    """((x_n)⁺)⁴; vanishes to fourth order, so it is not a quadratic solution."""
    return np.maximum(coords[:, -1], 0.0) ** 4


def line_contact(coords: np.ndarray) -> np.ndarray:
    """x₁²; the contact set is the hyperplane {x₁ = 0}."""
    return coords[:, 0] ** 2


def paraboloid(coords: np.ndarray) -> np.ndarray:
    """|x|²/(2n); homogeneous of degree two with Δw = 1."""
    return np.sum(coords**2, axis=1) / (2 * coords.shape[1])


def synthetic_field(grid: Grid, kind: str, params: dict[str, Any] | None = None) -> ScalarField:
    """Evaluate a synthetic field nodally."""
    params = dict(params or {})
    try:
        kind = SyntheticField(kind)
    except ValueError:
        raise ValidationError(f"unknown synthetic field '{kind}'") from None
    coords = grid.coordinates
    match kind:
        case SyntheticField.HALF_SPACE:
            values = half_space(coords, params.get("coefficient", 0.5))
        case SyntheticField.QUARTIC:
            values = quartic(coords)
        case SyntheticField.LINE_CONTACT:
            values = line_contact(coords)
        case SyntheticField.PARABOLOID:
            values = paraboloid(coords)
        case SyntheticField.RADIAL:
            values = radial(coords, params.get("r0", 0.4), params.get("mu", 1.0))
    return ScalarField(grid, values)


def boundary_data(grid: Grid, profile: str, params: dict[str, Any] | None = None) -> np.ndarray:
    """Boundary values ψ as a full-grid vector (interior entries zero).

    Args:
        grid: Grid
        profile: ``zero``, ``half_space`` (``coefficient``), ``radial`` (``r0``,
            ``mu``) or ``custom`` (``path`` to a field text file)
        params: Profile parameters
    """
    params = dict(params or {})
    try:
        profile = BoundaryProfile(profile)
    except ValueError:
        raise ValidationError(f"unknown boundary profile '{profile}'") from None
    coords = grid.coordinates
    match profile:
        case BoundaryProfile.ZERO:
            values = np.zeros(grid.node_count)
        case BoundaryProfile.HALF_SPACE:
            values = half_space(coords, params.get("coefficient", 0.5))
        case BoundaryProfile.RADIAL:
            values = radial(coords, params.get("r0", 0.4), params.get("mu", 1.0))
        case BoundaryProfile.CUSTOM:
            if "path" not in params:
                raise ValidationError("custom boundary profile requires 'path'")
            values = read_field_on(Path(params["path"]), grid).values
    values = np.where(grid.boundary_mask, values, 0.0)
    return values


def sagitta(r: float, radius: float) -> float:
    """Height of the circular cap cut by a chord of half-length r."""
    return radius - math.sqrt(max(radius**2 - r**2, 0.0))


def closed_form_solution(
    grid: Grid,
    boundary_profile: str,
    boundary_params: dict[str, Any] | None,
    coefficient_family: str,
    coefficient_params: dict[str, Any] | None,
    rhs_family: str,
    rhs_params: dict[str, Any] | None,
) -> ScalarField | None:
    """The exact solution when the data match a closed form, else None.

    Closed forms need identity coefficients and constant f; the half-space
    profile additionally needs f = 2c and the radial profile f = mu.
    """
    coefficient_params = dict(coefficient_params or {})
    identity = coefficient_family == "identity" or (
        coefficient_family == "constant"
        and np.array_equal(np.asarray(coefficient_params.get("matrix")), np.eye(grid.dimension))
    )
    if not identity or rhs_family != "constant":
        return None
    f_value = float(dict(rhs_params or {}).get("value", 1.0))
    params = dict(boundary_params or {})
    match boundary_profile:
        case BoundaryProfile.HALF_SPACE:
            c = float(params.get("coefficient", 0.5))
            if math.isclose(f_value, 2 * c, rel_tol=1e-12):
                return ScalarField(grid, half_space(grid.coordinates, c))
        case BoundaryProfile.RADIAL:
            mu = float(params.get("mu", 1.0))
            if math.isclose(f_value, mu, rel_tol=1e-12):
                return ScalarField(grid, radial(grid.coordinates, float(params.get("r0", 0.4)), mu))
    return None


def free_boundary_error(points: np.ndarray, boundary_profile: str, boundary_params: dict[str, Any] | None) -> float | None:
    """Largest distance of FB nodes from the exact free boundary of a closed form."""
    if points.size == 0:
        return None
    params = dict(boundary_params or {})
    match boundary_profile:
        case BoundaryProfile.HALF_SPACE:
            return float(np.max(np.abs(points[:, -1])))
        case BoundaryProfile.RADIAL:
            r0 = float(params.get("r0", 0.4))
            return float(np.max(np.abs(np.linalg.norm(points, axis=1) - r0)))
    return None


# Parameter names accepted per boundary profile
BOUNDARY_PARAMETERS: dict[str, set[str]] = {
    BoundaryProfile.ZERO: set(),
    BoundaryProfile.HALF_SPACE: {"coefficient"},
    BoundaryProfile.RADIAL: {"r0", "mu"},
    BoundaryProfile.CUSTOM: {"path"},
}

SYNTHETIC_PARAMETERS: dict[str, set[str]] = {
    SyntheticField.HALF_SPACE: {"coefficient"},
    SyntheticField.QUARTIC: set(),
    SyntheticField.LINE_CONTACT: set(),
    SyntheticField.PARABOLOID: set(),
    SyntheticField.RADIAL: {"r0", "mu"},
}
