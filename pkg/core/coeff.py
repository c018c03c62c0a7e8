"""Coefficient fields a^{ij}(x), right-hand sides f(x), and their diagnostics.

Every field is certified on construction: the per-node matrices are checked
for symmetry and their eigenvalue range [lambda, Lambda] is computed by a
brute-force eigenvalue sweep; the range of f gives [lambda_star, Lambda_star].
"""

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np

from core.exceptions import EllipticityError, PreconditionError, ValidationError
from core.grid import Grid, ScalarField, ball_nodes
from models.reports import VMOReport, VMORow

logger = logging.getLogger(__name__)

# Oscillating families must keep 1 ± amplitude comfortably positive
MAX_OSCILLATION_AMPLITUDE = 0.5
# Regularizes log|log|x|| at the origin
LOG_REGULARIZATION = 1e-3
# Default coarsening of VMO centers (every 4th node per axis)
VMO_CENTER_STRIDE = 4


class CoefficientFamily(StrEnum):
    """Coefficient matrix families."""

    IDENTITY = "identity"
    CONSTANT = "constant"
    SMOOTH_OSCILLATION = "smooth_oscillation"
    LOG_OSCILLATION = "log_oscillation"
    CHECKERBOARD = "checkerboard"


class RhsFamily(StrEnum):
    """Right-hand side families for f."""

    CONSTANT = "constant"
    COSINE = "cosine"
    SMOOTH_OSCILLATION = "smooth_oscillation"
    LOG_OSCILLATION = "log_oscillation"
    CHECKERBOARD = "checkerboard"


# Parameter names accepted per family, with defaults
COEFFICIENT_PARAMETERS: dict[str, dict[str, Any]] = {
    CoefficientFamily.IDENTITY: {},
    CoefficientFamily.CONSTANT: {"matrix": None},
    CoefficientFamily.SMOOTH_OSCILLATION: {"t": 0.0, "k": 1},
    CoefficientFamily.LOG_OSCILLATION: {"amplitude": 0.0},
    CoefficientFamily.CHECKERBOARD: {"t": 0.0, "k": 1},
}

RHS_PARAMETERS: dict[str, dict[str, Any]] = {
    RhsFamily.CONSTANT: {"value": 1.0},
    RhsFamily.COSINE: {"t": 0.0, "k": 1, "mean": 1.0},
    RhsFamily.SMOOTH_OSCILLATION: {"t": 0.0, "k": 1, "mean": 1.0},
    RhsFamily.LOG_OSCILLATION: {"amplitude": 0.0, "mean": 1.0},
    RhsFamily.CHECKERBOARD: {"t": 0.0, "k": 1, "mean": 1.0},
}


def _resolve_params(
    family: str, params: dict[str, Any] | None, table: dict[str, dict[str, Any]]
) -> dict[str, Any]:
    allowed = table[family]
    params = dict(params or {})
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise ValidationError(
            f"unknown parameter(s) {unknown} for family '{family}'",
            details={"allowed": sorted(allowed)},
        )
    return {**allowed, **params}


def _check_amplitude(name: str, value: float) -> None:
    if abs(value) > MAX_OSCILLATION_AMPLITUDE:
        raise EllipticityError(
            f"|{name}| = {abs(value)} exceeds {MAX_OSCILLATION_AMPLITUDE}",
            details={name: value},
        )


# ——— Scalar profiles shared by coefficient and right-hand side families ———


def smooth_oscillation_profile(coords: np.ndarray, t: float, k: float) -> np.ndarray:
    """1 + t·sin(2πk x₁)·sin(2πk x₂) (a single sine factor in 1D)."""
    prod = np.ones(coords.shape[0])
    for axis in range(min(coords.shape[1], 2)):
        prod *= np.sin(2 * math.pi * k * coords[:, axis])
    return 1.0 + t * prod


def log_oscillation_profile(
    coords: np.ndarray, amplitude: float, half_width: float
) -> np.ndarray:
    """1 + amplitude·sin(log|log(ρ + ε₀)|), ρ = |x| / (e·R) with R the box radius.

    Scaling by e·R keeps ρ + ε₀ below 1, so the inner logarithm never vanishes
    and the only oscillating singularity is the one at the origin.
    """
    box_radius = half_width * math.sqrt(coords.shape[1])
    rho = np.linalg.norm(coords, axis=1) / (math.e * box_radius)
    inner = np.abs(np.log(rho + LOG_REGULARIZATION))
    return 1.0 + amplitude * np.sin(np.log(inner))


def checkerboard_profile(
    coords: np.ndarray, t: float, k: float, half_width: float
) -> np.ndarray:
    """Piecewise constant 1 ± t on tiles of side 1/(2k) (not VMO)."""
    tiles = np.floor(2 * k * (coords + half_width) + 1e-9).astype(int)
    parity = np.sum(tiles, axis=1) % 2
    return 1.0 + t * np.where(parity == 0, 1.0, -1.0)


def cosine_profile(coords: np.ndarray, t: float, k: float) -> np.ndarray:
    """1 + t·cos(2πk x₁)."""
    return 1.0 + t * np.cos(2 * math.pi * k * coords[:, 0])


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Per-node symmetric matrices a^{ij} and right-hand side f, certified."""

    grid: Grid
    matrices: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    lam: float
    Lam: float
    lam_star: float
    Lam_star: float
    family: str = "custom"
    params: dict[str, Any] = field(default_factory=dict)
    rhs_family: str = "custom"
    rhs_params: dict[str, Any] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    def entry(self, i: int, j: int) -> np.ndarray:
        """Per-node values of a^{ij}."""
        return self.matrices[:, i, j]

    @property
    def diagonal(self) -> np.ndarray:
        """Per-node diagonal entries, shape (node_count, n)."""
        return np.diagonal(self.matrices, axis1=1, axis2=2)

    def off_diagonal_constant(self) -> np.ndarray | None:
        """The constant off-diagonal part, or None if it varies between nodes."""
        n = self.dimension
        off = self.matrices * (1.0 - np.eye(n))
        if np.all(off == off[0]):
            return off[0].copy()
        return None

    @property
    def rhs(self) -> ScalarField:
        return ScalarField(self.grid, self.f)

    def fingerprint(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "params": self.params,
            "rhs_family": self.rhs_family,
            "rhs_params": self.rhs_params,
            "lambda": self.lam,
            "Lambda": self.Lam,
            "lambda_star": self.lam_star,
            "Lambda_star": self.Lam_star,
        }


def certify(
    grid: Grid,
    matrices: np.ndarray,
    f: np.ndarray,
    *,
    family: str = "custom",
    params: dict[str, Any] | None = None,
    rhs_family: str = "custom",
    rhs_params: dict[str, Any] | None = None,
) -> CoefficientField:
    """Check symmetry, ellipticity and positivity of f; return the certified field.

    Raises:
        ValidationError: If shapes do not match the grid or a matrix is not symmetric
        EllipticityError: If some eigenvalue or some value of f is not positive
    """
    n = grid.dimension
    matrices = np.array(matrices, dtype=float).reshape(grid.node_count, n, n)
    f = np.array(f, dtype=float).ravel()
    if f.size != grid.node_count:
        raise ValidationError(f"f has {f.size} values, grid has {grid.node_count} nodes")
    if not np.array_equal(matrices, np.swapaxes(matrices, 1, 2)):
        raise ValidationError("coefficient matrices must be symmetric (a^{ij} = a^{ji})")

    eigenvalues = np.linalg.eigvalsh(matrices)
    lam, Lam = float(eigenvalues.min()), float(eigenvalues.max())
    if not lam > 0:
        raise EllipticityError(f"smallest eigenvalue {lam:.6g} is not positive")
    lam_star, Lam_star = float(f.min()), float(f.max())
    if not lam_star > 0:
        raise EllipticityError(f"f must be bounded below by a positive constant, min f = {lam_star:.6g}")

    matrices.flags.writeable = False
    f.flags.writeable = False
    return CoefficientField(
        grid=grid,
        matrices=matrices,
        f=f,
        lam=lam,
        Lam=Lam,
        lam_star=lam_star,
        Lam_star=Lam_star,
        family=family,
        params=dict(params or {}),
        rhs_family=rhs_family,
        rhs_params=dict(rhs_params or {}),
    )


def make_rhs(grid: Grid, family: str = "constant", params: dict[str, Any] | None = None) -> np.ndarray:
    """Evaluate a right-hand side family on the grid nodes."""
    try:
        family = RhsFamily(family)
    except ValueError:
        raise ValidationError(f"unknown rhs family '{family}'") from None
    p = _resolve_params(family, params, RHS_PARAMETERS)
    coords = grid.coordinates
    match family:
        case RhsFamily.CONSTANT:
            return np.full(grid.node_count, float(p["value"]))
        case RhsFamily.COSINE:
            _check_amplitude("t", p["t"])
            return p["mean"] * cosine_profile(coords, p["t"], p["k"])
        case RhsFamily.SMOOTH_OSCILLATION:
            _check_amplitude("t", p["t"])
            return p["mean"] * smooth_oscillation_profile(coords, p["t"], p["k"])
        case RhsFamily.LOG_OSCILLATION:
            _check_amplitude("amplitude", p["amplitude"])
            return p["mean"] * log_oscillation_profile(coords, p["amplitude"], grid.half_width)
        case RhsFamily.CHECKERBOARD:
            _check_amplitude("t", p["t"])
            return p["mean"] * checkerboard_profile(coords, p["t"], p["k"], grid.half_width)


def make_coefficients(
    grid: Grid,
    family: str = "identity",
    params: dict[str, Any] | None = None,
    *,
    rhs_family: str = "constant",
    rhs_params: dict[str, Any] | None = None,
) -> CoefficientField:
    """Build and certify a coefficient field from a named family.

    Args:
        grid: Grid the field lives on
        family: One of the CoefficientFamily names
        params: Family parameters (``t``/``k``, ``amplitude`` or ``matrix``)
        rhs_family: One of the RhsFamily names for f
        rhs_params: Parameters of the right-hand side family

    Raises:
        ValidationError: Unknown family or parameter
        EllipticityError: Parameters violate ellipticity or positivity of f
    """
    try:
        family = CoefficientFamily(family)
    except ValueError:
        raise ValidationError(f"unknown coefficient family '{family}'") from None
    p = _resolve_params(family, params, COEFFICIENT_PARAMETERS)
    n = grid.dimension
    coords = grid.coordinates
    identity = np.broadcast_to(np.eye(n), (grid.node_count, n, n))

    match family:
        case CoefficientFamily.IDENTITY:
            matrices = identity.copy()
        case CoefficientFamily.CONSTANT:
            if p["matrix"] is None:
                raise ValidationError("family 'constant' requires a 'matrix' parameter")
            A = np.array(p["matrix"], dtype=float)
            if A.shape != (n, n):
                raise ValidationError(f"constant matrix must be {n}x{n}, got {A.shape}")
            matrices = np.broadcast_to(A, (grid.node_count, n, n)).copy()
        case CoefficientFamily.SMOOTH_OSCILLATION:
            _check_amplitude("t", p["t"])
            scale = smooth_oscillation_profile(coords, p["t"], p["k"])
            matrices = identity * scale[:, None, None]
        case CoefficientFamily.LOG_OSCILLATION:
            _check_amplitude("amplitude", p["amplitude"])
            scale = log_oscillation_profile(coords, p["amplitude"], grid.half_width)
            matrices = identity * scale[:, None, None]
        case CoefficientFamily.CHECKERBOARD:
            _check_amplitude("t", p["t"])
            scale = checkerboard_profile(coords, p["t"], p["k"], grid.half_width)
            matrices = identity * scale[:, None, None]

    f = make_rhs(grid, rhs_family, rhs_params)
    coefficients = certify(
        grid,
        matrices,
        f,
        family=str(family),
        params=p,
        rhs_family=str(rhs_family),
        rhs_params=rhs_params,
    )
    logger.debug(
        f"Certified {family} coefficients: lambda={coefficients.lam:.4g}, "
        f"Lambda={coefficients.Lam:.4g}, f in [{coefficients.lam_star:.4g}, "
        f"{coefficients.Lam_star:.4g}]"
    )
    return coefficients


def constant_coefficients(grid: Grid, matrix, mu: float) -> CoefficientField:
    """Constant matrix A with constant right-hand side mu."""
    return make_coefficients(
        grid,
        CoefficientFamily.CONSTANT,
        {"matrix": np.asarray(matrix, dtype=float).tolist()},
        rhs_family=RhsFamily.CONSTANT,
        rhs_params={"value": float(mu)},
    )


def _as_values(grid: Grid, values) -> np.ndarray:
    if isinstance(values, ScalarField):
        return values.values
    arr = np.asarray(values, dtype=float)
    if arr.shape[0] != grid.node_count:
        raise ValidationError(f"expected {grid.node_count} node values, got {arr.shape[0]}")
    return arr


def ball_average(grid: Grid, values, center, r: float) -> np.ndarray:
    """Mean of per-node values (scalars or matrices) over B_r(center)."""
    arr = _as_values(grid, values)
    nodes = ball_nodes(grid, center, r)
    if nodes.size == 0:
        raise PreconditionError(f"ball of radius {r} contains no nodes")
    return arr[nodes].mean(axis=0)


def _dyadic_chain(r: float, floor: float) -> list[float]:
    chain = []
    rho = r
    while rho >= floor * (1 - 1e-12):
        chain.append(rho)
        rho /= 2
    return chain


def vmo_modulus(
    grid: Grid,
    values,
    radii,
    centers=None,
    stride: int = VMO_CENTER_STRIDE,
) -> VMOReport:
    """Estimate the VMO modulus η(r) of a per-node scalar.

    η(r) is the largest mean oscillation (1/|B_ρ|)∫|g − g_{B_ρ(y)}| over the
    sampled centers y and dyadic ρ ≤ r, accumulated as a running maximum over
    the sorted radii. The sample is finite, so the estimate is a lower bound
    of the true supremum.

    Raises:
        PreconditionError: If a radius is below 2h or no center admits the
            largest ball inside the box
    """
    g = _as_values(grid, values)
    if g.ndim != 1:
        raise ValidationError("vmo_modulus expects one value per node; pass a single entry")
    h = grid.spacing
    radii = sorted(float(r) for r in radii)
    if not radii:
        raise PreconditionError("at least one radius is required")
    if radii[0] < 2 * h * (1 - 1e-12):
        raise PreconditionError(f"radius {radii[0]} is below 2h = {2 * h} (unresolvable)")

    r_max = radii[-1]
    if centers is None:
        on_subgrid = np.all(grid.multi_index % stride == 0, axis=1)
        candidates = grid.coordinates[on_subgrid]
    else:
        candidates = np.atleast_2d(np.asarray(centers, dtype=float))
    centers_in = np.array([c for c in candidates if grid.contains_ball(c, r_max)])
    if centers_in.size == 0:
        raise PreconditionError(f"no sampled center admits a ball of radius {r_max} inside the box")

    oscillation: dict[float, float] = {}

    def max_oscillation(rho: float) -> float:
        if rho not in oscillation:
            best = 0.0
            for y in centers_in:
                local = g[ball_nodes(grid, y, rho)]
                if local.size:
                    best = max(best, float(np.mean(np.abs(local - local.mean()))))
            oscillation[rho] = best
        return oscillation[rho]

    rows = []
    eta = 0.0
    for r in radii:
        level = max(max_oscillation(rho) for rho in _dyadic_chain(r, 2 * h))
        eta = max(eta, level)
        rows.append(VMORow(radius=r, oscillation=level, eta=eta))
    return VMOReport(rows=rows, center_count=int(len(centers_in)), radii=radii)


def l_distance_to_constant(
    grid: Grid, values, reference, region=None
) -> tuple[float, float]:
    """Discrete L¹ and L² norms of the entrywise deviation from a constant.

    Args:
        grid: Grid the values live on
        values: Per-node scalars (node_count,) or matrices (node_count, n, n)
        reference: Constant scalar or matrix to compare against
        region: Node indices or boolean mask; all nodes by default

    Returns:
        (L¹ norm, L² norm), both measure-weighted with h^n per node
    """
    arr = _as_values(grid, values)
    if region is not None:
        arr = arr[np.asarray(region)]
    deviation = np.abs(arr - np.asarray(reference, dtype=float))
    per_node = deviation.reshape(deviation.shape[0], -1)
    vol = grid.cell_volume
    l1 = float(np.sum(per_node) * vol)
    l2 = float(math.sqrt(np.sum(per_node**2) * vol))
    return l1, l2
