"""Discrete divergence-form operator and the obstacle problem as an LCP.

The operator is assembled from the discrete energy

    J(w) = h^n [ wᵀ M w + 2 Σ_i ω_i f_i w_i ]

where ``M`` collects the face terms a_face (Δ_k w / h)² (face coefficients are
arithmetic means of the adjacent nodal a^{kk}) and, for constant off-diagonal
a^{kl}, the cell terms 2 a^{kl} (G_k w)(G_l w). Restricting ``M`` to interior
rows gives K ≈ −div(a∇·); its KKT system is the linear complementarity problem

    w ≥ 0,   K w + F ≥ 0,   w · (K w + F) = 0,

with F = f on interior nodes plus the folded boundary data.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from core.coeff import CoefficientField, constant_coefficients
from core.exceptions import (
    NonConvergenceError,
    PreconditionError,
    UnsupportedCoefficientsError,
    ValidationError,
)
from core.grid import Grid, ScalarField
from models.reports import EquivalenceReport, SolveSummary

logger = logging.getLogger(__name__)

PSOR_OMEGA = 1.5
CG_RTOL = 1e-12
# Correction solves allowed when CG alone misses the absolute residual target
MAX_REFINEMENTS = 5
# PSOR evaluates the complementarity residual every this many sweeps
RESIDUAL_CHECK_INTERVAL = 10
# Outer active set iterations allowed beyond one per unknown
ACTIVE_SET_SLACK = 10
RAYLEIGH_SAMPLES = 20
COMPETITOR_SLACK = 1e-12


class SolverMethod(StrEnum):
    """LCP solvers."""

    PSOR = "psor"
    ACTIVE_SET = "active_set"


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Stiffness operator over interior nodes plus the folded load."""

    grid: Grid
    full: sp.csr_matrix = field(repr=False)
    K: sp.csr_matrix = field(repr=False)
    K_boundary: sp.csr_matrix = field(repr=False)
    load: np.ndarray = field(repr=False)
    forcing: np.ndarray = field(repr=False)

    def apply(self, w_full: np.ndarray) -> np.ndarray:
        """−div(a∇w) at interior nodes for a full-grid vector (boundary included)."""
        return (self.full @ np.asarray(w_full, dtype=float))[self.grid.interior_indices]

    def lcp_residual(self, w_interior: np.ndarray) -> np.ndarray:
        """Nodewise complementarity defect min(w, Kw + F)."""
        return np.minimum(w_interior, self.K @ w_interior + self.load)


@dataclass(frozen=True, eq=False)
class ObstacleProblemSpec:
    """Grid, certified coefficients, boundary data and solver tolerances.

    ``boundary`` holds one value per grid node; only boundary entries are used.
    """

    grid: Grid
    coefficients: CoefficientField
    boundary: np.ndarray = field(repr=False)
    tol: float = 1e-10
    max_iter: int = 200_000

    def __post_init__(self):
        if self.coefficients.grid != self.grid:
            raise ValidationError("coefficients live on a different grid")
        psi = np.array(self.boundary, dtype=float).ravel()
        if psi.size != self.grid.node_count:
            raise ValidationError(
                f"boundary data has {psi.size} values, grid has {self.grid.node_count} nodes"
            )
        psi[self.grid.interior_mask] = 0.0
        if np.any(psi < 0):
            raise ValidationError("boundary data must be nonnegative (w ≥ 0 on ∂Ω)")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")
        psi.flags.writeable = False
        object.__setattr__(self, "boundary", psi)

    @property
    def boundary_is_zero(self) -> bool:
        return not np.any(self.boundary)

    @cached_property
    def operator(self) -> "DiscreteOperator":
        return assemble(self)

    @property
    def scale(self) -> float:
        """max(1, ‖f‖∞ over interior nodes)."""
        f_interior = self.coefficients.f[self.grid.interior_indices]
        return max(1.0, float(np.max(np.abs(f_interior))) if f_interior.size else 0.0)

    def with_boundary(self, boundary: np.ndarray) -> "ObstacleProblemSpec":
        return ObstacleProblemSpec(self.grid, self.coefficients, boundary, self.tol, self.max_iter)

    def with_coefficients(self, coefficients: CoefficientField) -> "ObstacleProblemSpec":
        return ObstacleProblemSpec(self.grid, coefficients, self.boundary, self.tol, self.max_iter)

    def fingerprint(self) -> dict:
        return {
            "grid": self.grid.describe(),
            "coefficients": self.coefficients.fingerprint(),
            "tol": self.tol,
            "max_iter": self.max_iter,
        }


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Solution of the discrete obstacle problem."""

    w: ScalarField
    iterations: int
    residual: float
    tolerance: float
    active: np.ndarray = field(repr=False)
    positive: np.ndarray = field(repr=False)
    energy: float
    method: str
    converged: bool

    def summary(self) -> SolveSummary:
        return SolveSummary(
            method=self.method,
            iterations=self.iterations,
            residual=self.residual,
            tolerance=self.tolerance,
            energy=self.energy,
            active_count=int(self.active.size),
            positive_count=int(self.positive.size),
            converged=self.converged,
        )


# ——— Assembly ———


def _kron_all(factors: list) -> sp.csr_matrix:
    out = factors[0]
    for factor in factors[1:]:
        out = sp.kron(out, factor, format="csr")
    return sp.csr_matrix(out)


def _kron_vectors(factors: list[np.ndarray]) -> np.ndarray:
    out = factors[0]
    for factor in factors[1:]:
        out = np.kron(out, factor)
    return out


def _one_dimensional_factors(grid: Grid):
    N, h = grid.nodes_per_axis, grid.spacing
    difference = sp.diags([-np.ones(N - 1), np.ones(N - 1)], [0, 1], shape=(N - 1, N)) / h
    average = sp.diags([0.5 * np.ones(N - 1), 0.5 * np.ones(N - 1)], [0, 1], shape=(N - 1, N))
    trapezoid = np.ones(N)
    trapezoid[0] = trapezoid[-1] = 0.5
    return sp.csr_matrix(difference), sp.csr_matrix(average), sp.identity(N, format="csr"), trapezoid


def energy_matrix(grid: Grid, coefficients: CoefficientField) -> sp.csr_matrix:
    """Symmetric matrix M of the quadratic part of the discrete energy (all nodes).

    Raises:
        UnsupportedCoefficientsError: If off-diagonal coefficients vary in space
    """
    n = grid.dimension
    off_diagonal = coefficients.off_diagonal_constant()
    if off_diagonal is None:
        raise UnsupportedCoefficientsError(
            "variable off-diagonal coefficients are not supported by the stencil"
        )
    difference, average, identity, trapezoid = _one_dimensional_factors(grid)
    N = grid.nodes_per_axis

    M = sp.csr_matrix((grid.node_count, grid.node_count))
    for k in range(n):
        D_k = _kron_all([difference if j == k else identity for j in range(n)])
        A_k = _kron_all([average if j == k else identity for j in range(n)])
        face_coefficient = A_k @ coefficients.diagonal[:, k]
        face_weight = _kron_vectors([np.ones(N - 1) if j == k else trapezoid for j in range(n)])
        M = M + D_k.T @ sp.diags(face_weight * face_coefficient) @ D_k

    for k in range(n):
        for l in range(k + 1, n):
            a_kl = float(off_diagonal[k, l])
            if a_kl == 0.0:
                continue
            G_k = _kron_all([difference if j == k else average for j in range(n)])
            G_l = _kron_all([difference if j == l else average for j in range(n)])
            M = M + a_kl * (G_k.T @ G_l + G_l.T @ G_k)

    # exact symmetry regardless of summation order in the sparse products
    return sp.csr_matrix((M + M.T) * 0.5)


def _certify_positive_definite(K: sp.csr_matrix, samples: int = RAYLEIGH_SAMPLES) -> float:
    rng = np.random.default_rng(0)
    smallest = math.inf
    for _ in range(samples):
        x = rng.standard_normal(K.shape[0])
        smallest = min(smallest, float(x @ (K @ x)) / float(x @ x))
    if not smallest > 0:
        raise ValidationError(f"stiffness operator is not positive definite (Rayleigh quotient {smallest:.3g})")
    return smallest


def assemble(spec: ObstacleProblemSpec) -> DiscreteOperator:
    """Assemble K ≈ −div(a∇·) over interior nodes and fold boundary data into F.

    Raises:
        UnsupportedCoefficientsError: If off-diagonal coefficients vary in space
    """
    grid = spec.grid
    M = energy_matrix(grid, spec.coefficients)
    interior = grid.interior_indices
    rows = M[interior]
    K = sp.csr_matrix(rows[:, interior])
    K_boundary = sp.csr_matrix(rows[:, np.flatnonzero(grid.boundary_mask)])
    if K.shape[0] and abs(K - K.T).max() != 0:
        raise ValidationError("stiffness operator is not symmetric")
    if K.shape[0]:
        _certify_positive_definite(K)

    forcing = spec.coefficients.f[interior].copy()
    fold = K_boundary @ spec.boundary[grid.boundary_mask]
    load = forcing + fold
    forcing.flags.writeable = False
    load.flags.writeable = False
    logger.debug(f"Assembled operator with {K.shape[0]} unknowns and {K.nnz} nonzeros")
    return DiscreteOperator(grid=grid, full=M, K=K, K_boundary=K_boundary, load=load, forcing=forcing)


# ——— Energy ———


def energy(w: ScalarField, spec: ObstacleProblemSpec, operator: DiscreteOperator | None = None) -> float:
    """Discrete energy ∫ (a∇w·∇w + 2 f w) (faces by midpoint rule, nodes by trapezoid rule)."""
    if w.grid != spec.grid:
        raise ValidationError("field and problem live on different grids")
    M = (operator or spec.operator).full
    grid = spec.grid
    values = w.values
    quadratic = float(values @ (M @ values))
    linear = float(np.sum(grid.trapezoid_weights * spec.coefficients.f * values))
    return grid.cell_volume * (quadratic + 2.0 * linear)


# ——— Solvers ———


def _node_colors(grid: Grid) -> np.ndarray:
    """2^n-coloring of interior nodes; equal colors are never stencil neighbors."""
    parity = grid.multi_index[grid.interior_indices] % 2
    return np.sum(parity << np.arange(grid.dimension), axis=1)


def _psor(spec: ObstacleProblemSpec, op: DiscreteOperator, target: float) -> tuple[np.ndarray, int, float]:
    K, F = op.K, op.load
    w = np.zeros(K.shape[0])
    diagonal = K.diagonal()
    colors = _node_colors(spec.grid)
    blocks = []
    for color in np.unique(colors):
        rows = np.flatnonzero(colors == color)
        blocks.append((rows, sp.csr_matrix(K[rows]), diagonal[rows]))

    residual = math.inf
    sweeps = 0
    while sweeps < spec.max_iter:
        for rows, K_rows, d_rows in blocks:
            defect = K_rows @ w + F[rows]
            w[rows] = np.maximum(0.0, w[rows] - PSOR_OMEGA * defect / d_rows)
        sweeps += 1
        if sweeps % RESIDUAL_CHECK_INTERVAL == 0 or sweeps == spec.max_iter:
            residual = float(np.max(np.abs(op.lcp_residual(w)))) if w.size else 0.0
            if residual <= target:
                break
    logger.debug(f"PSOR stopped after {sweeps} sweeps with residual {residual:.3e}")
    return w, sweeps, residual


def _restricted_solve(K_sub: sp.csr_matrix, b: np.ndarray, x0: np.ndarray, target: float) -> np.ndarray:
    x, info = cg(K_sub, b, x0=x0, rtol=CG_RTOL, atol=0.0, maxiter=10 * max(1, b.size))
    if info > 0:
        logger.warning(f"CG did not reach rtol={CG_RTOL} in {info} iterations")
    for _ in range(MAX_REFINEMENTS):
        r = b - K_sub @ x
        if not r.size or float(np.max(np.abs(r))) <= target:
            break
        correction, _ = cg(K_sub, r, rtol=CG_RTOL, atol=0.0, maxiter=10 * max(1, b.size))
        x = x + correction
    return x


def _active_set(spec: ObstacleProblemSpec, op: DiscreteOperator, target: float) -> tuple[np.ndarray, int, float]:
    """Primal-dual active set iteration with multiplier λ = Kw + F.

    Starts from the unconstrained solve (empty active set). A return to an
    earlier active set other than the current one is a cycle.

    Raises:
        NonConvergenceError: If the active set cycles
    """
    K, F = op.K, op.load
    w = np.zeros(K.shape[0])
    active = np.zeros(K.shape[0], dtype=bool)
    seen = {np.packbits(active).tobytes(): 0}
    budget = min(spec.max_iter, K.shape[0] + ACTIVE_SET_SLACK)
    residual = math.inf
    iterations = 0
    while iterations < budget:
        iterations += 1
        inactive = np.flatnonzero(~active)
        w_next = np.zeros_like(w)
        if inactive.size:
            K_sub = sp.csr_matrix(K[inactive][:, inactive])
            w_next[inactive] = _restricted_solve(K_sub, -F[inactive], w[inactive], 0.1 * target)
        multiplier = K @ w_next + F
        next_active = multiplier - w_next > 0
        w = w_next
        residual = float(np.max(np.abs(np.minimum(w, multiplier)))) if w.size else 0.0
        if np.array_equal(next_active, active):
            if residual <= target:
                break
            continue
        key = np.packbits(next_active).tobytes()
        if key in seen:
            logger.error(f"Active set returned to its state after iteration {seen[key]}")
            result = _build_result(spec, np.maximum(w, 0.0), iterations, residual, target, SolverMethod.ACTIVE_SET)
            raise NonConvergenceError(
                f"active set cycled back to iteration {seen[key]} at iteration {iterations}",
                result=result,
                details={"iterations": iterations, "cycle_start": seen[key], "residual": residual},
            )
        seen[key] = iterations
        active = next_active
    logger.debug(f"Active set stopped after {iterations} iterations with residual {residual:.3e}")
    return w, iterations, residual


def _build_result(
    spec: ObstacleProblemSpec,
    w_interior: np.ndarray,
    iterations: int,
    residual: float,
    target: float,
    method: str,
) -> SolveResult:
    grid = spec.grid
    values = spec.boundary.copy()
    values[grid.interior_indices] = w_interior
    w = ScalarField(grid, values)
    interior = grid.interior_indices
    active = interior[w_interior == 0.0]
    positive = interior[w_interior > 0.0]
    return SolveResult(
        w=w,
        iterations=iterations,
        residual=residual,
        tolerance=target,
        active=active,
        positive=positive,
        energy=energy(w, spec),
        method=method,
        converged=residual <= target,
    )


def solve_obstacle(spec: ObstacleProblemSpec, method: str = SolverMethod.PSOR) -> SolveResult:
    """Solve the discrete obstacle problem.

    Args:
        spec: Problem specification
        method: ``psor`` or ``active_set``

    Returns:
        Converged SolveResult with w ≥ 0 at every node

    Raises:
        NonConvergenceError: If the iteration budget is exhausted; the error
            carries the final residual and the unconverged result
    """
    try:
        method = SolverMethod(method)
    except ValueError:
        raise ValidationError(f"unknown solver method '{method}'") from None
    target = spec.tol * spec.scale
    grid = spec.grid

    if spec.boundary_is_zero:
        # w ≡ 0 is the exact minimizer when f > 0 and ψ ≡ 0
        logger.info("Boundary data vanish identically; returning w ≡ 0")
        w_interior = np.zeros(grid.interior_indices.size)
        return _build_result(spec, w_interior, 0, 0.0, target, method)

    op = spec.operator
    if method == SolverMethod.PSOR:
        w_interior, iterations, residual = _psor(spec, op, target)
    else:
        w_interior, iterations, residual = _active_set(spec, op, target)

    # Nonnegativity is exact; the residual is re-evaluated on the projected iterate
    w_interior = np.maximum(w_interior, 0.0)
    residual = float(np.max(np.abs(op.lcp_residual(w_interior)))) if w_interior.size else 0.0
    result = _build_result(spec, w_interior, iterations, residual, target, method)

    if not result.converged:
        logger.error(
            f"{method} did not converge: residual {residual:.3e} > {target:.3e} "
            f"after {iterations} iterations"
        )
        raise NonConvergenceError(
            f"{method} did not converge in {iterations} iterations (residual {residual:.3e})",
            result=result,
            details={"residual": residual, "iterations": iterations, "target": target},
        )
    logger.info(
        f"{method} converged in {iterations} iterations: residual {residual:.3e}, "
        f"{result.active.size} active / {result.positive.size} positive nodes"
    )
    return result


# ——— Checks ———


def equivalence_check(
    result: SolveResult,
    spec: ObstacleProblemSpec,
    competitors: int = 100,
    seed: int = 0,
) -> EquivalenceReport:
    """Check the weak equation on the inactive set and minimality of J.

    The weak-form defect of the nodal test function φ_i is normalized by
    ∫φ_i = h^n, i.e. it is |(Kw + F)_i|, maximized over nodes with w_i > 0.
    Competitors are max(0, w + δξ) with Gaussian ξ on interior nodes and δ
    cycling through four decades, so every competitor is feasible.
    """
    if not result.converged:
        raise PreconditionError("equivalence_check requires a converged result")
    grid = spec.grid
    op = spec.operator
    interior = grid.interior_indices
    w_interior = result.w.values[interior]
    defect_vector = op.K @ w_interior + op.load
    inactive = w_interior > 0
    weak_defect = float(np.max(np.abs(defect_vector[inactive]))) if np.any(inactive) else 0.0

    rng = np.random.default_rng(seed)
    base = result.energy
    scale = max(1.0, result.w.max_abs())
    amplitudes = [1e-4, 1e-3, 1e-2, 1e-1]
    margin = math.inf
    for k in range(competitors):
        values = result.w.values.copy()
        perturbed = w_interior + amplitudes[k % len(amplitudes)] * scale * rng.standard_normal(interior.size)
        values[interior] = np.maximum(perturbed, 0.0)
        margin = min(margin, energy(ScalarField(grid, values), spec) - base)
    return EquivalenceReport(
        weak_defect=weak_defect,
        inactive_count=int(np.count_nonzero(inactive)),
        competitors=competitors,
        competitor_margin=margin if competitors else 0.0,
        minimal=(margin >= -COMPETITOR_SLACK) if competitors else True,
    )


def constant_reference_solve(
    spec: ObstacleProblemSpec,
    w: ScalarField,
    matrix=None,
    mu: float | None = None,
    method: str = SolverMethod.PSOR,
) -> SolveResult:
    """Solve the companion problem with constant A and constant mu, boundary data from w.

    Args:
        spec: Problem whose grid, tolerances and f-range are used
        w: Field whose boundary trace becomes the companion's boundary data
        matrix: Constant SPD matrix A (identity by default)
        mu: Constant right-hand side in [lambda_star, Lambda_star] (mean f by default)
        method: Solver method

    Raises:
        PreconditionError: If mu lies outside [lambda_star, Lambda_star]
    """
    grid = spec.grid
    coefficients = spec.coefficients
    if matrix is None:
        matrix = np.eye(grid.dimension)
    if mu is None:
        mu = float(np.mean(coefficients.f))
    tol = 1e-12 * max(1.0, coefficients.Lam_star)
    if not coefficients.lam_star - tol <= mu <= coefficients.Lam_star + tol:
        raise PreconditionError(
            f"mu = {mu} outside [lambda_star, Lambda_star] = "
            f"[{coefficients.lam_star}, {coefficients.Lam_star}]"
        )
    companion = ObstacleProblemSpec(
        grid=grid,
        coefficients=constant_coefficients(grid, matrix, mu),
        boundary=w.values,
        tol=spec.tol,
        max_iter=spec.max_iter,
    )
    return solve_obstacle(companion, method)
