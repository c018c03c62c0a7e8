"""Free boundary geometry of a discrete solution.

Positivity and contact sets, density ratios, quadratic rescalings, Hausdorff
distances, best planes, the modulus of flatness and half-space blowup fits.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import null_space
from scipy.spatial import cKDTree

from core.exceptions import DegenerateFitError, EmptyPointSetError, PreconditionError
from core.grid import Grid, ScalarField, ball_nodes
from models.reports import BlowupFit, FlatnessReport, FlatnessRow

logger = logging.getLogger(__name__)

# τ_pos = h² · POSITIVITY_FACTOR
POSITIVITY_FACTOR = 0.01
MIN_DENSITY_RADIUS = 4  # in units of h
MIN_FLATNESS_RADIUS = 2  # in units of h
MIN_RESCALE_FACTOR = 16  # ε ≥ 16h

REGULAR_DENSITY = 0.5
REGULAR_BAND = 0.1
SINGULAR_THRESHOLD = 0.1
# Rounding allowance when comparing band distances
BAND_SLACK = 1e-12

ANGULAR_SAMPLES_2D = 64
POLAR_SAMPLES_3D = 16
AZIMUTH_SAMPLES_3D = 32
REFINEMENT_LEVELS = 2
REFINEMENT_FACTOR = 4


class PointClass(StrEnum):
    """Finite-radius classification of a free boundary point."""

    REGULAR = "regular"
    SINGULAR = "singular"
    UNDETERMINED = "undetermined"


def default_threshold(grid: Grid) -> float:
    return POSITIVITY_FACTOR * grid.spacing**2


@dataclass(frozen=True, eq=False)
class FreeBoundaryGeometry:
    """Positivity set, contact set and free boundary nodes of a field.

    Masks are over all grid nodes; boundary nodes belong to neither set.
    """

    w: ScalarField
    tau_pos: float
    positive: np.ndarray = field(repr=False)
    contact: np.ndarray = field(repr=False)
    free_boundary: np.ndarray = field(repr=False)

    @property
    def grid(self) -> Grid:
        return self.w.grid

    @cached_property
    def free_boundary_indices(self) -> np.ndarray:
        return np.flatnonzero(self.free_boundary)

    @cached_property
    def free_boundary_points(self) -> np.ndarray:
        """Coordinates of FB nodes, shape (m, n)."""
        return self.grid.coordinates[self.free_boundary_indices]

    @cached_property
    def interface_points(self) -> np.ndarray:
        """Sub-grid crossings of the free boundary, shape (m, n)."""
        points = interface_crossings(self)
        points.flags.writeable = False
        return points

    @property
    def is_empty(self) -> bool:
        return self.free_boundary_indices.size == 0

    def on_free_boundary(self, x) -> bool:
        """Whether the node nearest to x is a free boundary node."""
        return bool(self.free_boundary[self.grid.nearest_node(x)])

    def counts(self) -> dict[str, int]:
        return {
            "positive": int(np.count_nonzero(self.positive)),
            "contact": int(np.count_nonzero(self.contact)),
            "free_boundary": int(self.free_boundary_indices.size),
        }


def _axis_neighbor_of(mask: np.ndarray, grid: Grid) -> np.ndarray:
    """Nodes having at least one axis neighbor inside ``mask``."""
    arr = mask.reshape(grid.shape)
    out = np.zeros_like(arr)
    for axis in range(grid.dimension):
        lower = [slice(None)] * grid.dimension
        upper = [slice(None)] * grid.dimension
        lower[axis] = slice(None, -1)
        upper[axis] = slice(1, None)
        out[tuple(lower)] |= arr[tuple(upper)]
        out[tuple(upper)] |= arr[tuple(lower)]
    return out.ravel()


def extract_geometry(w: ScalarField, tau_pos: float | None = None) -> FreeBoundaryGeometry:
    """Split the interior into {w > τ_pos} and its complement and mark the free boundary.

    Args:
        w: Nonnegative field
        tau_pos: Positivity threshold; h²/100 by default

    Raises:
        PreconditionError: If w has negative values
    """
    grid = w.grid
    if np.any(w.values < 0):
        raise PreconditionError("extract_geometry requires w ≥ 0")
    tau = default_threshold(grid) if tau_pos is None else float(tau_pos)
    interior = grid.interior_mask
    positive = interior & (w.values > tau)
    contact = interior & ~positive
    free_boundary = contact & _axis_neighbor_of(positive, grid)
    for mask in (positive, contact, free_boundary):
        mask.flags.writeable = False
    geometry = FreeBoundaryGeometry(
        w=w, tau_pos=tau, positive=positive, contact=contact, free_boundary=free_boundary
    )
    if geometry.is_empty:
        logger.warning("Free boundary is empty")
    return geometry


# ——— Sub-grid interface ———


def interface_crossings(geom: FreeBoundaryGeometry) -> np.ndarray:
    """Zero crossings of √w on grid edges from FB nodes to positive neighbors.

    Near a regular free boundary w grows like dist², so √w is close to
    linear across the interface. For an edge p → q with q positive, the line
    through √w(q) and √w(q') (q' the next node on the same axis) is followed
    back to its zero, clipped to the segment [p, q]. Where √w does not grow
    from q to q' the crossing falls back to the midpoint of the edge.

    Returns:
        Crossing coordinates, shape (m, n); empty if the free boundary is
    """
    grid = geom.grid
    h = grid.spacing
    last = grid.nodes_per_axis - 1
    root = np.sqrt(np.maximum(geom.w.values, 0.0))
    fb = geom.free_boundary_indices
    crossings = [np.empty((0, grid.dimension))]
    for axis in range(grid.dimension):
        stride = grid.nodes_per_axis ** (grid.dimension - 1 - axis)
        position = grid.multi_index[fb, axis]
        for sign in (1, -1):
            reach = (position + sign >= 0) & (position + sign <= last)
            p = fb[reach]
            q = p + sign * stride
            keep = geom.positive[q]
            p, q = p[keep], q[keep]
            if not p.size:
                continue
            beyond = grid.multi_index[q, axis] + sign
            has_next = (beyond >= 0) & (beyond <= last)
            s1 = root[q]
            s2 = np.where(has_next, root[np.where(has_next, q + sign * stride, q)], s1)
            growth = s2 - s1
            back = np.full(p.size, 0.5 * h)
            rising = growth > 0
            back[rising] = np.minimum(h * s1[rising] / growth[rising], h)
            points = grid.coordinates[q].copy()
            points[:, axis] -= sign * back
            crossings.append(points)
    return np.concatenate(crossings, axis=0)


def nearest_crossing(geom: FreeBoundaryGeometry, x) -> np.ndarray:
    """The interface crossing closest to x.

    Raises:
        EmptyPointSetError: If the free boundary has no crossing
    """
    points = geom.interface_points
    if points.shape[0] == 0:
        raise EmptyPointSetError("the free boundary has no interface crossing")
    _, index = cKDTree(points).query(np.atleast_1d(np.asarray(x, dtype=float)))
    return points[int(index)].copy()


# ——— Densities ———


def _check_ball(grid: Grid, x, r: float, min_factor: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if r < min_factor * grid.spacing * (1 - 1e-12):
        raise PreconditionError(
            f"radius {r} is below {min_factor}h = {min_factor * grid.spacing} (unresolvable)"
        )
    if not grid.contains_ball(x, r):
        raise PreconditionError(f"ball of radius {r} around {x.tolist()} leaves the box")
    return x


def contact_density(geom: FreeBoundaryGeometry, x, r: float) -> float:
    """measure(Λ_h ∩ B_r(x)) / measure(B_r(x)) over the nodes of the ball.

    Raises:
        PreconditionError: If r < 4h or the ball leaves the box
    """
    grid = geom.grid
    x = _check_ball(grid, x, r, MIN_DENSITY_RADIUS)
    nodes = ball_nodes(grid, x, r)
    return float(np.count_nonzero(geom.contact[nodes]) / nodes.size)


def interface_density(geom: FreeBoundaryGeometry, x, r: float) -> float:
    """Contact density with free boundary nodes counted at weight ½.

    FB nodes straddle the interface; halving them removes the O(h/r) excess
    of the plain ratio, which is exactly ½ at a flat free boundary.
    """
    grid = geom.grid
    x = _check_ball(grid, x, r, MIN_DENSITY_RADIUS)
    nodes = ball_nodes(grid, x, r)
    weight = geom.contact[nodes].astype(float) - 0.5 * geom.free_boundary[nodes]
    return float(weight.sum() / nodes.size)


def density_profile(geom: FreeBoundaryGeometry, x, radii, density=contact_density) -> list[tuple[float, float]]:
    """(r, density) pairs by decreasing radius."""
    return [(float(r), density(geom, x, r)) for r in sorted(radii, reverse=True)]


def band_distance(density: float) -> float:
    """Distance of a density from the regular band [½ − 0.1, ½ + 0.1]."""
    return max(0.0, abs(density - REGULAR_DENSITY) - REGULAR_BAND)


def classify_point(geom: FreeBoundaryGeometry, x, radii) -> PointClass:
    """Regular, singular or undetermined from densities at a finite radius range.

    Regular: the density at the smallest radius lies in the band ½ ± 0.1 and
    the distance to that band does not grow over the three smallest radii.
    Singular: the density at the smallest radius is at most 0.1.

    Raises:
        PreconditionError: If x is not a free boundary node or a radius is inadmissible
    """
    if not geom.on_free_boundary(x):
        raise PreconditionError(f"{np.asarray(x).tolist()} is not a free boundary point")
    profile = density_profile(geom, x, radii)
    if not profile:
        raise PreconditionError("at least one radius is required")
    smallest = profile[-1][1]
    distances = [band_distance(d) for _, d in profile[-3:]]
    approaching = all(b <= a + BAND_SLACK for a, b in itertools.pairwise(distances))
    if band_distance(smallest) == 0.0 and approaching:
        return PointClass.REGULAR
    if smallest <= SINGULAR_THRESHOLD:
        return PointClass.SINGULAR
    return PointClass.UNDETERMINED


# ——— Rescaling ———


def rescale(w: ScalarField, x0, eps: float, target: Grid) -> ScalarField:
    """w_ε(x) = ε⁻² w(x0 + εx) on the target grid, by multilinear interpolation.

    Raises:
        PreconditionError: If ε < 16h or x0 + ε·target leaves the source box
    """
    source = w.grid
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if target.dimension != source.dimension or x0.size != source.dimension:
        raise PreconditionError("rescale requires matching dimensions")
    if eps < MIN_RESCALE_FACTOR * source.spacing * (1 - 1e-12):
        raise PreconditionError(
            f"eps = {eps} is below {MIN_RESCALE_FACTOR}h = {MIN_RESCALE_FACTOR * source.spacing}"
        )
    points = x0 + eps * target.coordinates
    slack = 1e-12 * source.half_width
    if np.any(np.abs(points) > source.half_width + slack):
        raise PreconditionError("rescaled target reaches outside the source box")
    points = np.clip(points, -source.half_width, source.half_width)
    interpolator = RegularGridInterpolator(
        (source.axis,) * source.dimension, w.as_array(), method="linear"
    )
    return ScalarField(target, interpolator(points) / eps**2)


# ——— Distances and planes ———


def hausdorff_distance(a, b) -> float:
    """max(sup_a d(a, B), sup_b d(b, A)) over two finite point sets.

    Raises:
        EmptyPointSetError: If either set is empty
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptyPointSetError()
    a = a.reshape(a.shape[0], -1)
    b = b.reshape(b.shape[0], -1)
    forward, _ = cKDTree(b).query(a)
    backward, _ = cKDTree(a).query(b)
    return float(max(forward.max(), backward.max()))


@dataclass(frozen=True)
class Hyperplane:
    """Plane {y : normal·y = offset} through ``point``."""

    normal: np.ndarray
    offset: float
    point: np.ndarray
    residual: float
    count: int

    def distance(self, points) -> np.ndarray:
        return np.abs(np.asarray(points, dtype=float) @ self.normal - self.offset)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    return v if v[int(np.argmax(np.abs(v)))] > 0 else -v


def best_plane(points, x, r: float) -> Hyperplane:
    """Total least-squares plane through x fitted to the points in B_r(x).

    The normal is the eigenvector of the smallest eigenvalue of the second
    moment matrix of (p − x), with its largest component made positive.

    Raises:
        DegenerateFitError: If fewer than n points lie in the ball
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    pts = np.asarray(points, dtype=float).reshape(-1, n)
    rel = pts - x
    rel = rel[np.linalg.norm(rel, axis=1) < r]
    if rel.shape[0] < n:
        raise DegenerateFitError(
            f"{rel.shape[0]} point(s) in B_{r}(x), at least {n} needed for a plane",
            details={"radius": r, "count": int(rel.shape[0])},
        )
    moment = rel.T @ rel
    eigenvalues, eigenvectors = np.linalg.eigh(moment)
    normal = _canonical_sign(eigenvectors[:, 0])
    return Hyperplane(
        normal=normal,
        offset=float(normal @ x),
        point=x,
        residual=float(np.sum((rel @ normal) ** 2)),
        count=int(rel.shape[0]),
    )


def plane_samples(plane: Hyperplane, r: float, spacing: float) -> np.ndarray:
    """Lattice points of plane ∩ B_r(point) at the given spacing."""
    n = plane.point.size
    if n == 1:
        return plane.point.reshape(1, 1)
    basis = null_space(plane.normal.reshape(1, n))
    m = math.ceil(r / spacing)
    steps = np.arange(-m, m + 1) * spacing
    grid = np.stack([g.ravel() for g in np.meshgrid(*([steps] * (n - 1)), indexing="ij")], axis=1)
    grid = grid[np.linalg.norm(grid, axis=1) < r]
    return plane.point + grid @ basis.T


def flatness_modulus(geom: FreeBoundaryGeometry, x, radii, subgrid: bool = False) -> FlatnessReport:
    """Best-plane Hausdorff distances d(r) and θ(r) = max over ρ ≤ r of d(ρ)/ρ.

    Radii with a degenerate plane fit are marked skipped and carry the
    running modulus accumulated so far. With ``subgrid`` the free boundary is
    represented by its interface crossings and the balls are centred on the
    crossing nearest to x, which removes the node staircase of about h from d.

    Raises:
        PreconditionError: If x is not a free boundary node or a radius is inadmissible
    """
    grid = geom.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not geom.on_free_boundary(x):
        raise PreconditionError(f"{x.tolist()} is not a free boundary point")
    if subgrid:
        x = nearest_crossing(geom, x)
        points = geom.interface_points
    else:
        points = geom.free_boundary_points
    radii = sorted({float(r) for r in radii})
    for r in radii:
        _check_ball(grid, x, r, MIN_FLATNESS_RADIUS)

    rows: list[FlatnessRow] = []
    running: float | None = None
    for r in radii:
        try:
            plane = best_plane(points, x, r)
        except DegenerateFitError as exc:
            logger.debug(f"Skipping radius {r}: {exc.message}")
            rows.append(FlatnessRow(radius=r, modulus=running, skipped=True, reason=exc.message))
            continue
        inside = points[np.linalg.norm(points - x, axis=1) < r]
        distance = hausdorff_distance(plane_samples(plane, r, grid.spacing / 2), inside)
        ratio = distance / r
        running = ratio if running is None else max(running, ratio)
        rows.append(
            FlatnessRow(
                radius=r,
                normal=plane.normal.tolist(),
                offset=plane.offset,
                distance=distance,
                ratio=ratio,
                modulus=running,
            )
        )
    rows.reverse()
    return FlatnessReport(center=x.tolist(), rows=rows)


# ——— Blowup fit ———


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.where(np.abs(v) < 1e-14, 0.0, v)
    return v / np.linalg.norm(v)


def _direction_2d(angle: float) -> np.ndarray:
    return _unit(np.array([math.cos(angle), math.sin(angle)]))


def _direction_3d(polar: float, azimuth: float) -> np.ndarray:
    return _unit(
        np.array(
            [
                math.sin(polar) * math.cos(azimuth),
                math.sin(polar) * math.sin(azimuth),
                math.cos(polar),
            ]
        )
    )


def _fit_direction(coords: np.ndarray, values: np.ndarray, peak: float, e: np.ndarray):
    basis = np.maximum(coords @ e, 0.0) ** 2
    norm2 = float(basis @ basis)
    if norm2 == 0.0:
        return math.inf, 0.0
    c = float(basis @ values) / norm2
    return float(np.max(np.abs(values - c * basis))) / peak, c


def homogeneity_fit(w: ScalarField) -> BlowupFit:
    """Fit c·((e·x)⁺)² to w on the nodes of the closed unit ball.

    Directions come from an angular grid refined twice by a factor of four
    around the best sample; c is the least-squares constant for each e.

    Raises:
        DegenerateFitError: If w vanishes on the unit ball
    """
    grid = w.grid
    inside = np.linalg.norm(grid.coordinates, axis=1) <= 1.0 + 1e-12
    coords = grid.coordinates[inside]
    values = w.values[inside]
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak == 0.0:
        raise DegenerateFitError("cannot fit a blowup profile to a zero field")

    def evaluate(e: np.ndarray):
        residual, c = _fit_direction(coords, values, peak, e)
        return residual, c, e

    n = grid.dimension
    if n == 1:
        best = min((evaluate(np.array([s])) for s in (1.0, -1.0)), key=lambda t: t[0])
    elif n == 2:
        step = 2 * math.pi / ANGULAR_SAMPLES_2D
        angle = min(
            (j * step for j in range(ANGULAR_SAMPLES_2D)),
            key=lambda a: evaluate(_direction_2d(a))[0],
        )
        for _ in range(REFINEMENT_LEVELS):
            step /= REFINEMENT_FACTOR
            span = range(-REFINEMENT_FACTOR, REFINEMENT_FACTOR + 1)
            angle = min((angle + k * step for k in span), key=lambda a: evaluate(_direction_2d(a))[0])
        best = evaluate(_direction_2d(angle))
    else:
        polar_step = math.pi / POLAR_SAMPLES_3D
        azimuth_step = 2 * math.pi / AZIMUTH_SAMPLES_3D
        candidates = [
            (i * polar_step, j * azimuth_step)
            for i in range(POLAR_SAMPLES_3D + 1)
            for j in range(AZIMUTH_SAMPLES_3D)
        ]
        angles = min(candidates, key=lambda a: evaluate(_direction_3d(*a))[0])
        for _ in range(REFINEMENT_LEVELS):
            polar_step /= REFINEMENT_FACTOR
            azimuth_step /= REFINEMENT_FACTOR
            span = range(-REFINEMENT_FACTOR, REFINEMENT_FACTOR + 1)
            candidates = [
                (angles[0] + k * polar_step, angles[1] + l * azimuth_step) for k in span for l in span
            ]
            angles = min(candidates, key=lambda a: evaluate(_direction_3d(*a))[0])
        best = evaluate(_direction_3d(*angles))

    residual, c, e = best
    return BlowupFit(direction=e.tolist(), coefficient=c, residual=residual)
