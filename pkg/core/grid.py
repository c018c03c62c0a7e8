"""Uniform node-centered Cartesian grids and scalar fields on them.

The computational domain is the box ``[-half_width, half_width]^n``. Nodes are
stored in lexicographic (C) order with axis 0 varying slowest, which is also
the order of the field text format.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from core.exceptions import PreconditionError, ValidationError

MIN_NODES_PER_AXIS = 9


@dataclass(frozen=True)
class Grid:
    """Node-centered discretization of a box.

    Constructing a ``Grid`` directly only requires two nodes per axis;
    ``build_grid`` enforces the resolution needed for free boundary analysis.
    """

    dimension: int
    half_width: float
    nodes_per_axis: int

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValidationError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.nodes_per_axis < 2:
            raise ValidationError("nodes_per_axis must be at least 2")
        if not self.half_width > 0:
            raise ValidationError("half_width must be positive")

    @property
    def spacing(self) -> float:
        """Grid spacing h = 2·half_width / (nodes_per_axis - 1)."""
        return 2.0 * self.half_width / (self.nodes_per_axis - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.dimension

    @property
    def node_count(self) -> int:
        return self.nodes_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        """Measure carried by a single node, h^n."""
        return self.spacing**self.dimension

    @cached_property
    def axis(self) -> np.ndarray:
        """1D node coordinates, exactly antisymmetric (the end points are ±half_width)."""
        coords = np.linspace(-self.half_width, self.half_width, self.nodes_per_axis)
        coords = 0.5 * (coords - coords[::-1])
        coords.flags.writeable = False
        return coords

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape (node_count, dimension)."""
        mesh = np.meshgrid(*([self.axis] * self.dimension), indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=1)
        coords.flags.writeable = False
        return coords

    @cached_property
    def multi_index(self) -> np.ndarray:
        """Integer node indices per axis, shape (node_count, dimension)."""
        idx = np.stack(
            [i.ravel() for i in np.indices(self.shape)], axis=1
        ).astype(np.intp)
        idx.flags.writeable = False
        return idx

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """True exactly on nodes with some coordinate at ±half_width."""
        last = self.nodes_per_axis - 1
        mask = np.any((self.multi_index == 0) | (self.multi_index == last), axis=1)
        mask.flags.writeable = False
        return mask

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    @cached_property
    def interior_indices(self) -> np.ndarray:
        idx = np.flatnonzero(self.interior_mask)
        idx.flags.writeable = False
        return idx

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        """Per-node tensor trapezoid weights (1 inside, 1/2 per boundary axis)."""
        w1 = np.ones(self.nodes_per_axis)
        w1[0] = w1[-1] = 0.5
        weights = w1
        for _ in range(self.dimension - 1):
            weights = np.multiply.outer(weights, w1)
        flat = np.asarray(weights, dtype=float).ravel()
        flat.flags.writeable = False
        return flat

    def nearest_node(self, point) -> int:
        """Flat index of the node closest to ``point``."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        idx = np.rint((p + self.half_width) / self.spacing).astype(int)
        idx = np.clip(idx, 0, self.nodes_per_axis - 1)
        return int(np.ravel_multi_index(tuple(idx), self.shape))

    def contains_ball(self, center, r: float) -> bool:
        """Whether the closed ball B_r(center) lies inside the box."""
        c = np.atleast_1d(np.asarray(center, dtype=float))
        return bool(np.all(np.abs(c) + r <= self.half_width + 1e-12))

    def describe(self) -> dict:
        return {
            "dimension": self.dimension,
            "half_width": self.half_width,
            "nodes_per_axis": self.nodes_per_axis,
            "h": self.spacing,
        }


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One real value per grid node (read-only)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size != self.grid.node_count:
            raise ValidationError(
                f"field has {values.size} values, grid has {self.grid.node_count} nodes"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def as_array(self) -> np.ndarray:
        """Values reshaped to the grid shape."""
        return self.values.reshape(self.grid.shape)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.node_count))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ScalarField":
        """Evaluate ``func(coordinates) -> values`` on all nodes."""
        return cls(grid, func(grid.coordinates))


def build_grid(n: int, half_width: float, nodes_per_axis: int) -> Grid:
    """Build a grid fine enough for free boundary analysis.

    Args:
        n: Space dimension (1, 2 or 3)
        half_width: The box is [-half_width, half_width]^n
        nodes_per_axis: Number of nodes per axis (at least 9)

    Raises:
        ValidationError: If the dimension or resolution is not supported
    """
    if n not in (1, 2, 3):
        raise ValidationError(f"dimension must be 1, 2 or 3, got {n}")
    if nodes_per_axis < MIN_NODES_PER_AXIS:
        raise ValidationError(
            f"nodes_per_axis must be at least {MIN_NODES_PER_AXIS} "
            f"(got {nodes_per_axis}); too coarse for free boundary analysis"
        )
    return Grid(dimension=n, half_width=float(half_width), nodes_per_axis=nodes_per_axis)


def ball_nodes(grid: Grid, center, r: float) -> np.ndarray:
    """Flat indices (sorted) of the nodes at Euclidean distance < r from center."""
    if not r > 0:
        raise PreconditionError(f"ball radius must be positive, got {r}")
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.size != grid.dimension:
        raise PreconditionError(
            f"center has {c.size} coordinates, grid is {grid.dimension}-dimensional"
        )
    h = grid.spacing
    last = grid.nodes_per_axis - 1
    ranges = []
    for k in range(grid.dimension):
        # one extra node on each side absorbs rounding; the distance test decides
        lo = max(0, math.ceil((c[k] - r + grid.half_width) / h) - 1)
        hi = min(last, math.floor((c[k] + r + grid.half_width) / h) + 1)
        if lo > hi:
            return np.empty(0, dtype=np.intp)
        ranges.append(np.arange(lo, hi + 1))
    sub = np.meshgrid(*ranges, indexing="ij")
    dist2 = np.zeros(sub[0].shape)
    for k in range(grid.dimension):
        dist2 += (grid.axis[sub[k]] - c[k]) ** 2
    inside = dist2 < r * r
    idx = np.ravel_multi_index(tuple(s[inside] for s in sub), grid.shape)
    return np.sort(np.asarray(idx, dtype=np.intp))


def measure(grid: Grid, nodes) -> float:
    """Counting measure times h^n of a node set (index array or boolean mask)."""
    arr = np.asarray(nodes)
    if arr.dtype == bool:
        count = int(np.count_nonzero(arr))
    else:
        count = int(np.unique(arr).size)
    return count * grid.cell_volume


def unit_ball_volume(n: int) -> float:
    """Volume ω_n of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)
