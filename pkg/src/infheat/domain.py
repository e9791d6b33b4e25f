"""Discrete spatial domains: intervals, rectangles and disks on uniform grids.

Every node of a :class:`Grid` is tagged interior, boundary or exterior.
Dirichlet values live on the boundary layer; exterior nodes are carried
along only so that 2D fields can be stored on the full tensor grid.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

EXTERIOR = 0
INTERIOR = 1
BOUNDARY = 2

KINDS = ("interval", "rectangle", "disk")


@dataclass(frozen=True)
class Domain:
    """Bounded open set with exact distance data.

    ``bounds`` is ``(a, b)`` for an interval, ``(x0, x1, y0, y1)`` for a
    rectangle and ``(cx, cy, radius)`` for a disk.
    """

    kind: str
    bounds: tuple
    exterior_sphere_radius: float | None = None
    interior_sphere_radius: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        b = tuple(float(v) for v in self.bounds)
        object.__setattr__(self, "bounds", b)
        if self.kind == "interval":
            if len(b) != 2 or not b[0] < b[1]:
                raise ValueError(f"empty interval {b}")
        elif self.kind == "rectangle":
            if len(b) != 4 or not (b[0] < b[1] and b[2] < b[3]):
                raise ValueError(f"empty rectangle {b}")
        else:
            if len(b) != 3 or not b[2] > 0:
                raise ValueError(f"disk needs (cx, cy, radius > 0), got {b}")
        for name in ("exterior_sphere_radius", "interior_sphere_radius"):
            r = getattr(self, name)
            if r is not None and not r > 0:
                raise ValueError(f"{name} must be positive, got {r}")
        r0 = self.interior_sphere_radius
        if self.kind == "disk" and r0 is not None and r0 > b[2]:
            raise ValueError("interior sphere radius exceeds disk radius")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    def distance(self, x: np.ndarray) -> np.ndarray:
        """Unsigned distance to the boundary for points inside the closure.

        ``x`` has shape ``(n, dim)``. Points outside get their (positive)
        distance to the boundary as well, except for rectangles where the
        inside formula is used and clipped at zero.
        """
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        if self.kind == "interval":
            a, b = self.bounds
            return np.abs(np.minimum(x[:, 0] - a, b - x[:, 0]))
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            d = np.minimum.reduce([x[:, 0] - x0, x1 - x[:, 0],
                                   x[:, 1] - y0, y1 - x[:, 1]])
            return np.maximum(d, 0.0)
        cx, cy, rho = self.bounds
        return np.abs(rho - np.hypot(x[:, 0] - cx, x[:, 1] - cy))

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        if self.kind == "interval":
            a, b = self.bounds
            return (x[:, 0] > a) & (x[:, 0] < b)
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            return ((x[:, 0] > x0) & (x[:, 0] < x1)
                    & (x[:, 1] > y0) & (x[:, 1] < y1))
        cx, cy, rho = self.bounds
        return np.hypot(x[:, 0] - cx, x[:, 1] - cy) < rho

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bounds": list(self.bounds),
            "exterior_sphere_radius": self.exterior_sphere_radius,
            "interior_sphere_radius": self.interior_sphere_radius,
        }


def stencil_directions(dim: int, k: int) -> np.ndarray:
    """Primitive integer directions with max-norm at most ``k``.

    Ordered by angle in ``[0, 2 pi)``, so ties broken by "lowest index" are
    deterministic. ``k = 2`` in 2D gives the 16-direction stencil.
    """
    if k < 1:
        raise ValueError("stencil radius must be >= 1")
    if dim == 1:
        return np.array([[1], [-1]], dtype=np.int64)
    dirs = [(i, j) for i in range(-k, k + 1) for j in range(-k, k + 1)
            if (i, j) != (0, 0) and math.gcd(abs(i), abs(j)) == 1]
    dirs.sort(key=lambda d: math.atan2(d[1], d[0]) % (2 * math.pi))
    return np.array(dirs, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform Cartesian grid over a :class:`Domain`.

    Nodes are stored flat in C order over ``shape``; ``points`` has shape
    ``(n, dim)`` and ``mask`` holds one of EXTERIOR, INTERIOR, BOUNDARY per
    node. Grids are immutable.
    """

    domain: Domain
    h: float
    k: int
    shape: tuple
    points: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("spacing must be positive")
        if self.k < 1:
            raise ValueError("stencil radius must be >= 1")
        self.points.setflags(write=False)
        self.mask.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def n_nodes(self) -> int:
        return self.mask.size

    @cached_property
    def interior(self) -> np.ndarray:
        """Indices of interior nodes."""
        idx = np.flatnonzero(self.mask == INTERIOR)
        idx.setflags(write=False)
        return idx

    @cached_property
    def boundary(self) -> np.ndarray:
        idx = np.flatnonzero(self.mask == BOUNDARY)
        idx.setflags(write=False)
        return idx

    @cached_property
    def directions(self) -> np.ndarray:
        return stencil_directions(self.dim, 1 if self.dim == 1 else self.k)

    @cached_property
    def neighbors(self) -> np.ndarray:
        """Neighbor table ``(n_interior, n_dirs)``; -1 where the direction
        leaves the computational nodes (interior or boundary)."""
        dirs = self.directions
        if self.dim == 1:
            i = self.interior
            nb = np.stack([i + 1, i - 1], axis=1)
        else:
            nx, ny = self.shape
            ii, jj = np.unravel_index(self.interior, self.shape)
            ti = ii[:, None] + dirs[None, :, 0]
            tj = jj[:, None] + dirs[None, :, 1]
            inside = (ti >= 0) & (ti < nx) & (tj >= 0) & (tj < ny)
            flat = np.where(inside, ti * ny + tj, 0)
            ok = inside & (self.mask[flat] != EXTERIOR)
            nb = np.where(ok, flat, -1)
        nb = np.ascontiguousarray(nb, dtype=np.int64)
        nb.setflags(write=False)
        return nb

    @cached_property
    def direction_lengths(self) -> np.ndarray:
        """Euclidean length of each stencil direction, in units of h."""
        return np.sqrt((self.directions.astype(float) ** 2).sum(axis=1))

    @cached_property
    def distances(self) -> np.ndarray:
        """Distance to the boundary per node (0 on boundary nodes, NaN on
        exterior nodes)."""
        d = self.domain.distance(self.points)
        d[self.mask == BOUNDARY] = 0.0
        d[self.mask == EXTERIOR] = np.nan
        d.setflags(write=False)
        return d

    def coordinates(self, axis: int = 0) -> np.ndarray:
        return self.points[:, axis]

    def radius(self, center=None) -> np.ndarray:
        """Euclidean norm of node coordinates relative to ``center``."""
        c = np.zeros(self.dim) if center is None else np.asarray(center, float)
        return np.sqrt(((self.points - c) ** 2).sum(axis=1))

    def to_dict(self) -> dict:
        return {
            "kind": self.domain.kind,
            "bounds": list(self.domain.bounds),
            "h": self.h,
            "k": self.k,
            "shape": list(self.shape),
            "node_count": int(self.n_nodes),
            "interior_count": int(self.interior.size),
            "boundary_count": int(self.boundary.size),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def same_as(self, other: "Grid") -> bool:
        """Structural equality (same geometry and node layout)."""
        return (self is other) or (
            self.domain == other.domain and self.h == other.h
            and self.k == other.k and self.shape == other.shape
            and np.array_equal(self.mask, other.mask))


@dataclass(frozen=True, eq=False)
class Field:
    """Grid function. Values on exterior nodes are stored as 0 and ignored."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != self.grid.n_nodes:
            raise ValueError(
                f"field has {v.size} values for {self.grid.n_nodes} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func, homogeneous: bool = True):
        """Sample ``func(points)`` on interior and boundary nodes.

        ``func`` receives an ``(n, dim)`` array. With ``homogeneous`` the
        boundary nodes are set to zero afterwards.
        """
        vals = np.zeros(grid.n_nodes)
        live = grid.mask != EXTERIOR
        vals[live] = np.asarray(func(grid.points[live]), dtype=float)
        if homogeneous:
            vals[grid.boundary] = 0.0
        return cls(grid, vals)

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros(grid.n_nodes))

    def sup(self) -> float:
        """Max-norm over interior and boundary nodes."""
        live = self.grid.mask != EXTERIOR
        return float(np.max(np.abs(self.values[live]), initial=0.0))

    def scaled(self, factor: float) -> "Field":
        return Field(self.grid, factor * self.values)

    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    def validate(self, nonnegative: bool = False, homogeneous: bool = False):
        """Raise ValueError if a Field invariant fails."""
        if homogeneous and np.any(self.values[self.grid.boundary] != 0.0):
            raise ValueError("nonzero value on a homogeneous Dirichlet node")
        if nonnegative:
            live = self.grid.mask != EXTERIOR
            bad = np.flatnonzero(live & (self.values < 0.0))
            if bad.size:
                raise ValueError(
                    f"negative value {self.values[bad[0]]!r} at node {bad[0]}")
        return self


def build_interval_grid(a: float, b: float, n: int) -> Grid:
    """Uniform grid on ``[a, b]`` with ``n`` nodes; endpoints are boundary."""
    if n < 3:
        raise ValueError(f"need at least 3 nodes, got {n}")
    if not a < b:
        raise ValueError(f"empty interval ({a}, {b})")
    length = b - a
    dom = Domain("interval", (a, b), exterior_sphere_radius=length,
                 interior_sphere_radius=length / 2)
    x = np.linspace(a, b, n)
    mask = np.full(n, INTERIOR, dtype=np.int8)
    mask[[0, -1]] = BOUNDARY
    return Grid(dom, length / (n - 1), 1, (n,), x[:, None].copy(), mask)


def _node_count(length: float, h: float) -> int:
    m = length / h
    n = int(round(m))
    if n < 2 or abs(m - n) > 1e-9 * max(1.0, m):
        raise ValueError(f"side length {length} is not a multiple of h={h}")
    return n + 1


def build_rectangle_grid(x0: float, x1: float, y0: float, y1: float,
                         h: float, k: int = 2) -> Grid:
    """Grid on a rectangle whose sides are integer multiples of ``h``.

    Rectangles satisfy the exterior sphere condition (convex) but not the
    interior one (corners), so only the exterior radius is set.
    """
    dom = Domain("rectangle", (x0, x1, y0, y1),
                 exterior_sphere_radius=max(x1 - x0, y1 - y0))
    nx = _node_count(x1 - x0, h)
    ny = _node_count(y1 - y0, h)
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    mask = np.full((nx, ny), BOUNDARY, dtype=np.int8)
    mask[1:-1, 1:-1] = INTERIOR
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return Grid(dom, float(h), int(k), (nx, ny), pts, mask.ravel())


def build_disk_grid(radius: float, h: float, k: int = 2,
                    center=(0.0, 0.0)) -> Grid:
    """Cartesian grid masked to the disk ``|x - center| < radius``.

    Nodes outside the open disk that are axis-adjacent to an interior node
    form the boundary layer, so boundary nodes lie within ``h`` of the
    circle. Stencil directions reaching beyond that layer are dropped per
    node (see :attr:`Grid.neighbors`).
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if not 0 < h < radius / 4:
        raise ValueError(
            f"h={h} too coarse for radius {radius}: need 0 < h < radius/4")
    cx, cy = (float(c) for c in center)
    m = int(math.ceil(radius / h)) + 1
    offs = np.arange(-m, m + 1) * h
    X, Y = np.meshgrid(cx + offs, cy + offs, indexing="ij")
    r = np.hypot(X - cx, Y - cy)
    inside = r < radius
    near = np.zeros_like(inside)
    near[1:, :] |= inside[:-1, :]
    near[:-1, :] |= inside[1:, :]
    near[:, 1:] |= inside[:, :-1]
    near[:, :-1] |= inside[:, 1:]
    mask = np.full(inside.shape, EXTERIOR, dtype=np.int8)
    mask[near & ~inside] = BOUNDARY
    mask[inside] = INTERIOR
    if not inside.any():
        raise ValueError("no interior nodes")
    dom = Domain("disk", (cx, cy, radius), exterior_sphere_radius=radius,
                 interior_sphere_radius=radius)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return Grid(dom, float(h), int(k), inside.shape, pts, mask.ravel())


def distance_to_boundary(grid: Grid, node: int) -> float:
    """Distance from ``node`` to the boundary of the domain.

    Exact for intervals, rectangles and disks at interior nodes; boundary
    nodes carry the Dirichlet data and count as lying on the boundary.
    """
    m = grid.mask[node]
    if m == EXTERIOR:
        raise ValueError(f"node {node} is exterior")
    return float(grid.distances[node])
