"""Discrete infinity-Laplacian ``<D^2 u grad u, grad u>``.

Two schemes are provided:

``direct-1d``
    ``(slope)^2 * (u[i+1] - 2 u[i] + u[i-1]) / h^2`` where the slope is the
    larger one-sided difference quotient (``max-slope``) or the centered one.

``directional-2d``
    Over the stencil directions pick the steepest ascent quotient ``a+``
    (direction length ``d+``) and steepest descent quotient ``a-`` (``d-``).
    The second derivative along the gradient is the midrange rule
    ``(a+ + a-) * 2 / (d+ + d-)`` and the squared gradient is
    ``max(a+, -a-, 0)^2``.

Both return zero on boundary nodes and wherever all quotients vanish.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .domain import Field, Grid

VARIANTS = ("direct-1d", "directional-2d")
GRADIENT_RULES = ("max-slope", "centered")


@dataclass(frozen=True)
class SchemeSpec:
    variant: str = "direct-1d"
    stencil_radius: int = 1
    gradient_rule: str = "max-slope"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown scheme variant {self.variant!r}")
        if self.gradient_rule not in GRADIENT_RULES:
            raise ValueError(f"unknown gradient rule {self.gradient_rule!r}")
        if self.stencil_radius < 1:
            raise ValueError("stencil radius must be >= 1")
        if self.variant == "direct-1d" and self.stencil_radius != 1:
            raise ValueError("direct-1d uses nearest neighbours only (k = 1)")

    @property
    def dim(self) -> int:
        return 1 if self.variant == "direct-1d" else 2

    @property
    def centered(self) -> bool:
        return self.gradient_rule == "centered"

    @classmethod
    def for_grid(cls, grid: Grid, gradient_rule: str = "max-slope"):
        if grid.dim == 1:
            return cls("direct-1d", 1, gradient_rule)
        return cls("directional-2d", grid.k, gradient_rule)

    def check(self, grid: Grid):
        if self.dim != grid.dim:
            raise ValueError(
                f"scheme {self.variant} does not match a {grid.dim}D grid")
        if self.dim == 2 and self.stencil_radius != grid.k:
            raise ValueError(
                f"scheme stencil radius {self.stencil_radius} != grid k={grid.k}")


# --- kernels ---------------------------------------------------------------
# 1D kernels work on the full node array; nodes 0 and n-1 are the boundary.
# 2D kernels take the interior index list, the neighbour table (-1 = absent)
# and direction lengths in units of h.

@numba.njit(cache=True)
def lap_1d(u, h, centered, out):
    n = u.shape[0]
    inv_h2 = 1.0 / (h * h)
    out[0] = 0.0
    out[n - 1] = 0.0
    for i in range(1, n - 1):
        fwd = u[i + 1] - u[i]
        bwd = u[i] - u[i - 1]
        if centered:
            s = 0.5 * (fwd + bwd)
        else:
            s = max(abs(fwd), abs(bwd))
        out[i] = s * s * (fwd - bwd) * inv_h2 * inv_h2
    return out


@numba.njit(cache=True)
def max_slope_1d(u, h):
    n = u.shape[0]
    m = 0.0
    for i in range(1, n - 1):
        m = max(m, abs(u[i + 1] - u[i]), abs(u[i] - u[i - 1]))
    return m / h


@numba.njit(cache=True)
def lap_2d_node(u, i, nb, dlen, h, centered, axes):
    ui = u[i]
    amax = 0.0
    amin = 0.0
    jmax = -1
    jmin = -1
    for j in range(nb.shape[0]):
        t = nb[j]
        if t < 0:
            continue
        q = (u[t] - ui) / (dlen[j] * h)
        if jmax < 0 or q > amax:
            amax = q
            jmax = j
        if jmin < 0 or q < amin:
            amin = q
            jmin = j
    if jmax < 0 or (amax == 0.0 and amin == 0.0):
        return 0.0
    norm = (amax + amin) * 2.0 / ((dlen[jmax] + dlen[jmin]) * h)
    if centered:
        gx = (u[nb[axes[0]]] - u[nb[axes[1]]]) / (2.0 * h)
        gy = (u[nb[axes[2]]] - u[nb[axes[3]]]) / (2.0 * h)
        g2 = gx * gx + gy * gy
    else:
        g = max(amax, -amin, 0.0)
        g2 = g * g
    return g2 * norm


@numba.njit(cache=True)
def lap_2d(u, idx, nbr, dlen, h, centered, axes, out):
    out[:] = 0.0
    for r in range(idx.shape[0]):
        out[idx[r]] = lap_2d_node(u, idx[r], nbr[r], dlen, h, centered, axes)
    return out


@numba.njit(cache=True)
def max_slope_2d(u, idx, nbr, dlen, h):
    m = 0.0
    for r in range(idx.shape[0]):
        i = idx[r]
        for j in range(nbr.shape[1]):
            t = nbr[r, j]
            if t >= 0:
                q = abs(u[t] - u[i]) / dlen[j]
                if q > m:
                    m = q
    return m / h


def axis_slots(grid: Grid) -> np.ndarray:
    """Positions of +x, -x, +y, -y in the grid's direction table."""
    dirs = [tuple(d) for d in grid.directions.tolist()]
    return np.array([dirs.index(d) for d in ((1, 0), (-1, 0), (0, 1), (0, -1))],
                    dtype=np.int64)


def kernel_args(grid: Grid):
    """Arguments shared by the 2D kernels, in call order after ``u``."""
    return (np.asarray(grid.interior, dtype=np.int64), grid.neighbors,
            grid.direction_lengths, grid.h)


# --- public API ------------------------------------------------------------

def _values(field: Field, scheme: SchemeSpec) -> np.ndarray:
    scheme.check(field.grid)
    return np.ascontiguousarray(field.values)


def inf_laplacian(field: Field, scheme: SchemeSpec | None = None) -> Field:
    """Discrete infinity-Laplacian of ``field``; zero on boundary nodes."""
    grid = field.grid
    scheme = scheme or SchemeSpec.for_grid(grid)
    u = _values(field, scheme)
    out = np.zeros(grid.n_nodes)
    if grid.dim == 1:
        lap_1d(u, grid.h, scheme.centered, out)
    else:
        idx, nbr, dlen, h = kernel_args(grid)
        lap_2d(u, idx, nbr, dlen, h, scheme.centered, axis_slots(grid), out)
    return Field(grid, out)


def max_slope(field: Field, scheme: SchemeSpec | None = None) -> float:
    """Largest absolute difference quotient over interior nodes and
    stencil directions."""
    grid = field.grid
    scheme = scheme or SchemeSpec.for_grid(grid)
    u = _values(field, scheme)
    if grid.dim == 1:
        return float(max_slope_1d(u, grid.h))
    return float(max_slope_2d(u, *kernel_args(grid)))


def residual_table(closed_form, exact_laplacian, grids, scheme=None,
                   region=None):
    """Max interior residual of the discrete operator per grid.

    ``closed_form`` and ``exact_laplacian`` map an ``(n, dim)`` point array to
    values. ``region`` optionally restricts the nodes compared (callable on
    points returning a boolean mask). Returns rows ``(h, max_residual,
    order_estimate)``; the order column compares consecutive rows and is NaN
    on the first one.
    """
    rows = []
    for grid in grids:
        sch = scheme or SchemeSpec.for_grid(grid)
        f = Field.from_function(grid, closed_form, homogeneous=False)
        lap = inf_laplacian(f, sch).values
        pts = grid.points[grid.interior]
        sel = np.ones(len(pts), bool) if region is None else region(pts)
        exact = np.asarray(exact_laplacian(pts[sel]), dtype=float)
        res = float(np.max(np.abs(lap[grid.interior][sel] - exact),
                           initial=0.0))
        rows.append([grid.h, res, math.nan])
    for a, b in zip(rows, rows[1:]):
        if a[1] > 0 and b[1] > 0:
            b[2] = math.log(a[1] / b[1]) / math.log(a[0] / b[0])
    return [tuple(r) for r in rows]


def consistency_order(closed_form, exact_laplacian, grids, scheme=None,
                      region=None, exact_tol: float = 1e-9) -> float:
    """Least-squares slope of log(max residual) against log(h).

    Returns ``math.inf`` when every residual is below ``exact_tol`` (the
    scheme is exact on this data, e.g. affine functions).
    """
    if len(grids) < 3:
        raise ValueError("need at least 3 resolutions")
    rows = residual_table(closed_form, exact_laplacian, grids, scheme, region)
    hs = np.array([r[0] for r in rows])
    res = np.array([r[1] for r in rows])
    if np.all(res <= exact_tol):
        return math.inf
    res = np.maximum(res, np.finfo(float).tiny)
    slope, _ = np.polyfit(np.log(hs), np.log(res), 1)
    return float(slope)
