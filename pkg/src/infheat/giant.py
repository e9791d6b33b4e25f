"""The friendly giant: positive solution of ``-Lap_inf f - f/2 = 0`` with
zero boundary values.

Two independent routes are provided. :func:`compute_giant_flow` runs the
rescaled flow ``v_s = Lap_inf v + v/2`` to steady state on a grid, and
:func:`giant_ode_oracle` solves the 1D/radial ODE ``-(f')^2 f'' = f/2`` by
shooting on the peak height.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import bisect

from .domain import EXTERIOR, INTERIOR, Field, Grid
from .evolution import SolverConfig, _Stepper
from .operators import SchemeSpec, inf_laplacian


@dataclass(frozen=True, eq=False)
class GiantProfile:
    grid: Grid
    values: np.ndarray = field(repr=False)
    residual_norm: float
    method: str
    s_elapsed: float = 0.0
    steps: int = 0

    @property
    def field(self) -> Field:
        return Field(self.grid, self.values)

    @property
    def peak_height(self) -> float:
        return float(np.max(self.values))

    @property
    def peak_location(self) -> list:
        return self.grid.points[int(np.argmax(self.values))].tolist()

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def metadata(self) -> dict:
        return {
            "method": self.method,
            "residual_norm": self.residual_norm,
            "peak_height": self.peak_height,
            "peak_location": self.peak_location,
            "s_elapsed": self.s_elapsed,
            "steps": self.steps,
            "grid": self.grid.to_dict(),
        }


class GiantFlowError(RuntimeError):
    """Rescaled flow did not reach steady state; ``last`` holds the final
    iterate."""

    def __init__(self, msg, last: Field):
        super().__init__(msg)
        self.last = last


# --- shooting oracle -------------------------------------------------------

def cusp_coefficient(m: float) -> float:
    """``c`` in ``f = m - c |x|^{4/3}`` near the peak: ``c^3 = 81 m / 128``."""
    return (81.0 * m / 128.0) ** (1.0 / 3.0)


@dataclass(frozen=True)
class ShootingState:
    m: float
    c: float
    step: float
    ell: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("peak height must be positive")


def _rhs(x, y):
    return [y[1], -y[0] / (2.0 * y[1] * y[1])]


def _hit_zero(x, y):
    return y[0]


_hit_zero.terminal = True
_hit_zero.direction = -1


def _shoot(m, x_cusp, x_max, rtol):
    c = cusp_coefficient(m)
    y0 = [m - c * x_cusp ** (4 / 3), -(4 * c / 3) * x_cusp ** (1 / 3)]
    sol = solve_ivp(_rhs, (x_cusp, x_max), y0, method="DOP853",
                    events=_hit_zero, rtol=rtol, atol=rtol * 1e-3 * m,
                    dense_output=True)
    if sol.status < 0:
        raise RuntimeError(f"shooting integration failed: {sol.message}")
    if np.any(sol.y[1] >= 0):
        raise RuntimeError("f' vanished away from the peak")
    zero = sol.t_events[0][0] if sol.t_events[0].size else math.inf
    return zero, sol


@dataclass(frozen=True, eq=False)
class OracleGiant:
    """Even profile on ``(-ell, ell)`` with peak ``m`` at the origin.

    Call it with coordinates (any shape) to evaluate ``f(|x|)``; radial
    profiles on a disk use the distance to the centre.
    """

    ell: float
    m: float
    x_cusp: float
    cusp_sensitivity: float
    _sol: object = field(repr=False)

    @property
    def state(self) -> ShootingState:
        return ShootingState(self.m, cusp_coefficient(self.m), self.x_cusp,
                             self.ell)

    def __call__(self, x):
        r = np.abs(np.asarray(x, dtype=float))
        out = np.zeros_like(r)
        c = cusp_coefficient(self.m)
        near = r < self.x_cusp
        out[near] = self.m - c * r[near] ** (4 / 3)
        mid = (~near) & (r < self.ell)
        if mid.any():
            out[mid] = self._sol.sol(r[mid])[0]
        return np.maximum(out, 0.0)

    def derivative(self, x):
        """``f'(x)`` for ``0 <= x <= ell`` (the profile is even)."""
        r = np.asarray(x, dtype=float)
        c = cusp_coefficient(self.m)
        far = np.clip(r, self.x_cusp, self.ell)
        return np.where(r < self.x_cusp, -(4 * c / 3) * np.cbrt(r),
                        self._sol.sol(far)[1])

    def profile_on(self, grid: Grid, center=None) -> GiantProfile:
        """Sample onto ``grid`` (radially about ``center`` in 2D)."""
        r = grid.radius(center)
        vals = np.where(grid.mask == EXTERIOR, 0.0, self(r))
        vals[grid.boundary] = 0.0
        f = Field(grid, vals)
        return GiantProfile(grid, f.values, steady_residual(f), "ode-oracle")


def giant_ode_oracle(ell: float, tol: float = 1e-12,
                     x_cusp: float | None = None) -> OracleGiant:
    """Shoot on the peak height ``m`` so that the profile vanishes at ``ell``.

    Integration starts at ``x_cusp`` (default ``1e-4 ell``) from the cusp
    expansion and runs ``f'' = -f / (2 f'^2)`` outward; ``m`` is bisected in
    ``[0.05 ell^2, 5 ell^2]``. The run is repeated with ``x_cusp / 2`` and
    the relative change of ``m`` is stored as ``cusp_sensitivity``.
    """
    if not ell > 0:
        raise ValueError("half-length must be positive")
    x_c = 1e-4 * ell if x_cusp is None else float(x_cusp)
    rtol = max(tol, 1e-13)
    lo, hi = 0.05 * ell ** 2, 5.0 * ell ** 2

    def solve(xc):
        def miss(m):
            return _shoot(m, xc, 4.0 * ell, rtol)[0] - ell

        if not miss(lo) < 0 < miss(hi):
            raise RuntimeError("peak-height bracket does not change sign")
        return bisect(miss, lo, hi, xtol=tol * ell ** 2, maxiter=400)

    for attempt in range(4):
        try:
            m1 = solve(x_c)
            m2 = solve(x_c / 2)
            break
        except RuntimeError:
            if attempt == 3:
                raise
            x_c /= 10
    _, sol = _shoot(m2, x_c / 2, 4.0 * ell, rtol)
    return OracleGiant(ell, m2, x_c / 2, abs(m1 - m2) / m2, sol)


# --- flow ------------------------------------------------------------------

def steady_residual(f: Field, scheme: SchemeSpec | None = None,
                    exclude: float | None = None) -> float:
    """``max |Lap_inf f + f/2|`` over interior nodes farther than
    ``exclude`` (default ``2h``) from the set where ``f`` is maximal."""
    grid = f.grid
    exclude = 2 * grid.h if exclude is None else exclude
    lap = inf_laplacian(f, scheme).values
    res = np.abs(lap + 0.5 * f.values)[grid.interior]
    vals = f.values[grid.interior]
    if vals.size == 0:
        return 0.0
    top = vals.max()
    peak_pts = grid.points[grid.interior][vals >= top - 1e-12 * abs(top)]
    pts = grid.points[grid.interior]
    dist = np.full(len(pts), np.inf)
    for p in peak_pts:
        dist = np.minimum(dist, np.sqrt(((pts - p) ** 2).sum(axis=1)))
    keep = dist > exclude * (1 + 1e-9)
    return float(np.max(res[keep], initial=0.0))


def compute_giant_flow(grid: Grid, v0: Field, steady_tol: float = 1e-6,
                       config: SolverConfig | None = None,
                       scheme: SchemeSpec | None = None,
                       max_s: float = 400.0, history: list | None = None
                       ) -> GiantProfile:
    """Run the rescaled flow from ``v0`` until
    ``||v(s+1) - v(s)|| < steady_tol ||v(s)||``.

    If ``history`` is a list, the iterate at every unit of ``s`` is appended
    to it (``(s, values)`` pairs).
    """
    if not v0.grid.same_as(grid):
        raise ValueError("seed lives on a different grid")
    live = grid.mask != EXTERIOR
    if np.any(v0.values[live] < 0) or not np.any(v0.values[grid.interior] > 0):
        raise ValueError("seed must be nonnegative and not identically zero")
    config = config or SolverConfig()
    scheme = scheme or SchemeSpec.for_grid(grid)
    stepper = _Stepper(grid, scheme, config, rescaled=True)
    v = v0.values.copy()
    v[grid.boundary] = 0.0
    s, steps = 0.0, 0
    if history is not None:
        history.append((s, v.copy()))
    while True:
        prev = v.copy()
        s_new, n = stepper.advance(v, s, s + 1.0, config.max_steps - steps)
        steps += n
        if s_new < s + 1.0:
            raise GiantFlowError("step budget exhausted", Field(grid, v))
        s = s_new
        if history is not None:
            history.append((s, v.copy()))
        sup = np.max(np.abs(v))
        if np.max(np.abs(v - prev)) < steady_tol * sup:
            break
        if s >= max_s:
            raise GiantFlowError(f"not steady by s={s}", Field(grid, v))
    f = Field(grid, v)
    return GiantProfile(grid, f.values, steady_residual(f, scheme), "flow",
                        s, steps)


def prolong(f: Field, grid: Grid) -> Field:
    """Interpolate ``f`` onto a finer ``grid`` (piecewise linear), with zero
    boundary values and negative parts removed."""
    src = f.grid
    if src.dim != grid.dim:
        raise ValueError("dimension mismatch")
    if src.dim == 1:
        vals = np.interp(grid.points[:, 0], src.points[:, 0], f.values)
    else:
        nx, ny = src.shape
        xs = src.points[:, 0].reshape(nx, ny)[:, 0]
        ys = src.points[:, 1].reshape(nx, ny)[0, :]
        interp = RegularGridInterpolator((xs, ys), f.values.reshape(nx, ny),
                                         bounds_error=False, fill_value=0.0)
        vals = interp(grid.points)
    vals = np.maximum(vals, 0.0)
    vals[grid.mask != INTERIOR] = 0.0
    return Field(grid, vals)


def compute_giant_multilevel(grids, v0: Field, steady_tol: float = 1e-6,
                             config: SolverConfig | None = None,
                             coarse_tol: float | None = None) -> GiantProfile:
    """Flow to steady state on ``grids`` from coarse to fine, seeding each
    level with the interpolated limit of the previous one. ``v0`` lives on
    ``grids[0]``."""
    coarse_tol = steady_tol if coarse_tol is None else coarse_tol
    seed = v0
    total_s, total_steps = 0.0, 0
    for level, g in enumerate(grids):
        if level:
            seed = prolong(prof.field, g)
        tol = steady_tol if level == len(grids) - 1 else coarse_tol
        prof = compute_giant_flow(g, seed, tol, config)
        total_s += prof.s_elapsed
        total_steps += prof.steps
    return GiantProfile(prof.grid, prof.values, prof.residual_norm, "flow",
                        total_s, total_steps)


@dataclass(frozen=True)
class UniquenessReport:
    passed: bool
    max_distance: float
    distances: dict
    degenerate: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_distance": self.max_distance,
            "distances": {f"{i}-{j}": d for (i, j), d in self.distances.items()},
            "degenerate": self.degenerate,
            "tol": self.tol,
        }


def check_uniqueness(grid: Grid, seeds, tol: float = 1e-3,
                     steady_tol: float = 1e-6,
                     config: SolverConfig | None = None,
                     coarse=(), coarse_tol: float | None = None):
    """Flow every seed to its limit and compare the limits pairwise in
    relative sup-norm.

    With ``coarse`` (grids coarser than ``grid``, coarsest first) the seeds
    live on ``coarse[0]`` and each limit is computed level by level with
    :func:`compute_giant_multilevel`.

    Returns ``(report, profiles)``. A single seed gives a degenerate pass.
    """
    seeds = list(seeds)
    levels = [*coarse, grid]
    if not seeds:
        raise ValueError("need at least one seed")
    for s in seeds:
        if not s.grid.same_as(levels[0]):
            raise ValueError("seeds must live on the coarsest grid")
    if coarse:
        profiles = [compute_giant_multilevel(levels, s, steady_tol, config,
                                             coarse_tol) for s in seeds]
    else:
        profiles = [compute_giant_flow(grid, s, steady_tol, config)
                    for s in seeds]
    dists = {}
    for i, j in itertools.combinations(range(len(profiles)), 2):
        a, b = profiles[i].values, profiles[j].values
        scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
        dists[(i, j)] = float(np.max(np.abs(a - b)) / scale)
    worst = max(dists.values(), default=0.0)
    report = UniquenessReport(worst < tol, worst, dists, len(seeds) < 2, tol)
    return report, profiles
