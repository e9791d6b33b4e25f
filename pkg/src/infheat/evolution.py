"""Explicit Euler time stepping for the infinite heat equation.

Two equations share one machinery:

* ``original``: ``u_t = Lap_inf u`` in time ``t``;
* ``rescaled``: ``v_s = Lap_inf v + v/2`` in ``s = ln t``, related to the
  original flow by ``u(t, x) = t^{-1/2} v(ln t, x)``.

The step size is re-evaluated every step from the CFL rule
``dt = safety * h^2 / max(slope^2, floor)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .domain import Field, Grid
from .operators import (SchemeSpec, axis_slots, inf_laplacian, kernel_args,
                        max_slope)

EQUATIONS = ("original", "rescaled")
TIME_TAGS = {"original": "original-t", "rescaled": "rescaled-s"}


@dataclass(frozen=True)
class SolverConfig:
    cfl_safety: float = 0.2
    slope_floor: float = 1e-12
    max_steps: int = 10**9
    record_times: tuple | None = None

    def __post_init__(self):
        if not 0 < self.cfl_safety < 0.5:
            raise ValueError("cfl_safety must lie in (0, 0.5)")
        if not self.slope_floor > 0:
            raise ValueError("slope_floor must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.record_times is not None:
            object.__setattr__(self, "record_times",
                               tuple(float(t) for t in self.record_times))

    def to_dict(self) -> dict:
        return {
            "cfl_safety": self.cfl_safety,
            "slope_floor": self.slope_floor,
            "max_steps": self.max_steps,
            "record_times": (None if self.record_times is None
                             else list(self.record_times)),
        }


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded time slices of one run.

    ``values[i]`` is the field at ``times[i]``. ``truncated`` is set when the
    step budget ran out before ``t_end``.
    """

    grid: Grid
    variable: str
    times: np.ndarray
    values: np.ndarray = field(repr=False)
    truncated: bool = False
    steps: int = 0

    def __post_init__(self):
        if self.variable not in TIME_TAGS.values():
            raise ValueError(f"unknown time variable {self.variable!r}")
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (t.size, self.grid.n_nodes):
            raise ValueError("values must have shape (n_times, n_nodes)")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("record times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite values in trajectory")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    def __iter__(self):
        for i in range(len(self)):
            yield float(self.times[i]), self.field(i)

    def field(self, i: int) -> Field:
        return Field(self.grid, self.values[i])

    @property
    def final(self) -> Field:
        return self.field(len(self) - 1)

    def sup_norms(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)

    def select(self, t_min=-math.inf, t_max=math.inf) -> "Trajectory":
        keep = (self.times >= t_min) & (self.times <= t_max)
        return Trajectory(self.grid, self.variable, self.times[keep],
                          self.values[keep], self.truncated, self.steps)


# --- kernels ---------------------------------------------------------------

@numba.njit(cache=True)
def _advance_1d(u, t, t_stop, h, sigma, floor, rescaled, centered,
                max_steps, work):
    n = u.shape[0]
    inv_h2 = 1.0 / (h * h)
    steps = 0
    while t < t_stop and steps < max_steps:
        smax = 0.0
        for i in range(1, n - 1):
            fwd = u[i + 1] - u[i]
            bwd = u[i] - u[i - 1]
            a = max(abs(fwd), abs(bwd))
            if a > smax:
                smax = a
            s = 0.5 * (fwd + bwd) if centered else a
            work[i] = s * s * (fwd - bwd) * inv_h2 * inv_h2
        smax *= 1.0 / h
        dt = sigma * h * h / max(smax * smax, floor)
        if rescaled:
            dt = min(dt, sigma)
        if t + dt >= t_stop:
            dt = t_stop - t
            t = t_stop
        else:
            t += dt
        if rescaled:
            for i in range(1, n - 1):
                u[i] += dt * (work[i] + 0.5 * u[i])
        else:
            for i in range(1, n - 1):
                u[i] += dt * work[i]
        steps += 1
    return t, steps


@numba.njit(cache=True)
def _advance_2d(u, t, t_stop, idx, nbr, dlen, h, sigma, floor, rescaled,
                centered, axes, max_steps, work):
    m = idx.shape[0]
    nd = nbr.shape[1]
    inv = np.empty(nd)
    for j in range(nd):
        inv[j] = 1.0 / (dlen[j] * h)
    steps = 0
    while t < t_stop and steps < max_steps:
        smax = 0.0
        for r in range(m):
            i = idx[r]
            ui = u[i]
            amax = 0.0
            amin = 0.0
            jmax = -1
            jmin = -1
            for j in range(nd):
                k = nbr[r, j]
                if k < 0:
                    continue
                q = (u[k] - ui) * inv[j]
                if jmax < 0 or q > amax:
                    amax = q
                    jmax = j
                if jmin < 0 or q < amin:
                    amin = q
                    jmin = j
            g = max(amax, -amin, 0.0)
            if g > smax:
                smax = g
            if g == 0.0:
                work[r] = 0.0
                continue
            norm = (amax + amin) * 2.0 / ((dlen[jmax] + dlen[jmin]) * h)
            if centered:
                gx = (u[nbr[r, axes[0]]] - u[nbr[r, axes[1]]]) / (2.0 * h)
                gy = (u[nbr[r, axes[2]]] - u[nbr[r, axes[3]]]) / (2.0 * h)
                work[r] = (gx * gx + gy * gy) * norm
            else:
                work[r] = g * g * norm
        dt = sigma * h * h / max(smax * smax, floor)
        if rescaled:
            dt = min(dt, sigma)
        if t + dt >= t_stop:
            dt = t_stop - t
            t = t_stop
        else:
            t += dt
        for r in range(m):
            i = idx[r]
            if rescaled:
                u[i] += dt * (work[r] + 0.5 * u[i])
            else:
                u[i] += dt * work[r]
        steps += 1
    return t, steps


class _Stepper:
    """Advances a private copy of the node values with fixed boundary
    values."""

    def __init__(self, grid: Grid, scheme: SchemeSpec, config: SolverConfig,
                 rescaled: bool):
        scheme.check(grid)
        self.grid = grid
        self.scheme = scheme
        self.config = config
        self.rescaled = rescaled
        if grid.dim == 1:
            self.work = np.zeros(grid.n_nodes)
        else:
            self.args = kernel_args(grid)
            self.axes = axis_slots(grid)
            self.work = np.zeros(grid.interior.size)

    def advance(self, u: np.ndarray, t: float, t_stop: float, budget: int):
        c = self.config
        if self.grid.dim == 1:
            return _advance_1d(u, t, t_stop, self.grid.h, c.cfl_safety,
                               c.slope_floor, self.rescaled,
                               self.scheme.centered, budget, self.work)
        idx, nbr, dlen, h = self.args
        return _advance_2d(u, t, t_stop, idx, nbr, dlen, h, c.cfl_safety,
                           c.slope_floor, self.rescaled, self.scheme.centered,
                           self.axes, budget, self.work)


# --- public API ------------------------------------------------------------

def cfl_dt(field: Field, scheme: SchemeSpec | None = None,
           config: SolverConfig | None = None) -> float:
    """Largest admissible explicit step for ``field``."""
    config = config or SolverConfig()
    slope = max_slope(field, scheme)
    h = field.grid.h
    return config.cfl_safety * h * h / max(slope * slope, config.slope_floor)


def _check_dt(field, dt, scheme, config, cap=math.inf):
    limit = min(cfl_dt(field, scheme, config), cap)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise ValueError(f"time step {dt!r} outside (0, {limit!r}] (CFL)")


def _apply_boundary(grid, vals, boundary_data, t):
    if boundary_data is None:
        vals[grid.boundary] = 0.0
    else:
        pts = grid.points[grid.boundary]
        vals[grid.boundary] = np.asarray(boundary_data(t, pts), dtype=float)


def step_heat(field: Field, dt: float, boundary_data=None, t: float = 0.0,
              scheme: SchemeSpec | None = None,
              config: SolverConfig | None = None) -> Field:
    """One forward Euler step of ``u_t = Lap_inf u``.

    ``boundary_data(t, points)`` gives Dirichlet values at time ``t + dt``;
    ``None`` means homogeneous data.
    """
    scheme = scheme or SchemeSpec.for_grid(field.grid)
    _check_dt(field, dt, scheme, config)
    grid = field.grid
    vals = field.values.copy()
    lap = inf_laplacian(field, scheme).values
    vals[grid.interior] += dt * lap[grid.interior]
    _apply_boundary(grid, vals, boundary_data, t + dt)
    return Field(grid, vals)


def step_rescaled(field: Field, ds: float, scheme: SchemeSpec | None = None,
                  config: SolverConfig | None = None) -> Field:
    """One forward Euler step of ``v_s = Lap_inf v + v/2`` with zero
    boundary values."""
    config = config or SolverConfig()
    scheme = scheme or SchemeSpec.for_grid(field.grid)
    _check_dt(field, ds, scheme, config, cap=config.cfl_safety)
    grid = field.grid
    vals = field.values.copy()
    lap = inf_laplacian(field, scheme).values
    i = grid.interior
    vals[i] += ds * (lap[i] + 0.5 * vals[i])
    vals[grid.boundary] = 0.0
    return Field(grid, vals)


def default_record_times(t_start: float, t_end: float, equation: str):
    """Geometric in ``t`` for the original flow (powers of two), unit
    spacing in ``s`` for the rescaled one."""
    if equation == "rescaled":
        first = math.floor(t_start) + 1
        return [float(s) for s in range(first, math.ceil(t_end))]
    out = []
    j = -20
    while 2.0 ** j < t_end:
        if 2.0 ** j > t_start:
            out.append(2.0 ** j)
        j += 1
    return out


def evolve(u0: Field, t_start: float, t_end: float,
           config: SolverConfig | None = None, equation: str = "original",
           scheme: SchemeSpec | None = None, boundary_data=None) -> Trajectory:
    """Evolve ``u0`` from ``t_start`` to ``t_end`` and record snapshots.

    Snapshots are taken at ``t_start``, at every configured record time
    inside ``(t_start, t_end)`` and at ``t_end``. If ``config.max_steps`` is
    exhausted the trajectory ends at the last time reached and is flagged
    ``truncated``.

    ``boundary_data(t, points)`` switches on time-dependent Dirichlet values
    (original equation only); it is meant for exact-solution validation.
    """
    if equation not in EQUATIONS:
        raise ValueError(f"unknown equation {equation!r}")
    if not t_start < t_end:
        raise ValueError("need t_start < t_end")
    if boundary_data is not None and equation != "original":
        raise ValueError("time-dependent boundary data needs the original flow")
    config = config or SolverConfig()
    grid = u0.grid
    scheme = scheme or SchemeSpec.for_grid(grid)
    scheme.check(grid)

    rec = config.record_times
    if rec is None:
        rec = default_record_times(t_start, t_end, equation)
    stops = sorted({t for t in rec if t_start < t < t_end} | {t_end})

    u = u0.values.copy()
    if boundary_data is None:
        u[grid.boundary] = 0.0
    else:
        _apply_boundary(grid, u, boundary_data, t_start)
    times, snaps = [t_start], [u.copy()]
    budget = config.max_steps
    t = t_start
    truncated = False
    stepper = _Stepper(grid, scheme, config, equation == "rescaled")
    for stop in stops:
        if boundary_data is None:
            t, n = stepper.advance(u, t, stop, budget)
        else:
            t, n = _advance_with_data(u, t, stop, budget, grid, scheme,
                                      config, boundary_data)
        budget -= n
        if t < stop:
            truncated = True
            if t > times[-1]:
                times.append(t)
                snaps.append(u.copy())
            break
        times.append(stop)
        snaps.append(u.copy())
    return Trajectory(grid, TIME_TAGS[equation], np.array(times),
                      np.array(snaps), truncated, config.max_steps - budget)


def _advance_with_data(u, t, t_stop, budget, grid, scheme, config, data):
    steps = 0
    i = grid.interior
    while t < t_stop and steps < budget:
        f = Field(grid, u)
        dt = min(cfl_dt(f, scheme, config), t_stop - t)
        lap = inf_laplacian(f, scheme).values
        u[i] += dt * lap[i]
        t = t_stop if t + dt >= t_stop else t + dt
        _apply_boundary(grid, u, data, t)
        steps += 1
    return t, steps


def to_rescaled(traj: Trajectory) -> Trajectory:
    """``v(s, x) = e^{s/2} u(e^s, x)`` with ``s = ln t``."""
    if traj.variable != "original-t":
        raise ValueError("expected an original-time trajectory")
    if np.any(traj.times <= 0):
        raise ValueError("rescaling needs strictly positive times")
    s = np.log(traj.times)
    v = traj.values * np.sqrt(traj.times)[:, None]
    return Trajectory(traj.grid, "rescaled-s", s, v, traj.truncated,
                      traj.steps)


def to_original(traj: Trajectory) -> Trajectory:
    """Inverse of :func:`to_rescaled`."""
    if traj.variable != "rescaled-s":
        raise ValueError("expected a rescaled trajectory")
    t = np.exp(traj.times)
    u = traj.values * np.exp(-0.5 * traj.times)[:, None]
    return Trajectory(traj.grid, "original-t", t, u, traj.truncated,
                      traj.steps)
