"""Diagnostics on computed trajectories: decay rate, universal bound,
positivity sets, waiting times, boundary growth, monotonicity and
convergence to the friendly giant."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .barriers import separable_scale
from .domain import EXTERIOR, INTERIOR, Field
from .evolution import Trajectory
from .giant import GiantProfile
from .io import jsonable


class _Report:
    def to_dict(self) -> dict:
        return jsonable(asdict(self))


def _require(traj: Trajectory, variable: str):
    if traj.variable != variable:
        raise ValueError(f"expected a {variable} trajectory, got {traj.variable}")


def _same_grid(traj: Trajectory, giant: GiantProfile):
    if not traj.grid.same_as(giant.grid):
        raise ValueError("trajectory and giant live on different grids")


# --- decay -----------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit(_Report):
    exponent: float
    C1: float
    t_min: float
    t_max: float
    residual: float
    n_points: int
    certified: bool


def decay_fit(traj: Trajectory, window=(0.0, math.inf),
              exponent_tol: float = 0.05) -> DecayFit:
    """Fit ``log ||u(t)|| = p log(t + 1) + b`` over recorded times in
    ``window``.

    ``C1`` is the smallest constant for which the two-sided bound
    ``C1^{-1} (t+1)^{-1/2} <= ||u(t)|| <= C1 (t+1)^{-1/2}`` holds at every
    fitted time. The fit certifies the bound when ``|p + 1/2| <=
    exponent_tol``.
    """
    _require(traj, "original-t")
    t_lo, t_hi = window
    keep = (traj.times >= t_lo) & (traj.times <= t_hi) & (traj.times > 0)
    t = traj.times[keep]
    if t.size < 5:
        raise ValueError(f"need >= 5 recorded times in window, got {t.size}")
    sup = traj.sup_norms()[keep]
    if np.any(sup <= 0):
        raise ValueError("sup-norm vanishes inside the fit window")
    x, y = np.log(t + 1), np.log(sup)
    (p, b), res, *_ = np.polyfit(x, y, 1, full=True)
    rms = math.sqrt(float(res[0]) / t.size) if res.size else 0.0
    scaled = sup * np.sqrt(t + 1)
    c1 = float(np.max(np.maximum(scaled, 1.0 / scaled)))
    ok = bool(abs(p + 0.5) <= exponent_tol and math.isfinite(c1))
    return DecayFit(float(p), c1, float(t[0]), float(t[-1]), rms,
                    int(t.size), ok)


def rescaled_bound(traj_v: Trajectory) -> float:
    """``max_s ||v(s)||``, the constant bounding the rescaled run."""
    _require(traj_v, "rescaled-s")
    return float(np.max(traj_v.sup_norms()))


# --- universal bound and convergence ----------------------------------------

def universal_bound_check(traj: Trajectory, giant: GiantProfile,
                          t_min: float = 1.0) -> float:
    """``max (u(t,x) - t^{-1/2} f(x))`` over recorded ``t >= t_min`` and
    interior nodes (both sides vanish on the boundary)."""
    _require(traj, "original-t")
    _same_grid(traj, giant)
    if not t_min > 0:
        raise ValueError("t_min must be positive")
    live = traj.grid.interior
    worst = -math.inf
    for t, u in zip(traj.times, traj.values):
        if t >= t_min:
            gap = u[live] - separable_scale(t) * giant.values[live]
            worst = max(worst, float(gap.max()))
    if worst == -math.inf:
        raise ValueError("no recorded time at or after t_min")
    return worst


@dataclass(frozen=True)
class ConvergenceReport(_Report):
    times: list
    errors: list
    giant_sup: float
    final_relative: float
    nonincreasing: bool
    window: tuple


def convergence_report(traj: Trajectory, giant: GiantProfile,
                       window: tuple | None = None,
                       slack: float = 0.10) -> ConvergenceReport:
    """Sup-norm distance ``e(t) = ||t^{1/2} u(t) - f||`` per recorded
    ``t > 0``.

    ``nonincreasing`` checks ``e(t_{i+1}) <= (1 + slack) e(t_i)`` over
    ``window`` (default: the last decade of recorded times), up to a
    rounding floor of ``1e-12 ||f||``.
    """
    _require(traj, "original-t")
    _same_grid(traj, giant)
    t = traj.times[traj.times > 0]
    vals = traj.values[traj.times > 0]
    if t.size == 0:
        raise ValueError("no positive recorded times")
    err = np.max(np.abs(np.sqrt(t)[:, None] * vals - giant.values), axis=1)
    window = window or (t[-1] / 10, t[-1])
    sel = (t >= window[0]) & (t <= window[1])
    e = err[sel]
    gsup = giant.sup()
    mono = bool(np.all(e[1:] <= (1 + slack) * e[:-1] + 1e-12 * gsup))
    return ConvergenceReport(t.tolist(), err.tolist(), gsup,
                             float(err[-1] / gsup), mono,
                             (float(window[0]), float(window[1])))


# --- monotonicity ------------------------------------------------------------

def rescaled_monotonicity(traj_v: Trajectory) -> float:
    """Largest relative drop ``max (v(s1) - v(s2)) / ||v||`` over consecutive
    recorded ``s1 < s2``; at most 0 when ``v`` is nondecreasing."""
    _require(traj_v, "rescaled-s")
    v = traj_v.values
    if len(v) < 2:
        return -math.inf
    scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    return float(np.max(v[:-1] - v[1:]) / scale)


def benilan_crandall(traj: Trajectory) -> float:
    """Largest relative violation of
    ``u(t+h) - u(t) >= (((t+h)/t)^{-1/2} - 1) u(t)`` over consecutive recorded
    pairs with ``t > 0``, normalised by ``||u(t)||``."""
    _require(traj, "original-t")
    worst = -math.inf
    for i in range(len(traj) - 1):
        t, t2 = traj.times[i], traj.times[i + 1]
        if t <= 0:
            continue
        u, w = traj.values[i], traj.values[i + 1]
        scale = max(float(np.max(np.abs(u))), np.finfo(float).tiny)
        lower = ((t2 / t) ** -0.5 - 1.0) * u
        worst = max(worst, float(np.max(lower - (w - u)) / scale))
    return worst


# --- positivity --------------------------------------------------------------

def positivity_set(field: Field, threshold: float | None = None) -> np.ndarray:
    """Boolean node mask of interior nodes with value above ``threshold``
    (default ``1e-12 ||field||``)."""
    if threshold is None:
        threshold = 1e-12 * field.sup()
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    mask = np.zeros(field.grid.n_nodes, dtype=bool)
    i = field.grid.interior
    mask[i] = field.values[i] > threshold
    return mask


def mask_inclusion_violations(traj: Trajectory,
                              rel_threshold: float = 1e-12) -> int:
    """Number of nodes leaving the positivity set between consecutive
    records (0 when the sets are nested)."""
    count = 0
    prev = None
    for _, f in traj:
        m = positivity_set(f, rel_threshold * f.sup())
        if prev is not None:
            count += int(np.sum(prev & ~m))
        prev = m
    return count


def eventual_positivity_time(traj: Trajectory,
                             threshold: float | None = None):
    """First recorded time from which every interior node stays above
    ``threshold`` at all later records; ``None`` when not reached.

    ``threshold`` defaults to ``1e-12 ||u(t)||`` per record.
    """
    if traj.grid.domain.interior_sphere_radius is None:
        raise ValueError("domain has no interior sphere radius")
    inner = traj.grid.interior
    ok = []
    for _, f in traj:
        thr = 1e-12 * f.sup() if threshold is None else threshold
        ok.append(bool(np.all(f.values[inner] > thr)))
    t1 = None
    for i in range(len(ok) - 1, -1, -1):
        if not ok[i]:
            break
        t1 = float(traj.times[i])
    return t1


@dataclass(frozen=True)
class PositivityCertificate(_Report):
    nodes: list
    s_K: float
    mu_K: float
    holds: bool


def positivity_certificate(traj_v: Trajectory, K: np.ndarray):
    """Certificate ``v >= mu_K > 0`` on the node set ``K`` from the first
    recorded ``s_K`` at which ``v`` is positive on all of ``K``; ``None`` if
    that never happens. ``holds`` reports whether every later record keeps
    ``v >= mu_K`` on ``K``."""
    _require(traj_v, "rescaled-s")
    K = np.asarray(K)
    idx = np.flatnonzero(K) if K.dtype == bool else K.astype(int)
    if idx.size == 0 or np.any(traj_v.grid.mask[idx] != INTERIOR):
        raise ValueError("K must be a nonempty set of interior nodes")
    mins = traj_v.values[:, idx].min(axis=1)
    first = np.flatnonzero(mins > 0)
    if first.size == 0:
        return None
    i = int(first[0])
    mu = float(mins[i])
    holds = bool(np.all(mins[i:] >= mu))
    return PositivityCertificate(idx.tolist(), float(traj_v.times[i]), mu,
                                 holds)


# --- waiting time ------------------------------------------------------------

@dataclass(frozen=True)
class WaitingTimeReport(_Report):
    x0: list
    a: float
    delta: float
    C1: float
    T_pred: float
    tau_measured: float
    threshold: float
    passed: bool
    censored: bool


def waiting_time_bound(a: float, delta: float, C1: float) -> float:
    """``min{1/(16 a^2), delta^4/(16 C1^2)}`` (``a = 0`` drops the first
    term)."""
    first = math.inf if a == 0 else 1.0 / (16 * a * a)
    return min(first, delta ** 4 / (16 * C1 * C1))


def waiting_time(traj: Trajectory, x0, a: float, delta: float, C1: float,
                 threshold: float, factor: float = 0.5) -> WaitingTimeReport:
    """Measure the first recorded time at which ``u(t, x0) > threshold`` and
    compare it with the predicted lower bound.

    The initial datum must vanish at ``x0`` and satisfy
    ``u0(x) <= a |x - x0|^2`` on ``B(x0, delta)``. ``tau_measured`` is
    ``inf`` (``censored``) when the threshold is never crossed.
    """
    _require(traj, "original-t")
    grid = traj.grid
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    r = grid.radius(x0)
    node = int(np.argmin(np.where(grid.mask == EXTERIOR, np.inf, r)))
    if r[node] > 1e-9 * max(1.0, grid.h):
        raise ValueError("x0 must coincide with a grid node")
    u0 = traj.values[0]
    if u0[node] > 0:
        raise ValueError(f"u0(x0) = {u0[node]!r} > 0: x0 is not on the "
                         "support boundary")
    ball = (r < delta) & (grid.mask != EXTERIOR)
    excess = u0 - a * r * r
    bad = np.flatnonzero(ball & (excess > 1e-14 * max(1.0, u0.max())))
    if bad.size:
        j = int(bad[np.argmax(excess[bad])])
        raise ValueError(f"u0 <= a |x - x0|^2 fails at node {j} "
                         f"(x = {grid.points[j].tolist()})")
    crossed = np.flatnonzero(traj.values[:, node] > threshold)
    censored = crossed.size == 0
    tau = math.inf if censored else float(traj.times[crossed[0]])
    T = waiting_time_bound(a, delta, C1)
    return WaitingTimeReport(x0.tolist(), a, delta, C1, T, tau, threshold,
                             bool(tau >= factor * T), bool(censored))


# --- boundary growth ---------------------------------------------------------

@dataclass(frozen=True)
class BoundaryGrowthReport(_Report):
    alpha: float
    omega: float
    x0: list
    C1: float
    max_violation: float


def boundary_growth_check(traj_v: Trajectory, alpha: float, x0,
                          C1: float) -> BoundaryGrowthReport:
    """Largest value of ``v(s,x) - omega(alpha) - (2 C1/alpha) |x - x0|`` over
    recorded ``s`` and interior nodes in ``B(x0, alpha)``.

    ``omega(alpha)`` is the sup of ``v(0, .)`` over nodes closer than
    ``alpha`` to the boundary.
    """
    _require(traj_v, "rescaled-s")
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    grid = traj_v.grid
    if grid.domain.exterior_sphere_radius is None:
        raise ValueError("domain has no exterior sphere radius")
    live = grid.mask != EXTERIOR
    near = live & (np.nan_to_num(grid.distances, nan=np.inf) < alpha)
    omega = float(np.max(traj_v.values[0][near], initial=0.0))
    r = grid.radius(x0)
    ball = (grid.mask == INTERIOR) & (r < alpha)
    if not ball.any():
        raise ValueError("no interior node within alpha of x0")
    bound = omega + (2 * C1 / alpha) * r[ball]
    worst = float(np.max(traj_v.values[:, ball] - bound))
    return BoundaryGrowthReport(alpha, omega,
                                np.atleast_1d(np.asarray(x0, float)).tolist(),
                                C1, worst)
