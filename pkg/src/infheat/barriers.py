"""Closed-form solutions, supersolutions and their analytic residuals.

* ``bump``: compactly supported solution of ``u_t = Lap_inf u`` with a
  4/3-power profile, used to push positivity outward.
* ``boundary``: radial supersolution ``psi(r) = delta + B (r - r^2/2)`` of the
  rescaled equation in a collar around an exterior ball.
* ``backward``: ``S_T(t, x) = |x - x0|^2 / (4 sqrt(T - t))``, an exact
  solution that blows up at ``t = T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Field


def _points(x, dim):
    return np.atleast_2d(np.asarray(x, dtype=float)).reshape(-1, dim)


def _norm(x, x0):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    p = _points(x, x0.size)
    return np.sqrt(((p - x0) ** 2).sum(axis=1))


def _scalar_or_array(val, x):
    # a single point (scalar in 1D, coordinate tuple in 2D) gives a float
    if val.size == 1 and np.ndim(x) < 2:
        return float(val[0])
    return val


@dataclass(frozen=True)
class BumpBarrierSpec:
    """Parameters of the bump solution.

    ``boundary_distance`` is ``d(x0, boundary)``; when given, the lifetime
    ``T`` and the containment ``B(x0, eps) in Omega`` are available/checked.
    """

    x0: tuple
    t0: float
    eps: float
    delta: float
    boundary_distance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(np.atleast_1d(
            np.asarray(self.x0, dtype=float)).tolist()))
        if not (self.eps > 0 and self.delta > 0):
            raise ValueError("eps and delta must be positive")
        d = self.boundary_distance
        if d is not None and self.eps > d:
            raise ValueError("ball B(x0, eps) must lie inside the domain")

    @property
    def alpha(self) -> float:
        return min((4 * self.delta) ** (1 / 3), self.eps ** (2 / 3))

    @property
    def lifetime(self) -> float | None:
        """``T = d^6 / alpha^9 - 1``, clipped at zero."""
        if self.boundary_distance is None:
            return None
        return max(self.boundary_distance ** 6 / self.alpha ** 9 - 1.0, 0.0)

    def support_radius(self, t: float) -> float:
        return self.alpha ** 1.5 * (t - self.t0 + 1.0) ** (1 / 6)


def eval_bump(spec: BumpBarrierSpec, t: float, x):
    """Bump value at time ``t >= t0``; ``x`` is a point or ``(n, dim)``
    array."""
    if t < spec.t0:
        raise ValueError("bump is defined for t >= t0 only")
    a = spec.alpha
    tau = t - spec.t0 + 1.0
    r = _norm(x, spec.x0)
    r43 = np.zeros_like(r)
    pos = r > 0
    r43[pos] = np.exp(np.log(r[pos]) * (4.0 / 3.0))
    core = np.maximum(1.0 - r43 * tau ** (-2.0 / 9.0) / (a * a), 0.0)
    val = a ** 3 / 4 * tau ** (-1.0 / 6.0) * core ** 1.5
    return _scalar_or_array(val, x)


def bump_terms(spec: BumpBarrierSpec, t: float, x):
    """``(d/dt B, Lap_inf B)`` inside the support, each from its own closed
    form in ``z = alpha^{-2} r^{4/3} tau^{-2/9}``, ``w = 1 - z``.

    Both vanish outside the support; the support edge (``w = 0``) is a
    nonsmooth point and should not be sampled.
    """
    if t < spec.t0:
        raise ValueError("bump is defined for t >= t0 only")
    a = spec.alpha
    tau = t - spec.t0 + 1.0
    r = _norm(x, spec.x0)
    z = r ** (4.0 / 3.0) * tau ** (-2.0 / 9.0) / (a * a)
    w = np.maximum(1.0 - z, 0.0)
    # d/dt of tau^{-1/6} w^{3/2}, using dz/dtau = -(2/9) z / tau
    dt_term = a ** 3 / 4 * (-(1 / 6) * tau ** (-7 / 6) * w ** 1.5
                            + tau ** (-1 / 6) * 1.5 * np.sqrt(w)
                            * (2 / 9) * z / tau)
    # B_r^2 B_rr with B_r = -(a/2) tau^{-7/18} r^{1/3} w^{1/2}
    lap_term = -(a ** 3 / 8) * tau ** (-7 / 6) * (
        w ** 1.5 / 3 - (2 / 3) * z * np.sqrt(w))
    return _scalar_or_array(dt_term, x), _scalar_or_array(lap_term, x)


def bump_residual(spec: BumpBarrierSpec, t: float, x):
    a, b = bump_terms(spec, t, x)
    return a - b


@dataclass(frozen=True)
class BackwardBarrierSpec:
    x0: tuple
    T: float

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(np.atleast_1d(
            np.asarray(self.x0, dtype=float)).tolist()))
        if not self.T > 0:
            raise ValueError("T must be positive")


def _check_backward_time(spec, t):
    if not 0 <= t < spec.T:
        raise ValueError(f"need 0 <= t < T, got t={t}, T={spec.T}")


def eval_backward(spec: BackwardBarrierSpec, t: float, x):
    _check_backward_time(spec, t)
    r = _norm(x, spec.x0)
    val = r * r / (4.0 * math.sqrt(spec.T - t))
    return _scalar_or_array(val, x)


def backward_terms(spec: BackwardBarrierSpec, t: float, x):
    """``(d/dt S, Lap_inf S)``, each evaluated from its own closed form."""
    _check_backward_time(spec, t)
    x0 = np.asarray(spec.x0)
    p = _points(x, x0.size)
    tau = spec.T - t
    dt_term = ((p - x0) ** 2).sum(axis=1) / (8.0 * tau ** 1.5)
    grad = (p - x0) / (2.0 * math.sqrt(tau))
    hess = 1.0 / (2.0 * math.sqrt(tau))
    lap_term = hess * (grad ** 2).sum(axis=1)
    return _scalar_or_array(dt_term, x), _scalar_or_array(lap_term, x)


def backward_residual(spec: BackwardBarrierSpec, t: float, x):
    """``d/dt S - Lap_inf S``; zero up to rounding."""
    a, b = backward_terms(spec, t, x)
    return a - b


@dataclass(frozen=True)
class BoundaryBarrierSpec:
    """Collar supersolution anchored at boundary point ``x0`` with exterior
    ball ``B(y0, R)``."""

    x0: tuple
    y0: tuple
    R: float
    alpha: float
    delta: float
    B: float

    def __post_init__(self):
        for name in ("x0", "y0"):
            object.__setattr__(self, name, tuple(np.atleast_1d(
                np.asarray(getattr(self, name), dtype=float)).tolist()))
        if not self.R > 0:
            raise ValueError("R must be positive")
        gap = math.dist(self.x0, self.y0)
        if abs(gap - self.R) > 1e-12 * max(1.0, self.R):
            raise ValueError(f"|x0 - y0| = {gap} differs from R = {self.R}")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 1/2)")
        if self.B < 2 * (1 + self.delta):
            raise ValueError("supersolution needs B >= 2 (1 + delta)")

    @classmethod
    def for_interval_end(cls, end: float, side: int, alpha, delta, B,
                         R: float = 1.0):
        """Spec for the endpoint ``end`` of an interval; ``side`` is +1 for
        the right end and -1 for the left one."""
        return cls((end,), (end + side * R,), R, alpha, delta, B)


def _check_r(spec, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > spec.alpha):
        raise ValueError("psi is used on 0 <= r <= alpha only")
    return r


def eval_psi(spec: BoundaryBarrierSpec, r):
    r = _check_r(spec, r)
    val = spec.delta + spec.B * (r - r * r / 2)
    return float(val) if val.ndim == 0 else val


def psi_residual(spec: BoundaryBarrierSpec, r):
    """``-(psi'^2 psi'' + psi/2)`` in closed form."""
    r = _check_r(spec, r)
    B, d = spec.B, spec.delta
    val = B ** 3 * (1 - r) ** 2 - (B / 2) * (r - r * r / 2) - d / 2
    return float(val) if val.ndim == 0 else val


def psi_residual_bound(spec: BoundaryBarrierSpec) -> float:
    """Lower bound ``(B - 2 delta)/4`` on :func:`psi_residual`."""
    return (spec.B - 2 * spec.delta) / 4


def eval_boundary_barrier(spec: BoundaryBarrierSpec, x):
    """``psi(|x - y0| - R)`` at points of the collar."""
    r = _norm(x, spec.y0) - spec.R
    return eval_psi(spec, r)


def separable_scale(t: float) -> float:
    if not t > 0:
        raise ValueError("t must be positive")
    return t ** -0.5


def eval_separable(f: Field, t: float) -> Field:
    """Friendly-giant solution ``t^{-1/2} f(x)`` at time ``t``."""
    return f.scaled(separable_scale(t))
