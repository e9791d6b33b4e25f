"""Named initial data.

Every preset is nonnegative, vanishes on the boundary and is not identically
zero. Each catalog entry records the condition it is built to satisfy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .barriers import BumpBarrierSpec, eval_bump
from .domain import Field, Grid


@dataclass(frozen=True)
class Preset:
    name: str
    params: dict = field(default_factory=dict)
    condition: str = ""
    build: object = field(default=None, repr=False, compare=False)

    def describe(self) -> dict:
        return {"name": self.name, "params": dict(self.params),
                "condition": self.condition}


def _center(grid: Grid) -> np.ndarray:
    dom = grid.domain
    b = dom.bounds
    if dom.kind == "interval":
        return np.array([(b[0] + b[1]) / 2])
    if dom.kind == "rectangle":
        return np.array([(b[0] + b[1]) / 2, (b[2] + b[3]) / 2])
    return np.array(b[:2])


def _extent(grid: Grid) -> float:
    """Distance from the centre to the nearest boundary point."""
    dom = grid.domain
    b = dom.bounds
    if dom.kind == "interval":
        return (b[1] - b[0]) / 2
    if dom.kind == "rectangle":
        return min(b[1] - b[0], b[3] - b[2]) / 2
    return b[2]


def _bump(grid, center, width, amplitude):
    def f(p):
        r2 = ((p - center) ** 2).sum(axis=1) / width ** 2
        return amplitude * np.maximum(1.0 - r2, 0.0) ** 2
    return Field.from_function(grid, f)


def centered_bump(grid, amplitude=1.0, width=0.5):
    """``A (1 - |x - c|^2 / w^2)_+^2`` about the domain centre; ``width`` is
    relative to the centre-to-boundary distance."""
    return _bump(grid, _center(grid), width * _extent(grid), amplitude)


def off_center_bump(grid, amplitude=3.0, width=0.3, offset=0.4):
    c = _center(grid).copy()
    c[0] += offset * _extent(grid)
    return _bump(grid, c, width * _extent(grid), amplitude)


def half_domain_bump(grid, amplitude=1.0):
    """Bump supported in the half ``x > centre`` (first coordinate)."""
    c = _center(grid)[0]
    ext = _extent(grid)

    def f(p):
        x = p[:, 0]
        q = 4 * np.maximum(x - c, 0) * np.maximum(c + ext - x, 0) / ext ** 2
        rest = ((p[:, 1:] - _center(grid)[1:]) ** 2).sum(axis=1) / ext ** 2
        return amplitude * q ** 2 * np.maximum(1 - rest, 0) ** 2
    return Field.from_function(grid, f)


def bump_barrier(grid, eps=None, delta=0.25, t0=0.0):
    """The compact bump solution at its initial time ``t0``, centred in the
    domain."""
    c = _center(grid)
    ext = _extent(grid)
    eps = ext / 2 if eps is None else eps
    spec = BumpBarrierSpec(tuple(c), t0, eps, delta, boundary_distance=ext)
    return Field.from_function(grid, lambda p: eval_bump(spec, t0, p))


def separable(grid, t0=1.0):
    """Friendly giant ``t0^{-1/2} f(x)`` from the shooting oracle (intervals
    and disks)."""
    from .giant import giant_ode_oracle

    dom = grid.domain
    if dom.kind == "rectangle":
        raise ValueError("separable preset needs an interval or a disk")
    oracle = giant_ode_oracle(_extent(grid))
    prof = oracle.profile_on(grid, _center(grid))
    return prof.field.scaled(t0 ** -0.5)


def quadratic_edge(grid, x0=0.0, a=1.0, delta=0.2):
    """``a (x - x0)_+^2 ((b - x)/(b - x0))^2`` in the first coordinate, where
    ``b`` is the right end of the domain: zero left of ``x0`` and below
    ``a |x - x0|^2`` everywhere."""
    c = _center(grid)
    b = c[0] + _extent(grid)
    if not x0 < b:
        raise ValueError("x0 must lie left of the right boundary")

    def f(p):
        x = p[:, 0]
        damp = np.clip((b - x) / (b - x0), 0.0, 1.0)
        rest = ((p[:, 1:] - c[1:]) ** 2).sum(axis=1) / _extent(grid) ** 2
        return a * np.maximum(x - x0, 0) ** 2 * damp ** 2 * \
            np.maximum(1 - rest, 0) ** 2
    return Field.from_function(grid, f)


_CATALOG = [
    Preset("centered-bump", {"amplitude": 1.0, "width": 0.5},
           "u0 >= 0, u0 != 0, u0 = 0 on the boundary", centered_bump),
    Preset("off-center-bump", {"amplitude": 3.0, "width": 0.3, "offset": 0.4},
           "u0 >= 0, u0 != 0, u0 = 0 on the boundary", off_center_bump),
    Preset("half-domain-bump", {"amplitude": 1.0},
           "u0 >= 0, u0 != 0, support in one half of the domain",
           half_domain_bump),
    Preset("bump-barrier", {"delta": 0.25, "t0": 0.0, "eps": None},
           "compact bump solution B(t0, .) with "
           "alpha = min{(4 delta)^(1/3), eps^(2/3)}", bump_barrier),
    Preset("separable", {"t0": 1.0},
           "t0^(-1/2) f(x) with -Lap_inf f - f/2 = 0, f > 0, f = 0 on "
           "the boundary", separable),
    Preset("quadratic-edge", {"x0": 0.0, "a": 1.0, "delta": 0.2},
           "u0(x) <= a |x - x0|^2 on B(x0, delta), u0(x0) = 0",
           quadratic_edge),
]


def list_presets() -> list[Preset]:
    """Full catalog in a fixed order."""
    return list(_CATALOG)


def get_preset(name: str) -> Preset:
    for p in _CATALOG:
        if p.name == name:
            return p
    raise KeyError(f"unknown preset {name!r}")


def make_initial(grid: Grid, name: str, **params) -> Field:
    preset = get_preset(name)
    merged = {k: v for k, v in preset.params.items() if v is not None}
    merged.update(params)
    return preset.build(grid, **merged)
