"""Config-driven experiments.

An experiment is described by a TOML file::

    kind = "decay"
    output = "runs/decay"

    [domain]
    kind = "interval"
    bounds = [-1.0, 1.0]
    h = 0.0025

    [initial]
    preset = "centered-bump"

    [schedule]
    t_end = 1000.0

Optional tables: ``[scheme]`` (``gradient_rule``), ``[solver]`` (fields of
:class:`SolverConfig`), ``[params]`` (kind-specific knobs) and
``[tolerances]`` (pass thresholds). Unknown keys are rejected.

:func:`run_experiment` writes ``manifest.json``, CSV data and ``report.json``
into the output directory and returns the report. The report lists every
pass criterion with its measured value; nothing in it depends on wall-clock
time, so equal configs give byte-identical reports.
"""
from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analysis, barriers, giant
from .domain import (EXTERIOR, Field, Grid, build_disk_grid,
                     build_interval_grid, build_rectangle_grid)
from .evolution import SolverConfig, evolve, to_original, to_rescaled
from .io import export_trajectory, write_csv, write_field_csv, write_json
from .operators import SchemeSpec
from .presets import get_preset, make_initial

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("decay", "giant", "convergence", "universal-bound", "positivity",
         "waiting-time", "boundary-barrier", "validate-scheme")

STATEMENTS = {
    "validate-scheme": "S_T(t,x) = |x-x0|^2 / (4 (T-t)^(1/2)) solves "
                       "u_t = Lap_inf u",
    "decay": "||u(t)||_inf <= C1 (t+1)^(-1/2)",
    "giant": "-Lap_inf f = f/2 in Omega, f = 0 on the boundary has at most "
             "one positive solution",
    "convergence": "||t^(1/2) u(t,.) - f_inf||_inf -> 0 as t -> inf",
    "universal-bound": "u(t,x) <= t^(-1/2) f_inf(x)",
    "positivity": "u(t,x) > 0 on [t1, inf) x Omega",
    "waiting-time": "u(t,x0) = 0 for t < min{1/(16 a^2), delta^4/(16 C1^2)}",
    "boundary-barrier": "v(s,x) <= omega(alpha) + (2 C1/alpha) |x - x0| "
                        "near a boundary point x0",
}

# default pass thresholds per kind; the monotonicity tolerance applies to
# every kind that evolves the original equation from t = 0
DEFAULT_TOLERANCES = {
    "validate-scheme": {"min_order": 0.8},
    "decay": {"exponent_low": -0.55, "exponent_high": -0.45,
              "monotonicity": 1e-6},
    "giant": {"uniqueness": 1e-3, "steady": 1e-6, "coarse_steady": 1e-4,
              "oracle": 0.05},
    "convergence": {"final_relative": 0.05, "slack": 0.10,
                    "monotonicity": 1e-6},
    "universal-bound": {"violation": 1e-2, "monotonicity": 1e-6},
    "positivity": {"inclusion_violations": 0, "monotonicity": 1e-6},
    "waiting-time": {"factor": 0.5, "threshold": 1e-6, "monotonicity": 1e-6},
    "boundary-barrier": {"violation": 1e-2},
}

DEFAULT_PARAMS = {
    "validate-scheme": {"x0": 0.0, "T": 1.0, "t_final": 0.5,
                        "hs": [0.01, 0.005, 0.0025]},
    "decay": {"window": [10.0, 1000.0]},
    "giant": {"seeds": [], "levels": []},
    "convergence": {"window": [100.0, 1000.0]},
    "universal-bound": {"t_min": 1.0},
    "positivity": {},
    "waiting-time": {"x0": 0.0, "a": 1.0, "delta": 0.2},
    "boundary-barrier": {"alpha": 0.25, "s_end": 8.0},
}

_TOP_KEYS = {"kind", "output", "seed", "domain", "scheme", "solver",
             "initial", "schedule", "params", "tolerances"}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit status 2)."""


def _package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# --- configuration -----------------------------------------------------------

@dataclass
class ExperimentConfig:
    kind: str
    domain: dict
    initial: dict = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)
    scheme: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: str = "run"
    seed: int = 0

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        if "kind" not in raw:
            raise ConfigError("missing 'kind'")
        kind = raw["kind"]
        if kind not in KINDS:
            raise ConfigError(f"unknown kind {kind!r}; expected one of {KINDS}")
        for key in ("domain", "initial", "schedule", "scheme", "solver",
                    "params", "tolerances"):
            if not isinstance(raw.get(key, {}), dict):
                raise ConfigError(f"[{key}] must be a table")
        params = dict(DEFAULT_PARAMS[kind])
        extra = set(raw.get("params", {})) - set(params)
        if extra:
            raise ConfigError(f"unknown params for {kind}: {sorted(extra)}")
        params.update(raw.get("params", {}))
        tols = dict(DEFAULT_TOLERANCES[kind])
        extra = set(raw.get("tolerances", {})) - set(tols)
        if extra:
            raise ConfigError(f"unknown tolerances for {kind}: {sorted(extra)}")
        tols.update(raw.get("tolerances", {}))
        cfg = cls(kind=kind, domain=dict(raw.get("domain", {})),
                  initial=dict(raw.get("initial", {})),
                  schedule=dict(raw.get("schedule", {})),
                  scheme=dict(raw.get("scheme", {})),
                  solver=dict(raw.get("solver", {})), params=params,
                  tolerances=tols, output=str(raw.get("output", "run")),
                  seed=int(raw.get("seed", 0)))
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML: {exc}") from exc
        return cls.from_dict(raw)

    def validate(self):
        for name, val in self.tolerances.items():
            if name == "inclusion_violations":
                ok = val >= 0
            else:
                ok = val > 0 or name.startswith("exponent")
            if not ok:
                raise ConfigError(f"tolerance {name} must be positive")
        t = self.tolerances
        if "exponent_low" in t and not t["exponent_low"] < t["exponent_high"]:
            raise ConfigError("need exponent_low < exponent_high")
        if self.kind != "validate-scheme":
            self.build_grid()
        if self.kind == "giant":
            seeds = self.params["seeds"]
            if not seeds:
                raise ConfigError("giant needs at least one entry in "
                                  "params.seeds")
            for s in seeds:
                _check_preset(s)
        elif self.kind != "validate-scheme":
            _check_preset(self.initial)
            if "t_end" not in self.schedule and self.kind != "boundary-barrier":
                raise ConfigError("[schedule] needs t_end")
        try:
            self.solver_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[solver]: {exc}") from exc

    def to_dict(self) -> dict:
        return {"kind": self.kind, "domain": self.domain,
                "initial": self.initial, "schedule": self.schedule,
                "scheme": self.scheme, "solver": self.solver,
                "params": self.params, "tolerances": self.tolerances,
                "output": self.output, "seed": self.seed}

    # -- builders --

    def build_grid(self, h: float | None = None) -> Grid:
        return grid_from_spec(self.domain, h)

    def solver_config(self, record_times=None) -> SolverConfig:
        opts = dict(self.solver)
        if record_times is not None:
            opts["record_times"] = tuple(record_times)
        return SolverConfig(**opts)

    def scheme_for(self, grid: Grid) -> SchemeSpec:
        rule = self.scheme.get("gradient_rule", "max-slope")
        try:
            return SchemeSpec.for_grid(grid, rule)
        except ValueError as exc:
            raise ConfigError(f"[scheme]: {exc}") from exc


def _check_preset(spec: dict):
    name = spec.get("preset")
    if name is None:
        raise ConfigError("initial data needs a 'preset'")
    try:
        preset = get_preset(name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    extra = set(spec.get("params", {})) - set(preset.params)
    if extra:
        raise ConfigError(f"unknown parameters for {name}: {sorted(extra)}")


def grid_from_spec(dom: dict, h: float | None = None) -> Grid:
    """Build a grid from a ``[domain]`` table; ``h`` overrides its
    spacing."""
    kind = dom.get("kind")
    h = dom.get("h") if h is None else h
    if h is None or not h > 0:
        raise ConfigError("domain needs a positive h")
    bounds = [float(b) for b in dom.get("bounds", [])]
    try:
        if kind == "interval":
            if len(bounds) != 2:
                raise ConfigError("interval bounds are [a, b]")
            a, b = bounds
            n = int(round((b - a) / h)) + 1
            if abs((b - a) / (n - 1) - h) > 1e-9 * h:
                raise ConfigError(f"h = {h} does not divide the interval")
            return build_interval_grid(a, b, n)
        k = int(dom.get("stencil_radius", 2))
        if kind == "rectangle":
            if len(bounds) != 4:
                raise ConfigError("rectangle bounds are [x0, x1, y0, y1]")
            return build_rectangle_grid(*bounds, h, k)
        if kind == "disk":
            if len(bounds) != 3:
                raise ConfigError("disk bounds are [cx, cy, radius]")
            cx, cy, r = bounds
            return build_disk_grid(r, h, k, center=(cx, cy))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[domain]: {exc}") from exc
    raise ConfigError(f"unknown domain kind {kind!r}")


def geometric_times(t_first: float, t_end: float, per_octave: int):
    """``t_first 2^(j/per_octave)`` below ``t_end``."""
    if not 0 < t_first < t_end or per_octave < 1:
        raise ConfigError("need 0 < t_first < t_end and per_octave >= 1")
    n = int(math.floor(per_octave * math.log2(t_end / t_first) + 1e-9))
    return [t_first * 2.0 ** (j / per_octave) for j in range(n + 1)
            if t_first * 2.0 ** (j / per_octave) < t_end]


def _record_times(cfg: ExperimentConfig):
    s = cfg.schedule
    if "times" in s:
        return sorted(float(t) for t in s["times"])
    return geometric_times(float(s.get("t_first", 1e-3)), float(s["t_end"]),
                           int(s.get("per_octave", 4)))


# --- report plumbing -----------------------------------------------------------

class _Criteria:
    def __init__(self):
        self.items = []

    def add(self, name, value, threshold, relation):
        ops = {"<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b,
               "in": lambda a, b: b[0] <= a <= b[1],
               "==": lambda a, b: a == b}
        ok = value is not None and bool(ops[relation](value, threshold))
        self.items.append({"name": name, "value": value,
                           "threshold": threshold, "relation": relation,
                           "passed": ok})
        return ok

    @property
    def failing(self):
        return [c["name"] for c in self.items if not c["passed"]]


def _initial_field(grid: Grid, spec: dict) -> Field:
    return make_initial(grid, spec["preset"], **spec.get("params", {}))


def _oracle_for(grid: Grid):
    """Shooting oracle for intervals and disks; ``None`` otherwise."""
    dom = grid.domain
    b = dom.bounds
    if dom.kind == "interval":
        return giant.giant_ode_oracle((b[1] - b[0]) / 2), ((b[0] + b[1]) / 2,)
    if dom.kind == "disk":
        return giant.giant_ode_oracle(b[2]), (b[0], b[1])
    return None, None


def _reference_giant(cfg, grid, traj):
    """Oracle giant where available, else the flow giant seeded with the
    last rescaled state of ``traj``."""
    oracle, center = _oracle_for(grid)
    if oracle is not None:
        return oracle.profile_on(grid, center)
    seed = traj.final.scaled(math.sqrt(traj.times[-1]))
    return giant.compute_giant_flow(grid, seed, 1e-6, cfg.solver_config())


def _monotonicity(traj, tol, crit):
    pos = traj.select(t_min=np.nextafter(0.0, 1.0))
    v_drop = analysis.rescaled_monotonicity(to_rescaled(pos))
    bc = analysis.benilan_crandall(traj)
    crit.add("rescaled_monotonicity", v_drop, tol, "<=")
    crit.add("benilan_crandall", bc, tol, "<=")
    return {"rescaled_monotonicity": v_drop, "benilan_crandall": bc}


def _evolve_original(cfg, grid):
    u0 = _initial_field(grid, cfg.initial)
    traj = evolve(u0, 0.0, float(cfg.schedule["t_end"]),
                  cfg.solver_config(_record_times(cfg)), "original",
                  cfg.scheme_for(grid))
    return u0, traj


def _sup_curve(out, traj):
    rows = [(t, s) for t, s in zip(traj.times, traj.sup_norms())]
    write_csv(out / "sup_norm.csv", ["t", "sup_norm"], rows)


# --- experiment kinds --------------------------------------------------------

def _validate_scheme(cfg, out, crit):
    p = cfg.params
    x0, T, t_fin = float(p["x0"]), float(p["T"]), float(p["t_final"])
    if not 0 < t_fin < T:
        raise ConfigError("need 0 < t_final < T")
    dom = cfg.domain or {"kind": "interval", "bounds": [x0 - 0.5, x0 + 0.5]}
    if dom.get("kind", "interval") != "interval":
        raise ConfigError("validate-scheme runs on an interval")
    dom = {"kind": "interval", **dom}
    spec = barriers.BackwardBarrierSpec((x0,), T)

    def exact(t, pts):
        return barriers.eval_backward(spec, t, pts)

    rows, hs, errs = [], [], []
    for h in sorted((float(v) for v in p["hs"]), reverse=True):
        grid = grid_from_spec(dom, h)
        u0 = Field.from_function(grid, lambda q: exact(0.0, q),
                                 homogeneous=False)
        traj = evolve(u0, 0.0, t_fin, cfg.solver_config(()), "original",
                      cfg.scheme_for(grid), boundary_data=exact)
        err = float(np.max(np.abs(traj.final.values
                                  - exact(t_fin, grid.points))))
        order = (math.log(errs[-1] / err) / math.log(hs[-1] / h)
                 if errs else math.nan)
        hs.append(h)
        errs.append(err)
        rows.append((h, err, order))
    write_csv(out / "error_table.csv", ["h", "max_error", "order"], rows)
    if len(hs) < 2:
        raise ConfigError("validate-scheme needs at least two values in hs")
    fit = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    crit.add("errors_decrease", bool(np.all(np.diff(errs) < 0)), True, "==")
    crit.add("measured_order", fit, cfg.tolerances["min_order"], ">=")
    return {"hs": hs, "errors": errs, "order_fit": fit,
            "pairwise_orders": [r[2] for r in rows[1:]],
            "x0": x0, "T": T, "t_final": t_fin}


def _decay(cfg, out, crit):
    grid = cfg.build_grid()
    _, traj = _evolve_original(cfg, grid)
    export_trajectory(traj, out / "trajectory", cfg.to_dict(), "original")
    _sup_curve(out, traj)
    lo, hi = cfg.params["window"]
    fit = analysis.decay_fit(traj, (float(lo), float(hi)))
    t = cfg.tolerances
    crit.add("decay_exponent", fit.exponent,
             [t["exponent_low"], t["exponent_high"]], "in")
    crit.add("C1_finite", bool(math.isfinite(fit.C1)), True, "==")
    crit.add("not_truncated", not traj.truncated, True, "==")
    mono = _monotonicity(traj, t["monotonicity"], crit)
    return {"decay_fit": fit.to_dict(), **mono, "steps": traj.steps}


def _giant(cfg, out, crit):
    p, t = cfg.params, cfg.tolerances
    grid = cfg.build_grid()
    coarse = [cfg.build_grid(float(h)) for h in sorted(p["levels"],
                                                       reverse=True)]
    seed_grid = coarse[0] if coarse else grid
    seeds = [_initial_field(seed_grid, s) for s in p["seeds"]]
    try:
        report, profiles = giant.check_uniqueness(
            grid, seeds, t["uniqueness"], t["steady"], cfg.solver_config(),
            coarse=coarse, coarse_tol=t["coarse_steady"])
    except giant.GiantFlowError as exc:
        crit.add("flow_reached_steady_state", False, True, "==")
        return {"error": str(exc)}
    for i, prof in enumerate(profiles):
        write_field_csv(out / f"giant_{i}.csv", prof.field)
        write_json(out / f"giant_{i}.json", prof.metadata())
    if len(seeds) > 1:
        crit.add("uniqueness", report.max_distance, t["uniqueness"], "<=")
    details = {"uniqueness": report.to_dict(),
               "profiles": [pr.metadata() for pr in profiles]}
    oracle, center = _oracle_for(grid)
    if oracle is not None:
        ref = oracle.profile_on(grid, center)
        sel = grid.mask != EXTERIOR
        if grid.dim == 2:
            # a diameter through the centre
            sel &= np.abs(grid.points[:, 1] - center[1]) < 1e-9 * grid.h
        err = float(np.max(np.abs(profiles[0].values[sel] - ref.values[sel]))
                    / oracle.m)
        crit.add("oracle_agreement", err, t["oracle"], "<=")
        details["oracle"] = {"m": oracle.m, "relative_error": err,
                             "cusp_sensitivity": oracle.cusp_sensitivity}
    return details


def _convergence(cfg, out, crit):
    grid = cfg.build_grid()
    _, traj = _evolve_original(cfg, grid)
    ref = _reference_giant(cfg, grid, traj)
    rep = analysis.convergence_report(traj, ref,
                                      tuple(map(float, cfg.params["window"])),
                                      cfg.tolerances["slack"])
    write_csv(out / "convergence.csv", ["t", "error"],
              zip(rep.times, rep.errors))
    write_field_csv(out / "giant.csv", ref.field)
    crit.add("final_relative_error", rep.final_relative,
             cfg.tolerances["final_relative"], "<=")
    crit.add("error_nonincreasing", rep.nonincreasing, True, "==")
    mono = _monotonicity(traj, cfg.tolerances["monotonicity"], crit)
    return {"convergence": rep.to_dict(), "giant": ref.metadata(), **mono}


def _universal_bound(cfg, out, crit):
    grid = cfg.build_grid()
    _, traj = _evolve_original(cfg, grid)
    _sup_curve(out, traj)
    ref = _reference_giant(cfg, grid, traj)
    worst = analysis.universal_bound_check(traj, ref,
                                           float(cfg.params["t_min"]))
    rel = worst / ref.sup()
    crit.add("bound_violation", rel, cfg.tolerances["violation"], "<=")
    mono = _monotonicity(traj, cfg.tolerances["monotonicity"], crit)
    return {"max_violation": worst, "relative_violation": rel,
            "giant": ref.metadata(), **mono}


def _positivity(cfg, out, crit):
    grid = cfg.build_grid()
    if grid.domain.interior_sphere_radius is None:
        raise ConfigError("positivity needs a domain with an interior sphere "
                          "radius")
    _, traj = _evolve_original(cfg, grid)
    _sup_curve(out, traj)
    t1 = analysis.eventual_positivity_time(traj)
    traj_v = to_rescaled(traj.select(t_min=np.nextafter(0.0, 1.0)))
    viol = analysis.mask_inclusion_violations(traj_v)
    crit.add("positivity_reached", t1 is not None, True, "==")
    crit.add("mask_inclusion_violations", viol,
             cfg.tolerances["inclusion_violations"], "<=")
    cert = analysis.positivity_certificate(traj_v, grid.interior)
    mono = _monotonicity(traj, cfg.tolerances["monotonicity"], crit)
    rows = [(s, int(analysis.positivity_set(f).sum())) for s, f in traj_v]
    write_csv(out / "positivity.csv", ["s", "positive_nodes"], rows)
    return {"t1": t1, "inclusion_violations": viol,
            "certificate": None if cert is None else cert.to_dict(), **mono}


def _waiting_time(cfg, out, crit):
    grid = cfg.build_grid()
    p, t = cfg.params, cfg.tolerances
    u0, traj = _evolve_original(cfg, grid)
    _sup_curve(out, traj)
    fit = analysis.decay_fit(traj, (0.0, math.inf))
    x0 = np.atleast_1d(np.asarray(p["x0"], dtype=float))
    try:
        rep = analysis.waiting_time(traj, x0, float(p["a"]),
                                    float(p["delta"]), fit.C1,
                                    t["threshold"] * u0.sup(), t["factor"])
    except ValueError as exc:
        raise ConfigError(f"waiting-time data: {exc}") from exc
    node = int(np.argmin(grid.radius(x0)))
    write_csv(out / "value_at_x0.csv", ["t", "u"],
              zip(traj.times, traj.values[:, node]))
    crit.add("waiting_time", rep.tau_measured, t["factor"] * rep.T_pred, ">=")
    mono = _monotonicity(traj, t["monotonicity"], crit)
    return {"waiting_time": rep.to_dict(), "decay_fit": fit.to_dict(), **mono}


def _boundary_points(grid: Grid):
    b = grid.domain.bounds
    if grid.domain.kind == "interval":
        return [(b[0],), (b[1],)]
    if grid.domain.kind == "disk":
        return [(b[0] - b[2], b[1]), (b[0] + b[2], b[1])]
    return [(b[0], (b[2] + b[3]) / 2), (b[1], (b[2] + b[3]) / 2)]


def _boundary_barrier(cfg, out, crit):
    grid = cfg.build_grid()
    p = cfg.params
    v0 = _initial_field(grid, cfg.initial)
    s_end = float(cfg.schedule.get("t_end", p["s_end"]))
    traj_v = evolve(v0, 0.0, s_end, cfg.solver_config(), "rescaled",
                    cfg.scheme_for(grid))
    _sup_curve(out, traj_v)
    fit = analysis.decay_fit(to_original(traj_v), (0.0, math.inf))
    alpha = float(p["alpha"])
    reports = []
    for i, x0 in enumerate(_boundary_points(grid)):
        rep = analysis.boundary_growth_check(traj_v, alpha, x0, fit.C1)
        reports.append(rep.to_dict())
        crit.add(f"boundary_growth_{i}", rep.max_violation / fit.C1,
                 cfg.tolerances["violation"], "<=")
    return {"C1": fit.C1, "alpha": alpha, "endpoints": reports}


RUNNERS = {
    "validate-scheme": _validate_scheme,
    "decay": _decay,
    "giant": _giant,
    "convergence": _convergence,
    "universal-bound": _universal_bound,
    "positivity": _positivity,
    "waiting-time": _waiting_time,
    "boundary-barrier": _boundary_barrier,
}


def run_experiment(cfg: ExperimentConfig, output=None) -> dict:
    """Run ``cfg`` and write its artifacts; returns the report dict."""
    out = Path(output if output is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": cfg.to_dict(), "seed": cfg.seed,
                "package_version": _package_version()}
    if cfg.kind != "validate-scheme":
        manifest["grid"] = cfg.build_grid().to_dict()
    write_json(out / "manifest.json", manifest)
    crit = _Criteria()
    details = RUNNERS[cfg.kind](cfg, out, crit)
    report = {"kind": cfg.kind, "statement": STATEMENTS[cfg.kind],
              "passed": not crit.failing, "failing": crit.failing,
              "criteria": crit.items, "details": details}
    write_json(out / "report.json", report)
    return report


def summarize(directory) -> list[dict]:
    """One row per ``report.json`` below ``directory`` (sorted by path)."""
    root = Path(directory)
    rows = []
    for path in sorted(root.rglob("report.json")):
        rep = json.loads(path.read_text())
        rows.append({"run": str(path.parent.relative_to(root)) or ".",
                     "kind": rep.get("kind"), "passed": rep.get("passed"),
                     "failing": ";".join(rep.get("failing", [])),
                     "statement": rep.get("statement")})
    return rows
