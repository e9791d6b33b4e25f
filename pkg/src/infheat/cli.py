"""Command-line entry point.

Exit status: 0 when every pass criterion holds, 1 when one fails, 2 on a
usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import barriers
from .experiments import (ConfigError, ExperimentConfig, run_experiment,
                          summarize)
from .io import write_csv
from .presets import list_presets

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _print_report(report: dict, out):
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{report['kind']}: {status}  [{report['statement']}]")
    for c in report["criteria"]:
        mark = "ok " if c["passed"] else "BAD"
        print(f"  {mark} {c['name']} = {c['value']!r} "
              f"({c['relation']} {c['threshold']!r})")
    print(f"  artifacts in {out}")


def _finish(report, out) -> int:
    _print_report(report, out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config)
    out = args.out or cfg.output
    return _finish(run_experiment(cfg, out), out)


def cmd_presets(args) -> int:
    cat = [p.describe() for p in list_presets()]
    if args.json:
        print(json.dumps(cat, indent=2))
        return EXIT_OK
    for p in cat:
        params = ", ".join(f"{k}={v}" for k, v in p["params"].items())
        print(f"{p['name']:18s} {params}")
        print(f"{'':18s} {p['condition']}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = summarize(args.directory)
    if not rows:
        print(f"no report.json found below {args.directory}", file=sys.stderr)
        return EXIT_CONFIG
    header = ["run", "kind", "passed", "failing", "statement"]
    write_csv(f"{args.directory}/summary.csv", header,
              ([r[h] for h in header] for r in rows))
    for r in rows:
        status = "PASS" if r["passed"] else "FAIL"
        extra = f"  failing: {r['failing']}" if r["failing"] else ""
        print(f"{status}  {r['kind']:17s} {r['run']}{extra}")
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAIL


def _parse_domain(text: str) -> dict:
    """``interval:a,b``, ``rectangle:x0,x1,y0,y1`` or ``disk:R`` /
    ``disk:cx,cy,R``."""
    kind, _, rest = text.partition(":")
    try:
        nums = [float(v) for v in rest.split(",")] if rest else []
    except ValueError as exc:
        raise ConfigError(f"bad domain bounds {rest!r}") from exc
    if kind == "disk" and len(nums) == 1:
        nums = [0.0, 0.0, nums[0]]
    return {"kind": kind, "bounds": nums}


def cmd_giant(args) -> int:
    dom = _parse_domain(args.domain)
    dom["h"] = args.h
    seeds = [{"preset": s} for s in (args.seed or ["centered-bump"])]
    raw = {"kind": "giant", "domain": dom, "output": args.out,
           "params": {"seeds": seeds, "levels": args.levels or []},
           "tolerances": {"steady": args.tol}}
    cfg = ExperimentConfig.from_dict(raw)
    return _finish(run_experiment(cfg), args.out)


def _barrier_rows(kind: str, n: int, times):
    if kind == "backward":
        spec = barriers.BackwardBarrierSpec((0.0,), 1.0)
        x = np.linspace(-0.5, 0.5, n)
        times = times or [0.0, 0.25, 0.5, 0.75]
        for t in times:
            val = barriers.eval_backward(spec, t, x)
            res = barriers.backward_residual(spec, t, x)
            yield from zip([t] * n, x, val, res)
    elif kind == "bump":
        spec = barriers.BumpBarrierSpec((0.0,), 0.0, 0.5, 0.25,
                                        boundary_distance=1.0)
        x = np.linspace(-1.0, 1.0, n)
        times = times or [0.0, 1.0, 2.0, 4.0]
        for t in times:
            val = barriers.eval_bump(spec, t, x)
            res = barriers.bump_residual(spec, t, x)
            yield from zip([t] * n, x, val, res)
    else:
        spec = barriers.BoundaryBarrierSpec.for_interval_end(
            1.0, 1, alpha=0.25, delta=0.1, B=2.5)
        r = np.linspace(0.0, spec.alpha, n)
        val = barriers.eval_psi(spec, r)
        res = barriers.psi_residual(spec, r)
        yield from zip([0.0] * n, r, val, res)


def cmd_barriers(args) -> int:
    times = [float(t) for t in args.times.split(",")] if args.times else None
    path = write_csv(args.out, ["t", "x", "value", "residual"],
                     _barrier_rows(args.kind, args.points, times))
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="infheat",
        description="Numerical experiments for u_t = Lap_inf u with zero "
                    "Dirichlet data.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a TOML config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("presets", help="list the initial-data catalog")
    pr.add_argument("--json", action="store_true")
    pr.set_defaults(func=cmd_presets)

    rp = sub.add_parser("report", help="summarize every report in a directory")
    rp.add_argument("directory")
    rp.set_defaults(func=cmd_report)

    g = sub.add_parser("giant", help="compute the giant by the rescaled flow")
    g.add_argument("--domain", default="interval:-1,1")
    g.add_argument("--h", type=float, default=0.01)
    g.add_argument("--tol", type=float, default=1e-6,
                   help="steady-state tolerance")
    g.add_argument("--seed", action="append",
                   help="preset name; repeat for a uniqueness check")
    g.add_argument("--levels", type=float, nargs="*",
                   help="coarser spacings for multilevel seeding")
    g.add_argument("--out", default="giant")
    g.set_defaults(func=cmd_giant)

    b = sub.add_parser("barriers", help="tabulate a closed-form barrier")
    b.add_argument("--kind", choices=["backward", "bump", "psi"],
                   default="backward")
    b.add_argument("--points", type=int, default=101)
    b.add_argument("--times", help="comma-separated times")
    b.add_argument("--out", default="barrier.csv")
    b.set_defaults(func=cmd_barriers)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
