"""CSV/JSON writers. Floats are written with ``repr`` (shortest round-trip
decimal), so equal runs give byte-identical files."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .domain import EXTERIOR, Field


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating))
                        else v for v in row])
    return path


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def field_rows(field: Field):
    g = field.grid
    live = np.flatnonzero(g.mask != EXTERIOR)
    for i in live:
        yield [*map(float, g.points[i]), float(field.values[i])]


def coord_header(dim: int):
    return ["x", "y"][:dim]


def write_field_csv(path, field: Field):
    return write_csv(path, [*coord_header(field.grid.dim), "value"],
                     field_rows(field))


def export_trajectory(traj, directory, config=None, equation=None):
    """One CSV per recorded time plus ``manifest.json`` with the time list
    and sup-norms."""
    d = Path(directory)
    files = []
    for i, (t, f) in enumerate(traj):
        files.append(write_field_csv(d / f"snapshot_{i:04d}.csv", f).name)
    manifest = {
        "equation": equation or traj.variable,
        "time_variable": traj.variable,
        "times": traj.times,
        "sup_norms": traj.sup_norms(),
        "truncated": traj.truncated,
        "steps": traj.steps,
        "grid": traj.grid.to_dict(),
        "config": config,
        "files": files,
    }
    write_json(d / "manifest.json", manifest)
    return d
