import csv
import json

import numpy as np
import pytest

from infheat import barriers
from infheat.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from infheat.domain import build_interval_grid
from infheat.experiments import ConfigError, ExperimentConfig, geometric_times
from infheat.presets import get_preset, list_presets, make_initial

SMALL_VALIDATE = """
kind = "validate-scheme"
[params]
hs = [0.02, 0.01]
t_final = 0.25
[tolerances]
min_order = {order}
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# --- presets -----------------------------------------------------------------

def test_preset_catalog_order():
    names = [p.name for p in list_presets()]
    assert names == ["centered-bump", "off-center-bump", "half-domain-bump",
                     "bump-barrier", "separable", "quadratic-edge"]
    with pytest.raises(KeyError):
        get_preset("gaussian")


@pytest.mark.parametrize("name", [p.name for p in list_presets()])
def test_presets_are_admissible(name):
    g = build_interval_grid(-1, 1, 101)
    f = make_initial(g, name)
    assert np.all(f.values >= 0)
    assert f.values[g.boundary].max() == 0
    assert f.sup() > 0


def test_bump_barrier_preset_matches_closed_form():
    g = build_interval_grid(-1, 1, 101)
    spec = barriers.BumpBarrierSpec((0.0,), 0.0, 0.5, 0.25,
                                    boundary_distance=1.0)
    f = make_initial(g, "bump-barrier")
    np.testing.assert_allclose(f.values, barriers.eval_bump(spec, 0.0,
                                                            g.points))


def test_presets_command(capsys):
    assert main(["presets", "--json"]) == EXIT_OK
    cat = json.loads(capsys.readouterr().out)
    assert cat[0]["name"] == "centered-bump"
    assert all(c["condition"] for c in cat)


# --- configuration errors -------------------------------------------------------

@pytest.mark.parametrize("text", [
    'kind = "nonsense"',
    'kind = "decay"\nbogus = 1',
    'kind = "decay"\n[domain]\nkind = "interval"\nbounds = [-1, 1]\nh = 0.03',
    'kind = "decay"\n[domain]\nkind = "interval"\nbounds = [-1, 1]\nh = 0.1'
    '\n[initial]\npreset = "centered-bump"',
    'kind = "giant"\n[domain]\nkind = "interval"\nbounds = [-1, 1]\nh = 0.1',
    'kind = "validate-scheme"\n[tolerances]\nmin_order = -1',
    'kind = "decay"\n[params]\nwindow = [1, 2]\nextra = 3',
    'kind = = "decay"',
])
def test_bad_config_exit_2(tmp_path, text, capsys):
    assert main(["run", write(tmp_path, text)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "absent.toml")]) == EXIT_CONFIG


def test_geometric_times():
    ts = geometric_times(1.0, 8.0, 2)
    np.testing.assert_allclose(ts, [1, 2 ** 0.5, 2, 2 ** 1.5, 4, 2 ** 2.5])
    with pytest.raises(ConfigError):
        geometric_times(2.0, 1.0, 4)


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict({"kind": "validate-scheme"})
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


# --- runs ------------------------------------------------------------------------

def test_validate_run_is_reproducible(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_VALIDATE.format(order=0.8))
    assert main(["run", cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", cfg, "--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    rep = json.loads(a)
    assert rep["passed"] and rep["failing"] == []
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["config"]["kind"] == "validate-scheme"
    assert (tmp_path / "a" / "error_table.csv").exists()
    assert "validate-scheme: PASS" in capsys.readouterr().out


def test_failing_tolerance_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_VALIDATE.format(order=5.0))
    assert main(["run", cfg, "--out", str(tmp_path / "bad")]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert "BAD measured_order" in out
    rep = json.loads((tmp_path / "bad" / "report.json").read_text())
    assert rep["failing"] == ["measured_order"]


def test_report_command(tmp_path, capsys):
    assert main(["report", str(tmp_path)]) == EXIT_CONFIG
    good = write(tmp_path, SMALL_VALIDATE.format(order=0.8), "good.toml")
    bad = write(tmp_path, SMALL_VALIDATE.format(order=5.0), "bad.toml")
    main(["run", good, "--out", str(tmp_path / "runs" / "good")])
    assert main(["report", str(tmp_path / "runs")]) == EXIT_OK
    main(["run", bad, "--out", str(tmp_path / "runs" / "bad")])
    capsys.readouterr()
    assert main(["report", str(tmp_path / "runs")]) == EXIT_FAIL
    assert "measured_order" in capsys.readouterr().out
    with open(tmp_path / "runs" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["run"] for r in rows] == ["bad", "good"]


@pytest.mark.parametrize("kind", ["backward", "bump", "psi"])
def test_barriers_command(tmp_path, kind):
    out = tmp_path / f"{kind}.csv"
    assert main(["barriers", "--kind", kind, "--points", "21",
                 "--out", str(out)]) == EXIT_OK
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "x", "value", "residual"]
    assert len(rows) == (21 if kind == "psi" else 84)
    if kind != "psi":
        scale = max(abs(float(r["value"])) for r in rows)
        assert max(abs(float(r["residual"])) for r in rows) < 1e-10 * (
            1 + scale)


def test_giant_command(tmp_path, capsys):
    out = tmp_path / "giant"
    code = main(["giant", "--domain", "interval:-1,1", "--h", "0.01",
                 "--seed", "centered-bump", "--seed", "off-center-bump",
                 "--out", str(out)])
    assert code == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["kind"] == "giant" and rep["passed"]
    assert main(["giant", "--domain", "annulus:1", "--out",
                 str(tmp_path / "x")]) == EXIT_CONFIG
