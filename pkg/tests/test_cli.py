import csv
import json
from importlib import resources

import numpy as np
import pytest

from wk import cli
from wk import suites
from wk.errors import ConfigError
from wk.geometry import PointGeometry


def config_path(name):
    return str(resources.files("wk").joinpath(f"configs/{name}.json"))


def run(argv):
    return cli.main(argv)


def test_shipped_configs_schema_roundtrip():
    for name in ("minkowski_geodesic", "riewe_helix", "schwarzschild_spin"):
        with open(config_path(name)) as fh:
            doc = json.load(fh)
        cli.validate_config(doc)
        again = json.loads(json.dumps(doc))
        cli.validate_config(again)
        assert again == doc


def test_schema_rejects_unknown_keys():
    with open(config_path("minkowski_geodesic")) as fh:
        doc = json.load(fh)
    doc["surprise"] = 1
    with pytest.raises(ConfigError):
        cli.validate_config(doc)


def test_integrate_geodesic(tmp_path):
    out = tmp_path / "geo"
    assert run(["integrate", "-c", config_path("minkowski_geodesic"),
                "-o", str(out), "--emit-plot-data"]) == 0
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1001
    assert all(float(r["E_residual"]) <= 1e-12 for r in rows)
    last = rows[-1]
    assert float(last["x0"]) == pytest.approx(10.0)
    assert float(last["x1"]) == pytest.approx(0.0, abs=1e-12)
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["truncated"] is False
    plot = np.loadtxt(out / "plot.dat")
    assert plot.shape == (1001, 5)  # s, three spatial coords, k2


def test_integrate_json_lines(tmp_path):
    out = tmp_path / "geoj"
    assert run(["integrate", "-c", config_path("minkowski_geodesic"),
                "-o", str(out), "--format", "json"]) == 0
    lines = (out / "trajectory.jsonl").read_text().splitlines()
    assert len(lines) == 1001
    rec = json.loads(lines[0])
    assert rec["gamma"] == pytest.approx(1.0)
    assert "S_01" in rec


def test_integrate_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    with open(config_path("minkowski_geodesic")) as fh:
        doc = json.load(fh)
    doc["integrator"]["step"] = -0.5
    bad.write_text(json.dumps(doc))
    assert run(["integrate", "-c", str(bad), "-o", str(tmp_path / "o")]) == 1


def test_integrate_truncation_exit_code(tmp_path):
    # a Lagrangian far off the helix constraint surface destabilizes the
    # gauge with projection off, which must truncate with partial output
    with open(config_path("riewe_helix")) as fh:
        doc = json.load(fh)
    doc["lagrangian"]["A"] = 40.0
    doc["integrator"].update(step=0.05, horizon=50.0,
                             gauge_projection=False, drift_abort=1e-8)
    cfg = tmp_path / "unstable.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "unstable"
    assert run(["integrate", "-c", str(cfg), "-o", str(out)]) == 2
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["truncated"] is True
    assert (out / "trajectory.csv").exists()


def _sweep_doc():
    with open(config_path("riewe_helix")) as fh:
        doc = json.load(fh)
    doc["integrator"].update(step=0.005, horizon=1.0)
    doc["sweep"] = {"parameter": "lagrangian.A",
                    "start": -22.0, "stop": -18.0, "count": 4}
    return doc


def test_sweep_parallel_determinism(tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps(_sweep_doc()))
    out1, out4 = tmp_path / "s1", tmp_path / "s4"
    assert run(["sweep", "-c", str(cfg), "-o", str(out1), "--jobs", "1"]) == 0
    assert run(["sweep", "-c", str(cfg), "-o", str(out4), "--jobs", "4"]) == 0
    assert (out1 / "sweep.csv").read_bytes() == (out4 / "sweep.csv").read_bytes()


def test_single_point_sweep_matches_integrate(tmp_path):
    doc = _sweep_doc()
    doc["sweep"].update(start=-20.0, stop=-20.0, count=1)
    cfg = tmp_path / "one.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "one"
    assert run(["sweep", "-c", str(cfg), "-o", str(out)]) == 0
    with open(out / "sweep.csv") as fh:
        row = list(csv.DictReader(fh))[0]
    assert row["status"] == "ok"

    base = {k: v for k, v in doc.items() if k != "sweep"}
    icfg = tmp_path / "int.json"
    icfg.write_text(json.dumps(base))
    iout = tmp_path / "int"
    assert run(["integrate", "-c", str(icfg), "-o", str(iout)]) == 0
    diag = json.loads((iout / "diagnostics.json").read_text())
    assert float(row["k2_final"]) == pytest.approx(diag["k2_final"], abs=1e-15)
    assert float(row["k2_drift"]) == pytest.approx(diag["k2_drift"], abs=1e-15)


def test_sweep_bad_parameter_path(tmp_path):
    doc = _sweep_doc()
    doc["sweep"]["parameter"] = "lagrangian.nope"
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(doc))
    assert run(["sweep", "-c", str(cfg), "-o", str(tmp_path / "o")]) == 1


def test_catalog(capsys):
    assert run(["catalog"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert {"minkowski", "schwarzschild", "desitter"} == {
        c["metric"] for c in doc["charts"]}
    assert "riewe_helix.json" in doc["scenarios"]
    assert set(doc["suites"]) == set(suites.SUITES)


def test_verify_riewe_passes(capsys):
    assert run(["verify", "riewe"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    reports = [json.loads(ln) for ln in lines]
    assert all(r["pass"] for r in reports)
    assert any("helix" in r["check_name"] for r in reports)


def test_verify_detects_flipped_curvature(monkeypatch):
    # mutation check: negating the curvature tensor must fail the dixon suite
    orig = PointGeometry.riemann.fget

    def flipped(self):
        return -orig(self)

    monkeypatch.setattr(PointGeometry, "riemann", property(flipped))
    assert run(["verify", "dixon"]) == 3
