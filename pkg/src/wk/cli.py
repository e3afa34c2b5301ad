"""Scenario runner: ``wk integrate|verify|sweep|catalog``.

Configs are JSON documents validated against the bundled schema; trajectory
output is CSV (or JSON lines), verification reports are JSON. Exit codes:
0 success, 1 config error, 2 truncated integration (partial output written),
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import dynamics as dyn
from . import suites as suite_mod
from . import variational as var
from .errors import ConfigError, WkError
from .geometry import SpacetimeChart

FLOAT_FMT = "%.17g"


def _schema():
    with resources.files("wk").joinpath("schema.json").open() as fh:
        return json.load(fh)


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    validate_config(doc, source=path)
    return doc


def validate_config(doc, source="<config>"):
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        field = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{source}: field '{field}': {exc.message}",
                          field=field) from exc
    dim = len(doc["initial"]["x"])
    for key in ("u", "u1", "u2"):
        if len(doc["initial"][key]) != dim:
            raise ConfigError(
                f"{source}: field 'initial/{key}': length {len(doc['initial'][key])}"
                f" does not match x (length {dim})", field=f"initial/{key}")
    return doc


def build_scenario(doc):
    """(chart, initial jet, lagrangian, integrator config) from a validated doc."""
    try:
        chart = SpacetimeChart.from_config(doc["chart"])
        L = var.InvariantLagrangian.from_config(doc["lagrangian"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ini = doc["initial"]
    jet = var.CovariantJet(np.array(ini["x"], dtype=float),
                           np.array(ini["u"], dtype=float),
                           np.array(ini["u1"], dtype=float),
                           np.array(ini["u2"], dtype=float))
    if ini.get("gauge", "natural") == "natural":
        jet = var.make_natural(chart, jet)
    cfg = dyn.IntegratorConfig(**doc.get("integrator", {}))
    return chart, jet, L, cfg


# ----------------------------------------------------------------------
# trajectory output
# ----------------------------------------------------------------------

def _spin_pairs(dim):
    return [(n, m) for n in range(dim) for m in range(n + 1, dim)]

def _row_header(dim):
    cols = ["s"]
    cols += [f"x{k}" for k in range(dim)]
    cols += [f"u{k}" for k in range(dim)]
    cols += [f"u1_{k}" for k in range(dim)]
    cols += [f"u2_{k}" for k in range(dim)]
    cols += ["gamma", "beta", "alpha", "k2", "E_residual"]
    cols += [f"P{k}" for k in range(dim)]
    cols += [f"S_{n}{m}" for n, m in _spin_pairs(dim)]
    return cols


def _row_values(smp, dim):
    jet, inv, dx = smp.jet, smp.invariants, smp.dixon
    vals = [smp.s]
    for arr in (jet.x, jet.u, jet.u1, jet.u2):
        vals += list(arr)
    vals += [inv.gamma, inv.beta, inv.alpha,
             smp.diagnostics["k2"], smp.diagnostics["E_residual"]]
    vals += list(dx.P)
    vals += [dx.S[n, m] for n, m in _spin_pairs(dim)]
    return vals


def write_trajectory_csv(traj, dim, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_row_header(dim))
        for smp in traj.samples:
            w.writerow([FLOAT_FMT % v for v in _row_values(smp, dim)])


def write_trajectory_jsonl(traj, dim, path):
    header = _row_header(dim)
    with open(path, "w") as fh:
        for smp in traj.samples:
            rec = dict(zip(header, [float(v) for v in _row_values(smp, dim)]))
            fh.write(json.dumps(rec) + "\n")


def write_plot_data(traj, dim, path):
    """Gnuplot-ready whitespace columns: s, spatial coordinates, k^2."""
    with open(path, "w") as fh:
        for smp in traj.samples:
            vals = ([smp.s] + list(smp.jet.x[1:dim])
                    + [smp.diagnostics["k2"]])
            fh.write(" ".join(FLOAT_FMT % v for v in vals) + "\n")


def _diagnostics_summary(doc, traj):
    k2 = np.array([s.diagnostics["k2"] for s in traj.samples])
    return {
        "name": doc.get("name", ""),
        "samples": len(traj.samples),
        "s_final": traj.samples[-1].s if traj.samples else 0.0,
        "truncated": bool(traj.truncated),
        "max_gamma_drift": max(s.diagnostics["gamma_drift"] for s in traj.samples),
        "max_beta_drift": max(s.diagnostics["beta_drift"] for s in traj.samples),
        "max_E_residual": max(s.diagnostics["E_residual"] for s in traj.samples),
        "k2_initial": float(k2[0]),
        "k2_final": float(k2[-1]),
        "k2_drift": float(np.max(np.abs(k2 - k2[0]))),
    }


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_integrate(args):
    try:
        doc = load_config(args.config)
        chart, jet, L, cfg = build_scenario(doc)
    except (ConfigError, WkError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)

    code = 0
    try:
        traj = dyn.integrate(chart, jet, L, cfg)
    except WkError as exc:
        traj = getattr(exc, "trajectory", None)
        if traj is None:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"truncated: {exc}", file=sys.stderr)
        code = 2

    if args.format == "json":
        write_trajectory_jsonl(traj, chart.dim, outdir / "trajectory.jsonl")
    else:
        write_trajectory_csv(traj, chart.dim, outdir / "trajectory.csv")
    if args.emit_plot_data:
        write_plot_data(traj, chart.dim, outdir / "plot.dat")
    summary = _diagnostics_summary(doc, traj)
    with open(outdir / "diagnostics.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(json.dumps(summary))
    return code


def cmd_verify(args):
    names = list(suite_mod.SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        report = suite_mod.run_suite(name)
        for check in report["checks"]:
            print(json.dumps(check))
        ok = ok and report["pass"]
    return 0 if ok else 3


def _set_by_path(doc, dotted, value):
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"sweep parameter path '{dotted}' not in config",
                              field=dotted)
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"sweep parameter path '{dotted}' not in config",
                          field=dotted)
    node[keys[-1]] = value


def _sweep_run(payload):
    """One sweep run; executed in a worker process, must stay top-level."""
    doc, dotted, value = payload
    doc = json.loads(json.dumps(doc))
    _set_by_path(doc, dotted, value)
    row = {"param": value}
    try:
        chart, jet, L, cfg = build_scenario(doc)
        traj = dyn.integrate(chart, jet, L, cfg)
        summary = _diagnostics_summary(doc, traj)
        row.update(k2_final=summary["k2_final"], k2_drift=summary["k2_drift"],
                   E_residual=summary["max_E_residual"], status="ok")
    except (WkError, ValueError) as exc:
        row.update(k2_final=float("nan"), k2_drift=float("nan"),
                   E_residual=float("nan"),
                   status=f"{type(exc).__name__}: {exc}")
    return row


def cmd_sweep(args):
    try:
        doc = load_config(args.config)
        sweep = doc.get("sweep")
        if sweep is None:
            raise ConfigError("sweep subcommand needs a 'sweep' section",
                              field="sweep")
        base = {k: v for k, v in doc.items() if k != "sweep"}
        values = np.linspace(sweep["start"], sweep["stop"], sweep["count"])
        payloads = [(base, sweep["parameter"], float(v)) for v in values]
        # validate the parameter path up front so a bad path is a config error
        probe = json.loads(json.dumps(base))
        _set_by_path(probe, sweep["parameter"], float(values[0]))
        validate_config(probe, source=args.config)
    except (ConfigError, WkError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_run, payloads))
    else:
        rows = [_sweep_run(p) for p in payloads]

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "k2_final", "k2_drift", "E_residual", "status"])
        for row in rows:
            w.writerow([FLOAT_FMT % row["param"], FLOAT_FMT % row["k2_final"],
                        FLOAT_FMT % row["k2_drift"],
                        FLOAT_FMT % row["E_residual"], row["status"]])
    for row in rows:
        print(json.dumps(row))
    return 0


def cmd_catalog(args):
    charts = [
        {"metric": "minkowski", "params": {}},
        {"metric": "schwarzschild", "params": {"M": "mass, default 1.0"}},
        {"metric": "desitter", "params": {"H": "Hubble rate, default 0.1"}},
    ]
    lagrangians = [
        {"lagrangian": "kawaguchi", "params": {"A": "constant, default 1.0"}},
        {"lagrangian": "test2", "params": {"c": "coupling, default 0.1"}},
    ]
    scenarios = sorted(
        p.name for p in resources.files("wk").joinpath("configs").iterdir()
        if p.name.endswith(".json"))
    print(json.dumps({"charts": charts, "lagrangians": lagrangians,
                      "suites": list(suite_mod.SUITES),
                      "scenarios": scenarios}, indent=2))
    return 0


def make_parser():
    ap = argparse.ArgumentParser(
        prog="wk",
        description="Extremal worldlines of a second-order arc-length functional.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="integrate one configured scenario")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--emit-plot-data", action="store_true")
    p.set_defaults(fn=cmd_integrate)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=("all",) + suite_mod.SUITES)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("catalog", help="list built-in charts and scenarios")
    p.set_defaults(fn=cmd_catalog)
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
