"""Command-line front end: solves, accuracy and multigrid studies, DDM comparison.

Outputs are flat CSV tables and JSON reports.  Numbers in CSV use scientific
notation with six significant digits, so identical runs give identical files.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .ddm import ddm_iterate
from .expr import ExpressionError
from .grid import GridError, InteriorField, ProblemData, TwoSidedField
from .manufactured import (
    PRESET_SOURCES,
    ExampleSpec,
    convergence_orders,
    discrete_derivative,
    error_norms,
    example_from_strings,
    jump_study,
    problem_for,
)
from .multigrid import (
    ConvergenceFailure,
    MgParams,
    build_hierarchy,
    estimate_convergence_factor,
    solve_multigrid,
)
from .relaxation import iterate_to_tolerance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3

DEFAULTS = {
    "example": None,
    "alpha": None,
    "uL": None,
    "uR": None,
    "gammaL": None,
    "gammaR": None,
    "n": None,
    "nc": None,
    "p": "0,1,2,3,4,5",
    "nu1": 1,
    "nu2": 1,
    "cycle": "v",
    "omega1": 0.5,
    "tol": 1e-6,
    "max_cycles": 100,
    "max_sweeps": 1_000_000,
    "seed": 0,
    "jobs": 1,
    "out": None,
    "format": None,
    "timing": False,
}

# per-command defaults for the grid lists
N_DEFAULTS = {
    "solve": "64",
    "convergence": "64,128,256,512,1024",
    "mg-factor": "32,64,128,256,512,1024,2048,4096",
    "jump": "128",
    "ddm": "64",
}
NC_DEFAULTS = {
    "solve": "16",
    "convergence": "16",
    "mg-factor": "16,32,64,128",
    "jump": "16",
    "ddm": "16",
}


class ConfigError(ValueError):
    pass


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.5e}"


def _int_list(text: str, what: str) -> list[int]:
    try:
        vals = [int(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--{what} expects a comma-separated list of integers, got {text!r}")
    if not vals:
        raise ConfigError(f"--{what} is empty")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("problem")
    g.add_argument("--example", choices=sorted(PRESET_SOURCES), help="preset problem")
    g.add_argument("--alpha", type=float, help="interface position in (0, 1)")
    g.add_argument("--uL", help="exact solution left of the interface")
    g.add_argument("--uR", help="exact solution right of the interface")
    g.add_argument("--gammaL", help="coefficient left of the interface")
    g.add_argument("--gammaR", help="coefficient right of the interface")
    s = common.add_argument_group("solver")
    s.add_argument("--n", help="finest interval counts N+1, comma separated")
    s.add_argument("--nc", help="coarsest interval count(s) Nc+1")
    s.add_argument("--nu1", type=int, help="pre-smoothing sweeps (default 1)")
    s.add_argument("--nu2", type=int, help="post-smoothing sweeps (default 1)")
    s.add_argument("--cycle", choices=["v", "w", "tgcs"], help="cycle type (default v)")
    s.add_argument("--omega1", type=float, help="left reduced restriction weight (default 0.5)")
    s.add_argument("--tol", type=float, help="relative successive-change tolerance")
    s.add_argument("--max-cycles", type=int, dest="max_cycles")
    s.add_argument("--max-sweeps", type=int, dest="max_sweeps",
                   help="sweep cap for plain Gauss-Seidel in compare ddm")
    s.add_argument("--seed", type=int, help="seed of the random initial guess for rho")
    s.add_argument("--jobs", type=int, help="worker processes for study tables")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="output path stem; writes STEM.csv and/or STEM.json")
    o.add_argument("--format", choices=["csv", "json", "both"])
    o.add_argument("--timing", action="store_true", default=None,
                   help="add wall time to JSON reports (makes output run-dependent)")
    o.add_argument("--config", help="JSON file of option values; flags override it")

    parser = argparse.ArgumentParser(prog="ghostfluid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="multigrid solve of one problem")
    study = sub.add_parser("study", help="accuracy and convergence-factor tables")
    ssub = study.add_subparsers(dest="study", required=True)
    ssub.add_parser("convergence", parents=[common], help="errors and orders over N+1")
    ssub.add_parser("mg-factor", parents=[common], help="rho over N+1 and Nc+1")
    jp = ssub.add_parser("jump", parents=[common], help="rho for gamma^L = 10^p")
    jp.add_argument("--p", help="exponents, comma separated (default 0..5)")
    cmp_ = sub.add_parser("compare", help="compare iterative methods")
    csub = cmp_.add_subparsers(dest="compare", required=True)
    csub.add_parser("ddm", parents=[common], help="multigrid vs Gauss-Seidel vs DDM")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Built-in defaults, then the JSON file, then explicit flags."""
    cfg = dict(DEFAULTS)
    key = args.study if args.command == "study" else (
        args.compare if args.command == "compare" else args.command
    )
    cfg["n"] = N_DEFAULTS[key]
    cfg["nc"] = NC_DEFAULTS[key]
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update({k: (",".join(map(str, v)) if isinstance(v, list) else v)
                    for k, v in data.items()})
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    cfg["task"] = key
    return cfg


def resolve_example(cfg: dict) -> ExampleSpec:
    fields = ("alpha", "uL", "uR", "gammaL", "gammaR")
    if cfg["example"] is not None:
        if cfg["example"] not in PRESET_SOURCES:
            raise ConfigError(
                f"unknown example {cfg['example']!r}; choose from {sorted(PRESET_SOURCES)}"
            )
        base = dict(zip(fields, PRESET_SOURCES[cfg["example"]]))
    else:
        base = {}
    for f in fields:
        if cfg[f] is not None:
            base[f] = cfg[f]
    missing = [f for f in fields if f not in base]
    if missing:
        raise ConfigError(
            "give --example or all of --alpha/--uL/--uR/--gammaL/--gammaR "
            f"(missing: {', '.join(missing)})"
        )
    try:
        alpha = float(base["alpha"])
    except (TypeError, ValueError):
        raise ConfigError(f"alpha must be a number, got {base['alpha']!r}")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    try:
        return example_from_strings(
            "custom", alpha, str(base["uL"]), str(base["uR"]),
            str(base["gammaL"]), str(base["gammaR"]),
        )
    except (ExpressionError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad expression: {exc}")


def problem_json(spec: ExampleSpec) -> dict:
    uL, uR, gL, gR = spec.sources
    return {"alpha": spec.alpha, "uL": uL, "uR": uR, "gammaL": gL, "gammaR": gR}


def mg_params(cfg: dict, nc: int, **over) -> MgParams:
    kw = dict(
        nu1=cfg["nu1"], nu2=cfg["nu2"], cycle=cfg["cycle"], omega1=cfg["omega1"],
        coarsest_intervals=nc, tol=cfg["tol"], max_cycles=cfg["max_cycles"],
    )
    kw.update(over)
    try:
        return MgParams(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc))


def solver_json(cfg: dict) -> dict:
    return {k: cfg[k] for k in ("nu1", "nu2", "cycle", "omega1", "tol", "max_cycles", "seed")}


def _problem(spec: ExampleSpec, n: int):
    try:
        return problem_for(spec, n)
    except (GridError, ValueError) as exc:
        raise ConfigError(f"N+1={n}: {exc}")


def _check_hierarchy(p: ProblemData, mgp: MgParams) -> None:
    try:
        build_hierarchy(p, mgp)
    except (GridError, ValueError) as exc:
        raise ConfigError(str(exc))


def _single(values: list[int], what: str) -> int:
    if len(values) != 1:
        raise ConfigError(f"--{what} takes a single value for this command")
    return values[0]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _floats(xs) -> list:
    return [float(x) for x in xs]


def cmd_solve(cfg: dict):
    spec = resolve_example(cfg)
    n = _single(_int_list(cfg["n"], "n"), "n")
    nc = _single(_int_list(cfg["nc"], "nc"), "nc")
    p, exact = _problem(spec, n)
    mgp = mg_params(cfg, nc)
    _check_hierarchy(p, mgp)
    t0 = time.perf_counter()
    u, rep = solve_multigrid(p, mgp)
    wall = time.perf_counter() - t0
    eu, edu = error_norms(u, exact)
    du = discrete_derivative(u)
    grid = p.grid
    rows = []
    index = 0
    for side, nodes, uu, ue, d, de in (
        ("L", grid.left_nodes, u.left, exact.u.left, du.left, exact.du.left),
        ("R", grid.right_nodes, u.right, exact.u.right, du.right, exact.du.right),
    ):
        ghost_node = grid.J + 1 if side == "L" else grid.J
        for k, j in enumerate(nodes):
            rows.append([index, grid.x(int(j)), side, uu[k], ue[k], d[k], de[k], bool(j == ghost_node)])
            index += 1
    table = _csv_text(["index", "x", "side", "u", "u_exact", "du", "du_exact", "ghost"], rows)
    report = {
        "command": "solve",
        "problem": problem_json(spec),
        "intervals": n,
        "coarsest_intervals": nc,
        "solver": solver_json(cfg),
        "converged": rep.converged,
        "cycles": rep.cycles_run,
        "error_u": eu,
        "error_du": edu,
        "residual_history": _floats(rep.residual_history),
        "rho_history": _floats(rep.rho_history),
        "change_history": _floats(rep.change_history),
    }
    if cfg["timing"]:
        report["wall_time_s"] = wall
    status = EXIT_OK if rep.converged else EXIT_NONCONVERGENCE
    msg = None if rep.converged else (
        f"multigrid did not reach tol={cfg['tol']:g} in {cfg['max_cycles']} cycles"
    )
    return table, report, status, msg


def cmd_study_convergence(cfg: dict):
    spec = resolve_example(cfg)
    ns = _int_list(cfg["n"], "n")
    nc = _single(_int_list(cfg["nc"], "nc"), "nc")
    if len(ns) < 2 or any(b != 2 * a for a, b in zip(ns, ns[1:])):
        raise ConfigError("--n must be a doubling sequence of at least two values")
    results = []
    failed = []
    for n in ns:
        p, exact = _problem(spec, n)
        mgp = mg_params(cfg, min(nc, n // 2))
        _check_hierarchy(p, mgp)
        u, rep = solve_multigrid(p, mgp)
        if not rep.converged:
            failed.append(n)
        eu, edu = error_norms(u, exact)
        results.append((n, eu, edu, rep))
    orders_u, slope_u = convergence_orders([(n, eu) for n, eu, _, _ in results])
    orders_du, slope_du = convergence_orders([(n, edu) for n, _, edu, _ in results])
    rows = []
    for i, (n, eu, edu, _) in enumerate(results):
        rows.append([n, eu, orders_u[i - 1] if i else None, edu, orders_du[i - 1] if i else None])
    table = _csv_text(["N+1", "eu", "order_u", "edu", "order_du"], rows)
    report = {
        "command": "study convergence",
        "problem": problem_json(spec),
        "solver": solver_json(cfg),
        "rows": [
            {"intervals": n, "error_u": eu, "error_du": edu, "cycles": rep.cycles_run,
             "converged": rep.converged, "change_history": _floats(rep.change_history)}
            for n, eu, edu, rep in results
        ],
        "orders_u": orders_u,
        "orders_du": orders_du,
        "slope_u": slope_u,
        "slope_du": slope_du,
    }
    if failed:
        return table, report, EXIT_NONCONVERGENCE, f"no convergence at N+1 = {failed}"
    return table, report, EXIT_OK, None


def _rho_cell(args):
    spec, n, nc, cfg = args
    p, _ = problem_for(spec, n)
    ph = ProblemData(p.gamma, InteriorField(p.grid))
    mgp = MgParams(nu1=cfg["nu1"], nu2=cfg["nu2"], cycle=cfg["cycle"], omega1=cfg["omega1"],
                   coarsest_intervals=nc, max_cycles=max(cfg["max_cycles"], 300))
    try:
        rho, rep = estimate_convergence_factor(ph, mgp=mgp, seed=cfg["seed"])
        ok = True
    except ConvergenceFailure as exc:
        rho, rep, ok = float("nan"), exc.report, False
    return {
        "intervals": n, "coarsest_intervals": nc, "rho": rho, "settled": ok,
        "cycles": rep.cycles_run,
        "residual_history": _floats(rep.residual_history),
        "rho_history": _floats(rep.rho_history),
    }


def _run_cells(cells, jobs: int):
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_rho_cell, cells))
    return [_rho_cell(c) for c in cells]


def _valid_combo(spec: ExampleSpec, n: int, nc: int, cfg: dict) -> bool:
    if nc >= n and not (cfg["cycle"] == "tgcs"):
        return False
    try:
        p, _ = problem_for(spec, n)
        build_hierarchy(p, mg_params(cfg, nc))
    except (GridError, ValueError, ConfigError):
        return False
    return True


def cmd_study_mgfactor(cfg: dict):
    spec = resolve_example(cfg)
    ns = _int_list(cfg["n"], "n")
    ncs = _int_list(cfg["nc"], "nc")
    mg_params(cfg, 16)  # validate the shared solver flags early
    combos = [(n, nc) for nc in ncs for n in ns if _valid_combo(spec, n, nc, cfg)]
    if not combos:
        raise ConfigError("no valid (N+1, Nc+1) combination")
    cells = _run_cells([(spec, n, nc, cfg) for n, nc in combos], cfg["jobs"])
    by = {(c["intervals"], c["coarsest_intervals"]): c for c in cells}
    rows = [[nc] + [by[(n, nc)]["rho"] if (n, nc) in by else None for n in ns] for nc in ncs]
    table = _csv_text(["Nc+1\\N+1"] + [str(n) for n in ns], rows)
    report = {
        "command": "study mg-factor",
        "problem": problem_json(spec),
        "solver": solver_json(cfg),
        "cells": cells,
    }
    unsettled = [(c["intervals"], c["coarsest_intervals"]) for c in cells if not c["settled"]]
    if unsettled:
        return table, report, EXIT_NONCONVERGENCE, f"rho did not settle for {unsettled}"
    return table, report, EXIT_OK, None


def cmd_study_jump(cfg: dict):
    ps = _int_list(cfg["p"], "p")
    if any(v < 0 for v in ps):
        raise ConfigError("--p values must be non-negative")
    n = _single(_int_list(cfg["n"], "n"), "n")
    nc = _single(_int_list(cfg["nc"], "nc"), "nc")
    specs = [jump_study(v) for v in ps]
    for s in specs:
        p, _ = _problem(s, n)
        _check_hierarchy(p, mg_params(cfg, nc))
    cells = _run_cells([(s, n, nc, cfg) for s in specs], cfg["jobs"])
    rhos = [c["rho"] for c in cells]
    table = _csv_text(["p", "rho"], [[v, r] for v, r in zip(ps, rhos)])
    finite = [r for r in rhos if not math.isnan(r)]
    report = {
        "command": "study jump",
        "alpha": specs[0].alpha,
        "intervals": n,
        "coarsest_intervals": nc,
        "solver": solver_json(cfg),
        "cells": [dict(c, p=v, gammaL=s.sources[2], gammaR=s.sources[3])
                  for c, v, s in zip(cells, ps, specs)],
        "rho_min": min(finite) if finite else None,
        "rho_max": max(finite) if finite else None,
        "spread": (max(finite) - min(finite)) if finite else None,
    }
    if len(finite) < len(rhos):
        return table, report, EXIT_NONCONVERGENCE, "rho did not settle for every p"
    return table, report, EXIT_OK, None


def cmd_compare_ddm(cfg: dict):
    spec = resolve_example(cfg)
    n = _single(_int_list(cfg["n"], "n"), "n")
    nc = _single(_int_list(cfg["nc"], "nc"), "nc")
    p, exact = _problem(spec, n)
    mgp = mg_params(cfg, nc)
    _check_hierarchy(p, mgp)
    tol = cfg["tol"]
    rows, details = [], {}

    u, rep = solve_multigrid(p, mgp)
    eu, edu = error_norms(u, exact)
    rows.append(["multigrid", rep.converged, False, rep.cycles_run, eu, edu])
    details["multigrid"] = {"change_history": _floats(rep.change_history),
                            "residual_history": _floats(rep.residual_history)}

    gs = iterate_to_tolerance(p, TwoSidedField(p.grid), tol, cfg["max_sweeps"])
    eu, edu = error_norms(gs.u, exact)
    rows.append(["gauss_seidel", gs.converged, False, len(gs.history), eu, edu])
    details["gauss_seidel"] = {"sweeps": len(gs.history), "final_change": gs.history[-1]}

    dd = ddm_iterate(p, tol, max_iters=cfg["max_cycles"])
    if np.all(np.isfinite(dd.u.flat())):
        eu, edu = error_norms(dd.u, exact)
    else:
        eu = edu = float("nan")
    rows.append(["ddm", dd.converged, dd.diverged, dd.state.iterations, eu, edu])
    details["ddm"] = {"change_history": _floats(dd.state.change_history),
                      "trace_history": _floats(dd.state.trace_history),
                      "contraction": dd.contraction()}

    table = _csv_text(["method", "converged", "diverged", "iterations", "eu", "edu"], rows)
    report = {
        "command": "compare ddm",
        "problem": problem_json(spec),
        "intervals": n,
        "tol": tol,
        "solver": solver_json(cfg),
        "methods": details,
    }
    return table, report, EXIT_OK, None


COMMANDS = {
    "solve": cmd_solve,
    "convergence": cmd_study_convergence,
    "mg-factor": cmd_study_mgfactor,
    "jump": cmd_study_jump,
    "ddm": cmd_compare_ddm,
}


def emit(cfg: dict, table: str, report: dict, stdout) -> None:
    form = cfg["format"] or ("both" if cfg["out"] else "csv")
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if cfg["out"]:
        stem = Path(cfg["out"])
        stem.parent.mkdir(parents=True, exist_ok=True)
        if form in ("csv", "both"):
            stem.with_name(stem.name + ".csv").write_text(table)
        if form in ("json", "both"):
            stem.with_name(stem.name + ".json").write_text(text)
    else:
        if form in ("csv", "both"):
            stdout.write(table)
        if form in ("json", "both"):
            stdout.write(text)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        for k in ("nu1", "nu2", "max_cycles", "max_sweeps", "seed", "jobs"):
            cfg[k] = int(cfg[k])
        cfg["omega1"] = float(cfg["omega1"])
        cfg["tol"] = float(cfg["tol"])
        cfg["timing"] = bool(cfg["timing"])
        if cfg["jobs"] < 1 or cfg["max_sweeps"] < 1:
            raise ConfigError("--jobs and --max-sweeps must be positive")
        table, report, status, msg = COMMANDS[cfg["task"]](cfg)
    except ConfigError as exc:
        stderr.write(f"ghostfluid: error: {exc}\n")
        return EXIT_CONFIG
    except (TypeError, ValueError) as exc:
        stderr.write(f"ghostfluid: error: invalid configuration: {exc}\n")
        return EXIT_CONFIG
    emit(cfg, table, report, stdout)
    if msg:
        stderr.write(f"ghostfluid: {msg}\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
