"""Run a scenario through the pipeline and write CSV, JSON and PNG outputs."""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .action import action_jet, make_action
from .dirac import solve_spinor_pair
from .dynamics import (
    conjugate_momentum,
    integrate_trajectory,
    limit_report,
    momentum_identity_error,
    velocity,
)
from .errors import QHJError, ScenarioError, ValidationError
from .qshje import f_from_action, f_from_energy, qshje_residual
from .scenario import sweep_documents

log = logging.getLogger(__name__)

COMMANDS = ("solve", "verify", "momentum", "trajectory", "limits", "sweep")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

SCHEMAS = {
    "solve": ("x", "theta1", "chi1", "theta2", "chi2", "cross_current"),
    "verify": ("x", "S_prime", "schwarzian", "curvature", "mass_shell", "residual_raw", "residual_norm"),
    "f_routes": ("x", "f_action", "f_energy", "rel_diff"),
    "trajectory": ("t", "x", "xdot", "conservation_residual", "event"),
    "momentum": ("x", "rhs_eq20", "rhs_eq21", "product_check"),
    "limits": ("x", "f_minus_1", "eq8_deviation", "T_over_mc2"),
    "sweep": ("id", "value", "status", "max_residual_norm", "max_f_route_rel_diff", "max_branch_gap",
              "max_cross_current_drift", "error"),
}


def _fmt(v):
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path, columns, table):
    rows = zip(*(table[c] for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_summary(path, summary):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_json_safe(summary), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _pointwise(fn, x, n_out):
    """Vectorized evaluation of ``fn`` with a per-point fallback (nan on failure)."""
    try:
        out = fn(x)
        return [np.asarray(o, dtype=float) for o in out], []
    except QHJError:
        pass
    cols, errors = [np.full(x.size, np.nan) for _ in range(n_out)], []
    for i, xi in enumerate(x):
        try:
            vals = [float(o) for o in fn(xi)]
        except QHJError as exc:
            errors.append(exc.diagnostic())
            continue
        for c, v in zip(cols, vals):
            c[i] = v
    return cols, errors


def _nanmax(a):
    a = np.asarray(a, dtype=float)
    return float(np.nanmax(a)) if np.any(np.isfinite(a)) else float("nan")


def solve_pair(s):
    init1, init2 = s.initial_states
    return solve_spinor_pair(s.setup, s.potential, s.domain, init1, init2, x0=s.x0, tol=s.tolerances.solver)


def build_action(s, pair, branch=None):
    branch = branch or s.branch
    return make_action(pair, branch, s.constants[branch])


# --- commands ---------------------------------------------------------------

def _cmd_solve(s, out, files):
    pair = solve_pair(s)
    x = s.grid()
    t1, c1, t2, c2 = pair.state(x)
    table = {"x": x, "theta1": t1, "chi1": c1, "theta2": t2, "chi2": c2, "cross_current": t1 * c2 - t2 * c1}
    files.append(("spinor.csv", "solve", table))
    metrics = {"cross_current_x0": pair.cross_current0, "max_cross_current_drift": pair.max_cross_current_drift(),
               "solver_nodes": int(pair.nodes.size)}
    plots = [("spinor.png", "plot_spinors", (dict(table, x0=s.x0),))]
    return metrics, [], plots


def verify_tables(s, pair, action):
    x = s.grid()
    m = s.setup.rest_mass

    def residual(xx):
        rep = qshje_residual(action, xx)
        s_prime = action_jet(action, xx).d1
        return s_prime, rep.schwarzian, rep.curvature, rep.mass_shell, rep.raw, rep.normalized

    cols, errors = _pointwise(residual, x, 6)
    table = dict(zip(SCHEMAS["verify"], [x, *cols]))
    # kinetic term is S_prime**2 / (2 m0); the remaining columns are additive terms
    table["kinetic"] = np.asarray(cols[0]) ** 2 / (2.0 * m)

    def routes(xx):
        fa = f_from_action(action, xx)
        fe = f_from_energy(action, xx)
        return fa, fe, np.abs(np.asarray(fa) - fe) / np.abs(fa)

    fcols, ferrors = _pointwise(routes, x, 3)
    f_table = dict(zip(SCHEMAS["f_routes"], [x, *fcols]))
    return table, f_table, errors + ferrors


def _cmd_verify(s, out, files):
    pair = solve_pair(s)
    action = build_action(s, pair)
    table, f_table, errors = verify_tables(s, pair, action)
    files.append(("residuals.csv", "verify", table))
    files.append(("f_routes.csv", "f_routes", f_table))
    metrics = {
        "max_residual_norm": _nanmax(table["residual_norm"]),
        "max_f_route_rel_diff": _nanmax(f_table["rel_diff"]),
        "max_cross_current_drift": pair.max_cross_current_drift(),
        "failed_points": len(errors),
    }
    return metrics, errors[:20], [("residuals.png", "plot_residuals", (table, f_table))]


def momentum_table(s, pair, action):
    x = s.grid()
    setup, pot = s.setup, s.potential

    def one(sigma):
        return lambda xx: (conjugate_momentum(setup, pot, xx, sigma),)

    (rhs_plus,), e1 = _pointwise(one(1), x, 1)
    (rhs_minus,), e2 = _pointwise(one(-1), x, 1)

    def product(xx):
        out = []
        for xi in np.atleast_1d(xx):
            d1 = float(action_jet(action, xi).d1)
            out.append(velocity(action, xi, direction=math.copysign(1.0, d1)) * d1)
        return (np.array(out) if np.ndim(xx) else out[0],)

    (prod,), e3 = _pointwise(product, x, 1)
    table = {"x": x, "rhs_eq20": rhs_plus, "rhs_eq21": rhs_minus, "product_check": prod}
    return table, e1 + e2 + e3


def _cmd_momentum(s, out, files):
    pair = solve_pair(s)
    action = build_action(s, pair)
    table, errors = momentum_table(s, pair, action)
    files.append(("momentum.csv", "momentum", table))
    own = table["rhs_eq20"] if action.sigma == 1 else table["rhs_eq21"]
    with np.errstate(all="ignore"):
        product_err = np.abs(table["product_check"] - own) / np.abs(own)
    metrics = {
        "max_branch_gap": _nanmax(np.abs(table["rhs_eq20"] - table["rhs_eq21"])),
        "max_product_rel_error": _nanmax(product_err),
        "failed_points": len(errors),
    }
    return metrics, errors[:20], [("momentum.png", "plot_momentum", (table,))]


def _cmd_trajectory(s, out, files):
    pair = solve_pair(s)
    action = build_action(s, pair)
    spec = s.trajectory
    traj = integrate_trajectory(action, spec.x0, spec.t_span, direction=spec.direction,
                                tol=s.tolerances.trajectory, on_turning=spec.on_turning)
    table = {"t": traj.t, "x": traj.x, "xdot": traj.xdot, "conservation_residual": traj.conservation,
             "event": traj.event}
    files.append(("trajectory.csv", "trajectory", table))
    metrics = {
        "samples": int(traj.t.size),
        "max_conservation_norm": traj.max_conservation_error(),
        "max_momentum_identity_error": momentum_identity_error(action, traj),
        "events": traj.events,
    }
    return metrics, [], [("trajectory.png", "plot_trajectory", (table, traj.events))]


def _cmd_limits(s, out, files):
    pair = solve_pair(s)
    action = build_action(s, pair)
    rep = limit_report(action, s.grid(), classical_surrogate=s.classical_surrogate,
                       tolerance=s.tolerances.limits)
    table = {"x": rep.x, "f_minus_1": rep.f_minus_1, "eq8_deviation": rep.momentum_deviation,
             "T_over_mc2": rep.t_over_mc2}
    files.append(("limits.csv", "limits", table))
    metrics = {
        "regime": rep.regime.tag,
        "kinetic_energy_at_x0": rep.regime.kinetic_energy,
        "claims": rep.claims,
        "tolerance": rep.tolerance,
        "max_f_minus_1": _nanmax(rep.f_minus_1),
        "max_momentum_deviation": _nanmax(rep.momentum_deviation),
        "failed_points": len(rep.errors),
    }
    return metrics, rep.errors[:20], [("limits.png", "plot_limits", (table,))]


def sweep_point(item):
    """Metrics for one sweep entry; never raises on numerical failure."""
    sid, value, s = item
    row = {"id": sid, "value": str(value), "status": "ok", "error": ""}
    try:
        pair = solve_pair(s)
        action = build_action(s, pair)
        table, f_table, _ = verify_tables(s, pair, action)
        mom, _ = momentum_table(s, pair, action)
        row.update(
            max_residual_norm=_nanmax(table["residual_norm"]),
            max_f_route_rel_diff=_nanmax(f_table["rel_diff"]),
            max_branch_gap=_nanmax(np.abs(mom["rhs_eq20"] - mom["rhs_eq21"])),
            max_cross_current_drift=pair.max_cross_current_drift(),
        )
    except QHJError as exc:
        row.update(status="failed", error=exc.diagnostic(), max_residual_norm=float("nan"),
                   max_f_route_rel_diff=float("nan"), max_branch_gap=float("nan"),
                   max_cross_current_drift=float("nan"))
    return row


def _cmd_sweep(s, out, files, jobs=1):
    if s.sweep is None:
        raise ScenarioError("sweep command requires a 'sweep' section", field="sweep")
    try:
        items = sweep_documents(s)
    except ValidationError as exc:
        raise ScenarioError(f"sweep: {exc}", field=exc.field) from None
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sweep_point, items))
    else:
        rows = [sweep_point(it) for it in items]
    rows.sort(key=lambda r: r["id"])
    table = {c: [r[c] for r in rows] for c in SCHEMAS["sweep"]}
    files.append(("sweep.csv", "sweep", table))
    metrics = {
        "points": len(rows),
        "failed": sum(r["status"] != "ok" for r in rows),
        "parameter": s.sweep.parameter,
    }
    return metrics, [], [("sweep.png", "plot_sweep", (rows, s.sweep.parameter))]


_HANDLERS = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "momentum": _cmd_momentum,
    "trajectory": _cmd_trajectory,
    "limits": _cmd_limits,
}


def run_scenario(s, command, out_dir, jobs=1, figures=None):
    """Execute ``command`` on scenario ``s`` writing into ``out_dir``.

    Returns the process exit status: 0 success, 1 invalid input, 2 numerical
    failure (diagnostic recorded in ``summary.json``).
    """
    if command not in COMMANDS:
        raise ScenarioError(f"unknown command {command!r}", field="command")
    figures = s.figures if figures is None else figures
    os.makedirs(out_dir, exist_ok=True)
    files = []
    summary = {
        "command": command,
        "scenario": s.name,
        "scenario_sha256": s.digest,
        "branch": s.branch,
    }
    try:
        if command == "sweep":
            metrics, errors, plots = _cmd_sweep(s, out_dir, files, jobs=jobs)
        else:
            metrics, errors, plots = _HANDLERS[command](s, out_dir, files)
    except ScenarioError as exc:
        log.error(exc.diagnostic())
        return EXIT_INVALID
    except QHJError as exc:
        log.error(exc.diagnostic())
        summary.update(status="failed", error={
            "module": exc.module, "type": type(exc).__name__, "x": exc.x, "message": str(exc),
        })
        write_summary(os.path.join(out_dir, "summary.json"), summary)
        return EXIT_NUMERICAL

    written = []
    for name, schema, table in files:
        write_csv(os.path.join(out_dir, name), SCHEMAS[schema], table)
        written.append(name)
    if figures:
        from . import plotting

        for name, fn, args in plots:
            getattr(plotting, fn)(*args, os.path.join(out_dir, name))
            written.append(name)
    summary.update(status="ok", metrics=metrics, point_errors=errors,
                   events=metrics.pop("events", []) if isinstance(metrics, dict) else [],
                   files=written + ["summary.json"])
    write_summary(os.path.join(out_dir, "summary.json"), summary)
    return EXIT_OK
