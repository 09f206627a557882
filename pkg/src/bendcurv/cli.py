"""Command line runner: ``bendcurv run <config.json> --out <dir>`` and
``bendcurv validate <config.json>``.

Exit codes: 0 all checks pass, 1 a tolerance check failed, 2 configuration
error, 3 computation error.  Every failure prints a JSON error object.
"""
import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .bending import experiments as ex
from .bending.flex import bricard_seed, flex_continuation, BRICARD_SEED
from .bending.flows import (TriangulatedFlow, corrugation_flow, cylinder_flow,
                            random_smooth_vertex_flow, rigid_flow)
from .curvature import (dihedral_table, discrete_first_variation, isometric_counterexample_pair,
                        sum_length_theta, write_edge_csv)
from .errors import BendcurvError, ConfigError
from .geometry import NormalField, chart_from_spec, smooth_mean_curvature_integral
from .mesh import generate_refinement, regularity_report, write_off

EXPERIMENTS = ("integral", "converge", "flex", "schlafli", "chord", "scaling", "trace",
               "counterexample")

DEFAULT_TOLERANCES = {
    "integral": [1e-8],
    "converge": [1e-2],
    "flex": [1e-10, 1e-6],
    "schlafli": [1e-5, 10.0],
    "chord": [0.3, 1e-3],
    "scaling": [0.3],
    "trace": [2e-2],
    "counterexample": [1e-12, 1e-3],
}

FLOW_KEYS = ("a", "S", "w", "r", "length", "width", "surface", "omega", "velocity", "abc")


# ---------------------------------------------------------------------------
# configuration


def _schema():
    text = resources.files("bendcurv").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def _pointer(path):
    return "".join(f"/{p}" for p in path)


def _non_finite(obj, path=()):
    if isinstance(obj, float) and not math.isfinite(obj):
        yield {"pointer": _pointer(path), "message": f"{obj} is not a finite number"}
    elif isinstance(obj, dict):
        for k, v in obj.items():
            yield from _non_finite(v, path + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _non_finite(v, path + (i,))


def validate_config(cfg):
    """Every schema violation as ``{"pointer", "message"}``, in document order."""
    import jsonschema

    validator = jsonschema.Draft202012Validator(_schema())
    out = []
    for err in sorted(validator.iter_errors(cfg), key=lambda e: [str(p) for p in e.absolute_path]):
        msg = err.message
        if list(err.absolute_path) == ["experiment"]:
            msg = f"{err.instance!r} is not a known experiment; allowed: {', '.join(EXPERIMENTS)}"
        out.append({"pointer": _pointer(err.absolute_path), "message": msg})
    if isinstance(cfg, dict):
        out.extend(_non_finite(cfg))
        levels = cfg.get("levels")
        if isinstance(levels, list) and all(isinstance(x, int) for x in levels):
            for i in range(1, len(levels)):
                if levels[i] <= levels[i - 1]:
                    out.append({"pointer": f"/levels/{i}",
                                "message": "levels must be strictly ascending"})
    return out


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}",
                          [{"pointer": "", "message": "file not readable"}]) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}",
                          [{"pointer": "", "message": f"line {exc.lineno}: {exc.msg}"}]) from None


def _flow_spec(cfg, default):
    flow = cfg.get("flow", default)
    if isinstance(flow, dict):
        return dict(flow)
    spec = {"flow": flow}
    spec.update({k: cfg[k] for k in FLOW_KEYS if k in cfg})
    return spec


def _smooth_flow(spec):
    kind = spec["flow"]
    if kind == "corrugation":
        return corrugation_flow(spec.get("a", [0.3, 0.2]), spec.get("S", 2 * math.pi),
                                spec.get("w", 1.0))
    if kind == "cylinder":
        return cylinder_flow(spec.get("r", [1.0, 0.5]), spec.get("length", 1.0),
                             spec.get("width", 1.0))
    if kind == "rigid":
        surface = spec.get("surface", {"surface": "sphere", "r": 1.0})
        return rigid_flow(chart_from_spec(surface), spec.get("omega", (0.3, -0.2, 0.5)),
                          spec.get("velocity", (0.1, 0.2, -0.1)))
    raise ConfigError(f"experiment needs a smooth flow, got {kind!r}",
                      [{"pointer": "/flow", "message": f"{kind!r} is not a smooth flow"}])


def expected_integral(chart):
    """Closed-form ``int H`` for builtin charts, ``None`` when unknown."""
    p = chart.params()
    kind = p.get("surface")
    if kind == "sphere":
        return -4 * math.pi * p["r"]
    if kind == "torus":
        return -2 * math.pi**2 * p["R"]
    if kind in ("corrugation", "plane"):
        return 0.0
    if kind == "rigid":
        return expected_integral(chart.base)
    return None


def _check(name, value, tolerance, passed):
    return {"name": name, "value": value, "tolerance": tolerance, "pass": bool(passed)}


# ---------------------------------------------------------------------------
# experiments; each returns (inputs, metrics, checks, tables)


def _run_integral(cfg, tol, workers):
    q = cfg.get("quadrature", 32)
    inputs = {"quadrature": q}
    rows = {"t": [], "value": [], "expected": [], "error": []}
    if "flow" in cfg:
        spec = _flow_spec(cfg, "corrugation")
        flow = _smooth_flow(spec)
        t_grid = [float(t) for t in cfg.get("t_grid", np.linspace(0, 1, 5).tolist())]
        inputs.update({"flow": spec, "t_grid": t_grid})
        charts = [(t, flow.chart(t)) for t in t_grid]
    else:
        surface = cfg.get("surface", {"surface": "sphere", "r": 1.0})
        inputs["surface"] = surface
        charts = [(0.0, chart_from_spec(surface))]
    values = ex._map(lambda tc: smooth_mean_curvature_integral(tc[1], q), charts, workers)
    checks = []
    for (t, chart), v in zip(charts, values):
        expected = cfg.get("expected", expected_integral(chart))
        err = None if expected is None else abs(v - expected)
        rows["t"].append(t)
        rows["value"].append(float(v))
        rows["expected"].append("" if expected is None else float(expected))
        rows["error"].append("" if err is None else float(err))
        if err is not None:
            checks.append(_check(f"integral(t={t:g})", err, tol[0], err <= tol[0]))
    metrics = {"value": values[0] if len(values) == 1 else values,
               "max_error": max((e for e in rows["error"] if e != ""), default=None)}
    return inputs, metrics, checks, [("integral.csv", rows)]


def _run_converge(cfg, tol, workers):
    surface = cfg.get("surface", {"surface": "sphere", "r": 1.0})
    levels = cfg.get("levels", [4, 5, 6, 7, 8])
    order = cfg.get("order", 8)
    method = cfg.get("retraction", "auto")
    L_max = cfg.get("L_max", 0.05)
    chart = chart_from_spec(surface)
    expected = cfg.get("expected", expected_integral(chart))
    if expected is None:
        raise ConfigError("no closed-form integral for this surface; give \"expected\"",
                          [{"pointer": "/expected", "message": "required for this surface"}])

    def one(level):
        mesh = generate_refinement(chart, level)
        reg = regularity_report(mesh)
        rep = discrete_first_variation(mesh, NormalField(chart, method), order)
        return mesh, reg, rep

    results = ex._map(one, levels, workers)
    rows = {k: [] for k in ("level", "L", "tau", "lambda", "n_edges", "delta_V",
                            "mean_curvature", "error", "relative_error")}
    for level, (mesh, reg, rep) in zip(levels, results):
        err = abs(rep.mean_curvature_estimate - expected)
        for k, v in (("level", level), ("L", reg.L), ("tau", reg.tau), ("lambda", reg.lam),
                     ("n_edges", reg.n_edges), ("delta_V", rep.delta_V),
                     ("mean_curvature", rep.mean_curvature_estimate), ("error", err),
                     ("relative_error", err / abs(expected) if expected else err)):
            rows[k].append(v)
    errs = rows["error"]
    monotone = all(errs[i + 1] < errs[i] for i in range(len(errs) - 1))
    fine = [r for r, L in zip(rows["relative_error"], rows["L"]) if L <= L_max]
    checks = [_check("error decreases monotonically", errs, None, monotone),
              _check(f"relative error at L <= {L_max}", fine or None, tol[0],
                     bool(fine) and max(fine) < tol[0])]
    tables = [("converge.csv", rows)]
    if cfg.get("edges_csv", True):
        mesh, _, rep = results[-1]
        tables.append((f"edges_level{levels[-1]}.csv", ("edges", mesh, rep)))
    inputs = {"surface": surface, "levels": levels, "order": order, "retraction": method,
              "L_max": L_max, "expected": expected}
    return inputs, {"errors": errs, "relative_errors": rows["relative_error"]}, checks, tables


def _run_flex(cfg, tol, workers):
    spec = _flow_spec(cfg, "bricard")
    if spec["flow"] != "bricard":
        raise ConfigError("flex experiment supports the bricard seed",
                          [{"pointer": "/flow", "message": "expected \"bricard\""}])
    abc = spec.get("abc", BRICARD_SEED.tolist())
    t_grid = [float(t) for t in cfg.get("t_grid", np.linspace(0, 1, 11).tolist())]
    flex = flex_continuation(bricard_seed(abc), t_grid)
    L0 = flex.reference.edge_lengths()
    rows = {k: [] for k in ("t", "sum_l_theta", "sum_l_abs_theta", "max_relative_drift")}
    pos = {k: [] for k in ("t", "vertex", "x", "y", "z")}
    for t in flex.t_grid:
        m = flex.mesh_at(t)
        tab = dihedral_table(m, "winding")
        rows["t"].append(float(t))
        rows["sum_l_theta"].append(kernels.compensated_sum(tab.length * tab.theta))
        rows["sum_l_abs_theta"].append(kernels.compensated_sum(tab.length * np.abs(tab.theta)))
        rows["max_relative_drift"].append(float(np.max(np.abs(m.edge_lengths() - L0) / L0)))
        for i, x in enumerate(m.vertices):
            pos["t"].append(float(t))
            pos["vertex"].append(i)
            for k, c in zip("xyz", x):
                pos[k].append(float(c))
    s = np.array(rows["sum_l_theta"])
    variation = float(s.max() - s.min())
    scale = max(abs(float(s.mean())), max(rows["sum_l_abs_theta"]))
    drift = max(rows["max_relative_drift"])
    gauge = flex.gauge_error()
    checks = [_check("edge length drift", drift, tol[0], drift <= tol[0]),
              _check("gauge pin exact", gauge, 0.0, gauge == 0.0),
              _check("sum |e| theta relative variation", variation / scale, tol[1],
                     variation <= tol[1] * scale)]
    metrics = {"edge_drift": drift, "gauge_error": gauge, "sum_l_theta": rows["sum_l_theta"],
               "variation": variation, "scale": scale,
               "displacement": float(np.abs(flex.positions(t_grid[-1]) - flex.positions(t_grid[0])).max())}
    inputs = {"flow": {"flow": "bricard", "abc": np.asarray(abc).tolist()}, "t_grid": t_grid}
    return inputs, metrics, checks, [("flex.csv", rows), ("flex_positions.csv", pos)]


def _schlafli_cases(cfg):
    spec = _flow_spec(cfg, "polytopes")
    kind = spec["flow"]
    seed = cfg.get("seed", 0)
    if kind == "polytopes":
        count = cfg.get("count", 10)
        nv = cfg.get("n_vertices", 40)
        amp = cfg.get("amplitude", 0.05)
        rng = np.random.default_rng(seed)
        cases = []
        for i in range(count):
            n = nv if isinstance(nv, int) else int(rng.integers(nv[0], nv[1] + 1))
            mesh = ex.random_convex_polytope(n, seed + i)
            cases.append((f"polytope{i}_n{n}", random_smooth_vertex_flow(mesh, seed + i, amp)))
        return {"flow": "polytopes", "count": count, "n_vertices": nv, "amplitude": amp,
                "seed": seed}, cases
    if kind == "bricard":
        t_grid = [float(t) for t in cfg.get("t_grid", np.linspace(0, 1, 11).tolist())]
        flex = flex_continuation(bricard_seed(spec.get("abc", BRICARD_SEED)), t_grid)
        return {"flow": "bricard", "t_grid": t_grid}, [("bricard", flex)]
    flow = _smooth_flow(spec)
    levels = cfg.get("levels", [4])
    warp = cfg.get("warp", 0.0)
    return ({"flow": spec, "levels": levels, "warp": warp},
            [(f"level{j}", TriangulatedFlow(flow, j, warp)) for j in levels])


def _run_schlafli(cfg, tol, workers):
    inputs, cases = _schlafli_cases(cfg)
    t = cfg.get("t", 0.5)
    h = cfg.get("h", 1e-4)
    results = ex._map(lambda c: ex.schlafli_residual(c[1], t, h), cases, workers)
    rows = {k: [] for k in ("case", "residual", "consistency", "scale", "bound", "pass")}
    checks = []
    for (name, _), r in zip(cases, results):
        bound = tol[0] * r.scale + tol[1] * r.consistency
        ok = r.passed(tol[0], tol[1])
        for k, v in (("case", name), ("residual", r.residual), ("consistency", r.consistency),
                     ("scale", r.scale), ("bound", bound), ("pass", int(ok))):
            rows[k].append(v)
        checks.append(_check(f"schlafli {name}", abs(r.residual), bound, ok))
    inputs.update({"t": t, "h": h})
    metrics = {"max_abs_residual": max(abs(x) for x in rows["residual"]),
               "max_relative_residual": max(abs(a) / s if s > 0 else 0.0
                                            for a, s in zip(rows["residual"], rows["scale"]))}
    return inputs, metrics, checks, [("schlafli.csv", rows)]


def _run_chord(cfg, tol, workers):
    spec = _flow_spec(cfg, "cylinder")
    flow = _smooth_flow(spec)
    uv0 = cfg.get("uv0", [0.05, 0.5])
    direction = cfg.get("direction", [1.0, 0.0])
    R_grid = cfg.get("R_grid", np.geomspace(0.0125, 0.8, 7).tolist())
    h = cfg.get("h", 1e-4)
    step = cfg.get("step", 1e-3)
    table = ex.chord_derivative_experiment(flow, uv0, direction, R_grid, h, step)
    ratio = ex.chord_limit_ratio(table)
    limit_tol = tol[1] if len(tol) > 1 else DEFAULT_TOLERANCES["chord"][1]
    table.tolerance = tol[0]
    checks = [_check("chord derivative exponent (target 2)",
                     table.slope, tol[0], table.passed),
              _check("R^-1 dr/dt at smallest R over max", ratio, limit_tol,
                     table.exact_zero or ratio < limit_tol)]
    metrics = {"slope": table.slope, "full_slope": None if table.exact_zero else table.full_slope(),
               "exact_zero": table.exact_zero, "limit_ratio": ratio,
               "bound_holds": table.bound_holds}
    inputs = {"flow": spec, "uv0": uv0, "direction": direction, "R_grid": R_grid, "h": h,
              "step": step}
    return inputs, metrics, checks, [("chord.csv", table.columns())]


def _run_scaling(cfg, tol, workers):
    spec = _flow_spec(cfg, "corrugation")
    flow = _smooth_flow(spec)
    levels = cfg.get("levels", [4, 5, 6, 7, 8])
    t = cfg.get("t", 0.5)
    h = cfg.get("h", 1e-4)
    warp = cfg.get("warp", 0.0)
    quantities = cfg.get("quantities", list(ex.SCALING_TARGETS))
    checks, tables, metrics = [], [], {}
    for q in quantities:
        table = ex.edge_scaling_experiment(flow, levels, t, h, q, workers, warp)
        table.tolerance = tol[0]
        sided = ">=" if table.one_sided else "="
        checks.append(_check(f"{q} exponent {sided} {table.target:g}", table.slope, tol[0],
                             table.passed))
        metrics[q] = {"slope": table.slope, "full_slope": table.full_slope(),
                      "target": table.target, "one_sided": table.one_sided,
                      "bound_holds": table.bound_holds}
        tables.append((f"scaling_{q}.csv", table.columns()))
    inputs = {"flow": spec, "levels": levels, "t": t, "h": h, "warp": warp,
              "quantities": quantities}
    return inputs, metrics, checks, tables


def _run_trace(cfg, tol, workers):
    spec = _flow_spec(cfg, "corrugation")
    flow = _smooth_flow(spec)
    levels = cfg.get("levels", [4, 5, 6, 7, 8])
    t_grid = [float(t) for t in cfg.get("t_grid", np.linspace(0, 1, 5).tolist())]
    h = cfg.get("h", 1e-4)
    warp = cfg.get("warp", 0.3)
    expected = cfg.get("expected", expected_integral(flow.chart(0.0)))
    traces = ex._map(lambda j: ex.invariance_trace(flow, j, t_grid, h, warp=warp), levels, workers)
    rows = {k: [] for k in ("level", "t", "delta_V", "mean_curvature", "derivative",
                            "consistency", "tau", "lambda")}
    for tr in traces:
        cols = tr.columns()
        for i in range(len(tr.t_grid)):
            rows["level"].append(tr.level)
            for k in ("t", "delta_V", "mean_curvature", "derivative", "consistency", "tau",
                      "lambda"):
                rows[k].append(float(cols[k][i]))
    K, ratios, bound_ok = ex.calibrate_trace_bound(traces)
    maxd = [tr.max_derivative for tr in traces]
    bound_rows = {"level": levels, "L": [tr.L for tr in traces],
                  "sum_L3": [tr.sum_L3 for tr in traces], "max_derivative": maxd,
                  "ratio": ratios.tolist()}
    checks = []
    if len(traces) > 1:
        checks.append(_check("max|d/dt| <= K sum_L3 (K from coarsest level)", ratios.tolist(), K,
                             bound_ok))
        checks.append(_check("max|d/dt| decreases with level", maxd, None,
                             all(maxd[i + 1] < maxd[i] for i in range(len(maxd) - 1))))
    checks.append(_check("regularity kept within 50% of t=0",
                         [tr.regularity_ok for tr in traces], 0.5,
                         all(tr.regularity_ok for tr in traces)))
    if expected is not None:
        dev = float(np.abs(traces[-1].mean_curvature - expected).max())
        checks.append(_check(f"-deltaV/2 at level {levels[-1]} within tolerance of {expected:g}",
                             dev, tol[0], dev <= tol[0]))
    metrics = {"K": K, "ratios": ratios.tolist(), "max_derivative": maxd, "expected": expected,
               "finest_trace": traces[-1].mean_curvature.tolist()}
    inputs = {"flow": spec, "levels": levels, "t_grid": t_grid, "h": h, "warp": warp}
    return inputs, metrics, checks, [("trace.csv", rows), ("trace_bound.csv", bound_rows)]


def _run_counterexample(cfg, tol, workers):
    vertex = cfg.get("vertex", 0)
    convex, dimpled = isometric_counterexample_pair(vertex)
    a = sum_length_theta(convex, "winding")
    b = sum_length_theta(dimpled, "winding")
    la, lb = convex.edge_lengths(), dimpled.edge_lengths()
    iso = float(np.abs(np.sort(la) - np.sort(lb)).max())
    gap = abs(a - b)
    ta = dihedral_table(convex, "winding")
    tb = dihedral_table(dimpled, "winding")
    rows = {"edge_id": ta.edge_index.tolist(),
            "p": convex.edges[ta.edge_index, 0].tolist(),
            "q": convex.edges[ta.edge_index, 1].tolist(),
            "length_convex": ta.length, "theta_convex": ta.theta,
            "length_dimpled": tb.length, "theta_dimpled": tb.theta}
    checks = [_check("edge length multisets equal", iso, tol[0], iso <= tol[0]),
              _check("sum |e| theta gap", gap, tol[1], gap > tol[1])]
    metrics = {"sum_l_theta_convex": a, "sum_l_theta_dimpled": b, "gap": gap,
               "isometry_defect": iso}
    return {"vertex": vertex}, metrics, checks, [("counterexample.csv", rows)]


RUNNERS = {
    "integral": _run_integral,
    "converge": _run_converge,
    "flex": _run_flex,
    "schlafli": _run_schlafli,
    "chord": _run_chord,
    "scaling": _run_scaling,
    "trace": _run_trace,
    "counterexample": _run_counterexample,
}


# ---------------------------------------------------------------------------
# output


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _write_table(out, name, table):
    path = out / name
    if isinstance(table, tuple) and table[0] == "edges":
        _, mesh, rep = table
        write_edge_csv(mesh, rep, path)
    else:
        ex.write_columns(path, table)
    return name


def run(cfg, out, workers=None):
    """Validate ``cfg``, run it and write ``summary.json`` plus CSV tables into ``out``.

    Returns the summary dictionary.  Raises :class:`ConfigError` on invalid
    input and lets computation errors propagate.
    """
    violations = validate_config(cfg)
    if violations:
        raise ConfigError(f"{len(violations)} configuration violation(s)", violations)
    experiment = cfg["experiment"]
    tol = list(cfg.get("tolerances", DEFAULT_TOLERANCES[experiment]))
    if len(tol) < len(DEFAULT_TOLERANCES[experiment]):
        tol += DEFAULT_TOLERANCES[experiment][len(tol):]
    workers = workers or cfg.get("workers")
    inputs, metrics, checks, tables = RUNNERS[experiment](cfg, tol, workers)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    names = [_write_table(out, name, table) for name, table in tables]
    summary = {
        "experiment": experiment,
        "inputs": {**inputs, "tolerances": tol, **({"seed": cfg["seed"]} if "seed" in cfg else {})},
        "metrics": metrics,
        "checks": checks,
        "tables": names,
        "pass": all(c["pass"] for c in checks),
        "backend": kernels.BACKEND,
        "version": __version__,
    }
    summary = _jsonable(summary)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _error_payload(exc):
    payload = {"error": type(exc).__name__, "message": str(exc),
               "exit_code": getattr(exc, "exit_code", 3)}
    if isinstance(exc, ConfigError):
        payload["violations"] = exc.violations
    if getattr(exc, "last_t", None) is not None:
        payload["last_t"] = exc.last_t
    return payload


def _emit(obj, stream=None):
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True), file=stream or sys.stdout)


def _mesh_command(args):
    try:
        text = args.surface.strip()
        spec = json.loads(text) if text.startswith("{") else {"surface": text}
        violations = validate_config({"experiment": "converge", "surface": spec,
                                      "levels": [max(args.level, 0)]})
        if args.level < 0:
            violations.append({"pointer": "/levels/0", "message": "level must be >= 0"})
        if violations:
            raise ConfigError("invalid surface or level", violations)
        mesh = generate_refinement(chart_from_spec(spec), args.level)
        write_off(mesh, args.out)
    except json.JSONDecodeError as exc:
        _emit(_error_payload(ConfigError(f"invalid surface JSON: {exc}")))
        return 2
    except Exception as exc:
        payload = _error_payload(exc)
        _emit(payload)
        return payload["exit_code"] if isinstance(exc, BendcurvError) else 3
    _emit({"out": args.out, **regularity_report(mesh).as_dict()})
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bendcurv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bendcurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment configuration")
    p_run.add_argument("config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--workers", type=int, default=None,
                       help="worker threads for independent levels/cases")
    p_val = sub.add_parser("validate", help="check a configuration against the schema")
    p_val.add_argument("config")
    p_mesh = sub.add_parser("mesh", help="write the level-j triangulation of a builtin surface")
    p_mesh.add_argument("--surface", default="sphere",
                        help='surface name or JSON descriptor, e.g. \'{"surface":"torus","R":2}\'')
    p_mesh.add_argument("--level", type=int, default=3)
    p_mesh.add_argument("--out", required=True, help="OFF file (identifications go to OUT.json)")
    args = parser.parse_args(argv)

    if args.command == "mesh":
        return _mesh_command(args)

    if args.command == "validate":
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            _emit(_error_payload(exc))
            return 2
        violations = validate_config(cfg)
        _emit({"valid": not violations, "violations": violations})
        return 0 if not violations else 2

    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        summary = run(cfg, out, args.workers)
    except Exception as exc:  # every failure becomes machine-readable JSON
        payload = _error_payload(exc)
        if not isinstance(exc, BendcurvError):
            payload["exit_code"] = 3
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(json.dumps(_jsonable(payload), indent=2) + "\n")
        except OSError:
            pass
        _emit(payload)
        return payload["exit_code"]
    _emit({"experiment": summary["experiment"], "pass": summary["pass"],
           "checks": summary["checks"], "out": str(out)})
    return 0 if summary["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
