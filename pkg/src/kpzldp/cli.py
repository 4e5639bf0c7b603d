"""Command-line front end.

    kpzldp run SCENARIO.json [--out DIR] [--verbose] [--zero-noise] [--samples N] [--seed S]
    kpzldp render SHAPE.json --window t0,t1,x0,x1 --out FIG.svg

A scenario is a JSON object with a ``kind`` field; the remaining fields are
kind specific (see README).  Errors are printed as one JSON object on stderr
and give a nonzero exit status.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, KPZError, NumericalError
from .legendre import lyapunov_from_duality, symmetry_breaking_scan, tree_decomposition_check
from .plotting import check_window, parse_window, render_profile, render_scan, render_svg
from .profile import ProbeConfig, classify
from .rate import rate
from .shape import LimitShape, build_limit_shape, shape_eval
from .she import SimConfig, hydrodynamic_check, simulate_she

log = logging.getLogger("kpzldp")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4

KINDS = {
    "rate": ({"t", "xs", "hs"}, set()),
    "dual": ({"t", "xs", "masses"}, set()),
    "shape": ({"t", "xs", "hs"}, {"window", "grid_dt", "grid_dx", "fan"}),
    "tree-check": ({"t", "xs", "hs"}, {"t_mid"}),
    "symmetry-scan": ({"m", "grid_points"}, set()),
    "simulate": (set(), set(SimConfig.__dataclass_fields__) | {"probes", "tol"}),
}


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def load_scenario(path) -> dict:
    text = Path(path).read_text()
    data = json.loads(text)  # JSONDecodeError carries line and column
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object", "kind")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown or missing kind {kind!r}; expected one of {sorted(KINDS)}", "kind")
    required, optional = KINDS[kind]
    for key in sorted(required):
        if key not in data:
            raise ConfigError(f"missing required field {key!r} for kind {kind!r}", key)
    for key in sorted(data):
        if key != "kind" and key not in required | optional:
            raise ConfigError(f"unexpected field {key!r} for kind {kind!r}", key)
    return data


def _numbers(sc, key) -> list[float]:
    val = sc[key]
    if not isinstance(val, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
        raise ConfigError(f"{key} must be a list of numbers", key)
    return [float(v) for v in val]


def _probe_config(sc) -> ProbeConfig:
    t = sc["t"]
    if not isinstance(t, (int, float)) or isinstance(t, bool) or not 0.0 < t <= 1.0:
        raise ConfigError(f"t must be a number in (0, 1], got {t!r}", "t")
    xs, hs = _numbers(sc, "xs"), _numbers(sc, "hs")
    if not xs or any(b <= a for a, b in zip(xs, xs[1:])):
        raise ConfigError("xs must be non-empty and strictly increasing", "xs")
    if len(hs) != len(xs):
        raise ConfigError("hs must have the same length as xs", "hs")
    try:
        return ProbeConfig(t, xs, hs)
    except ValueError as exc:
        raise ConfigError(str(exc), "hs") from exc


def _run_rate(sc, out: Path, args):
    cfg = _probe_config(sc)
    res = rate(cfg)
    payload = {"config": cfg.to_dict(), "class": classify(cfg).value, **res.to_dict()}
    _dump_json(payload, out / "rate.json")
    _write_csv(out / "rate.csv", ["x", "h", "gradient"], zip(cfg.xs, cfg.hs, res.gradient))
    return f"rate value={res.value!r}", ["rate.json", "rate.csv"]


def _run_dual(sc, out: Path, args):
    masses = sc["masses"]
    if not isinstance(masses, list) or len(masses) != len(sc["xs"]):
        raise ConfigError("masses must be a list as long as xs", "masses")
    dp = lyapunov_from_duality(sc["t"], sc["xs"], masses)
    _dump_json(dp.to_dict(), out / "dual.json")
    _write_csv(out / "dual.csv", ["x", "mass", "h"], zip(dp.config.xs, dp.masses, dp.heights))
    return f"dual L={dp.lyapunov!r} argmax={list(dp.heights)!r}", ["dual.json", "dual.csv"]


def _window_of(sc, shape):
    if "window" in sc:
        w = sc["window"]
        if not isinstance(w, list) or len(w) != 4:
            raise ConfigError("window must be [t0, t1, x0, x1]", "window")
        return check_window(shape, w)
    lo, hi = shape.profile.window()
    r = max(abs(lo), abs(hi), 1.0) * 1.25
    return check_window(shape, (0.1 * shape.t, shape.t, -r, r))


def _run_shape(sc, out: Path, args):
    cfg = _probe_config(sc)
    shape = build_limit_shape(cfg)
    t0, t1, x0, x1 = _window_of(sc, shape)
    gdt, gdx = float(sc.get("grid_dt", 0.05)), float(sc.get("grid_dx", 0.05))
    if not (gdt > 0 and gdx > 0):
        raise ConfigError("grid steps must be positive", "grid_dt" if gdt <= 0 else "grid_dx")
    ts = np.linspace(t1, t0, max(2, int(round((t1 - t0) / gdt)) + 1))
    xs = np.linspace(x0, x1, max(2, int(round((x1 - x0) / gdx)) + 1))
    rows = [(t, x, shape_eval(shape, float(t), float(x))) for t in ts for x in xs]
    _dump_json(shape.to_dict(), out / "shape.json")
    _write_csv(out / "shape_grid.csv", ["t", "x", "psi"], rows)
    render_svg(shape, (t0, t1, x0, x1), out / "shape.svg", fan=int(sc.get("fan", 25)))
    render_profile(shape.profile, out / "profile.svg", cfg.xs, cfg.hs)
    files = ["shape.json", "shape_grid.csv", "shape.svg", "profile.svg"]
    return f"shape shocks={len(shape.tree.roots())} merges={len(shape.tree.events)}", files


def _run_tree(sc, out: Path, args):
    cfg = _probe_config(sc)
    t_mid = sc.get("t_mid", [0.5])
    if not isinstance(t_mid, list):
        t_mid = [t_mid]
    checks = [tree_decomposition_check(cfg, float(tm)) for tm in t_mid]
    _dump_json({"config": cfg.to_dict(), "checks": [c.to_dict() for c in checks]}, out / "tree_check.json")
    _write_csv(out / "tree_check.csv", ["t_mid", "lhs", "rhs", "gap"],
               [(float(tm), c.lhs, c.rhs, c.gap) for tm, c in zip(t_mid, checks)])
    worst = max(c.gap for c in checks)
    return f"tree-check max_gap={worst!r}", ["tree_check.json", "tree_check.csv"]


def _run_scan(sc, out: Path, args):
    try:
        points = int(sc["grid_points"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("grid_points must be an integer", "grid_points") from exc
    scan = symmetry_breaking_scan(float(sc["m"]), points)
    _write_csv(out / "scan.csv", ["m_minus", "L", "L_closed_form", "L_functional", "s_merge"],
               [(p.m_minus, p.L, p.L_closed_form, p.L_functional, p.s_merge) for p in scan.points])
    _dump_json({
        "m": scan.m, "endpoint_value": scan.endpoint_value, "mirror_gap": scan.mirror_gap(),
        "route_gap": scan.route_gap(), "margin": scan.margin(), "argmax": scan.argmax(),
        "rows": [list(r) for r in scan.rows],
    }, out / "scan.json")
    render_scan(scan.rows, out / "scan.svg")
    return f"symmetry-scan argmax={scan.argmax()!r} margin={scan.margin()!r}", ["scan.csv", "scan.json", "scan.svg"]


def _sim_config(sc, args) -> SimConfig:
    fields = {k: v for k, v in sc.items() if k in SimConfig.__dataclass_fields__}
    if "output_times" in fields:
        fields["output_times"] = tuple(fields["output_times"])
    if args.samples is not None:
        fields["samples"] = args.samples
    if args.seed is not None:
        fields["seed"] = args.seed
    if args.zero_noise:
        fields["noise"] = 0.0
    probes = sc.get("probes", [])
    if probes:
        times = set(fields.get("output_times", SimConfig.output_times)) | {float(p[0]) for p in probes}
        fields["output_times"] = tuple(sorted(times))
        fields["x_reach"] = max([fields.get("x_reach", 1.0)] + [abs(float(p[1])) for p in probes])
    try:
        return SimConfig(**fields)
    except TypeError as exc:
        raise ConfigError(str(exc), None) from exc


def _run_simulate(sc, out: Path, args):
    cfg = _sim_config(sc, args)
    probes = sc.get("probes", [])
    if not isinstance(probes, list) or any(not isinstance(p, list) or len(p) != 2 for p in probes):
        raise ConfigError("probes must be a list of [t, x] pairs", "probes")
    log.info("simulating %d sample(s) on %s", cfg.samples, asdict(cfg))
    fs = simulate_she(cfg)
    fs.write_csv(out / "field.csv")
    fs.write_binary(out / "field.bin")
    files = ["field.csv", "field.bin"]
    summary = f"simulate samples={cfg.samples} positivity_violations={fs.positivity_violations}"
    if probes:
        rep = hydrodynamic_check(cfg, [tuple(map(float, p)) for p in probes], tol=float(sc.get("tol", 0.1)), sample=fs)
        _dump_json(rep.to_dict(), out / "hydro.json")
        files.append("hydro.json")
        summary += f" hydro_passed={rep.passed}"
    return summary, files


RUNNERS = {
    "rate": _run_rate,
    "dual": _run_dual,
    "shape": _run_shape,
    "tree-check": _run_tree,
    "symmetry-scan": _run_scan,
    "simulate": _run_simulate,
}


def _error(kind: str, message: str, code: int, **extra) -> int:
    payload = {"error": kind, "message": message}
    payload.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _guard(fn, module: str):
    try:
        return fn()
    except FileNotFoundError as exc:
        return _error("FileNotFound", str(exc), EXIT_INPUT, module=module)
    except json.JSONDecodeError as exc:
        return _error("ParseError", exc.msg, EXIT_INPUT, line=exc.lineno, column=exc.colno, module=module)
    except ConfigError as exc:
        return _error("ConfigError", str(exc), EXIT_INPUT, field=exc.field, module=module)
    except NumericalError as exc:
        return _error("NumericalError", str(exc), EXIT_NUMERIC, diagnostics=exc.diagnostics, module=module)
    except KPZError as exc:
        return _error(type(exc).__name__, str(exc), EXIT_INPUT, module=module)


def cmd_run(args) -> int:
    def body():
        sc = load_scenario(args.scenario)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        kind = sc["kind"]
        log.info("running %s scenario from %s", kind, args.scenario)
        summary, files = RUNNERS[kind](sc, out, args)
        print(f"{summary} files={','.join(str(out / f) for f in files)}")
        return EXIT_OK

    return _guard(body, "run")


def cmd_render(args) -> int:
    def body():
        data = json.loads(Path(args.shape).read_text())
        if isinstance(data, dict) and "profile" in data and "tree" in data:
            shape = LimitShape.from_dict(data)
        elif isinstance(data, dict) and {"t", "xs", "hs"} <= set(data):
            shape = build_limit_shape(_probe_config(data))
        else:
            raise ConfigError("expected a shape.json artifact or an object with t, xs, hs", "profile")
        render_svg(shape, parse_window(args.window), args.out, fan=args.fan)
        print(f"render files={args.out}")
        return EXIT_OK

    return _guard(body, "render")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kpzldp", description="KPZ upper-tail large deviations toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a JSON scenario")
    run.add_argument("scenario")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--verbose", "-v", action="store_true")
    run.add_argument("--zero-noise", action="store_true", help="simulate: switch the noise off")
    run.add_argument("--samples", type=int, default=None, help="simulate: override sample count")
    run.add_argument("--seed", type=int, default=None, help="simulate: override seed")
    run.set_defaults(func=cmd_run)

    ren = sub.add_parser("render", help="render a limit shape to SVG")
    ren.add_argument("shape")
    ren.add_argument("--window", required=True, help="t0,t1,x0,x1")
    ren.add_argument("--out", required=True)
    ren.add_argument("--fan", type=int, default=25, help="number of characteristics")
    ren.add_argument("--verbose", "-v", action="store_true")
    ren.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
