"""Command-line front end: ``gkdv-lab {laws,ode,pde,compare,scan,checks}``.

Exit codes: 0 pass, 1 suite failure, 2 invalid configuration, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import adiabatic_ode, checks, experiments, modulation, scaling_laws
from .config import ExperimentConfig, load, save
from .profiles import ALLOWED_M
from .pde import TRACE_COLUMNS, NumericalAbort, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3
CRITICAL_BAND = 0.02  # scan points this close to lambda~ are reported but not judged

_FLAG_KEYS = {
    "m": "m",
    "lam": "lam",
    "eps": "eps",
    "gamma": "gamma",
    "L": "L",
    "N": "N",
    "dt": "dt",
    "x0": "x0",
    "horizon": "horizon",
    "out": "out",
    "tol": "tol",
}


class ConfigError(ValueError):
    pass


def _num(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if hasattr(v, "value") and hasattr(v, "name"):
        return v.value
    return v


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")


def _add_model_flags(p: argparse.ArgumentParser, pde: bool = True) -> None:
    p.add_argument("--config", help="key = value configuration file; flags override it")
    p.add_argument("--m", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--out")
    p.add_argument("--tol", type=float)
    if pde:
        p.add_argument("--L", type=float)
        p.add_argument("--N", type=int)
        p.add_argument("--x0", type=float)


def build_config(args) -> ExperimentConfig:
    try:
        base = load(args.config) if getattr(args, "config", None) else ExperimentConfig()
        updates = {}
        for flag, key in _FLAG_KEYS.items():
            v = getattr(args, flag, None)
            if v is not None:
                updates[key] = v
        values = base.as_dict()
        values.update(updates)
        return ExperimentConfig(**values)
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def _outdir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# laws

LAW_COLUMNS = ("m", "lambda", "regime", "c_inf", "final_velocity", "final_mass_ratio", "residual")


def law_grid(m: int) -> list[float]:
    lams = [round(0.02 * i, 10) for i in range(50)]
    return sorted(set(lams + [scaling_laws.lambda_tilde(m)]))


def cmd_laws(args) -> int:
    ms = list(ALLOWED_M) if args.all else [args.m or 3]
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    worst = 0.0
    for m in ms:
        const = scaling_laws.constants(m)
        print(f"# m={m} lambda0={const['lambda0']} p={const['p']} theta={const['theta']} "
              f"lambda_tilde={const['lambda_tilde']!r}")
        rows = []
        for d in scaling_laws.law_table(m, law_grid(m)):
            rows.append([d["m"], d["lambda"], d["regime"], d["c_inf"], d["final_velocity"], d["final_mass_ratio"], d["residual"]])
            worst = max(worst, abs(d["residual"]))
        print(",".join(LAW_COLUMNS))
        for r in rows:
            print(",".join(_num(v) for v in r))
        if out:
            write_csv(out / f"laws_m{m}.csv", LAW_COLUMNS, rows)
            write_json(out / f"constants_m{m}.json", const)
    tol = args.tol if args.tol is not None else 1e-10
    return EXIT_OK if worst < tol else EXIT_FAIL


# ---------------------------------------------------------------------------
# ode

ODE_COLUMNS = ("t", "C", "P", "first_integral", "a")


def cmd_ode(args) -> int:
    cfg = build_config(args)
    params = cfg.params()
    dt = args.dt if args.dt is not None else cfg.ode_dt
    run = adiabatic_ode.integrate(params, dt=dt, horizon=cfg.horizon, kappa=cfg.kappa)
    out = _outdir(cfg)
    write_csv(out / "ode_trajectory.csv", ODE_COLUMNS, run.csv_rows())
    summary = run.summary()
    summary["c_inf"] = scaling_laws.c_infinity(params.m, params.lam).c_inf
    write_json(out / "ode_run.json", summary)
    print(json.dumps(_jsonable(summary), indent=2))
    if run.warning:
        print(f"warning: {run.warning}", file=sys.stderr)
    tol = cfg.tol if cfg.tol is not None else 1e-9
    if not run.drift() < tol:
        print(f"first-integral drift {run.drift():.3e} exceeds {tol:.1e}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# pde and compare


def _write_snapshot(path: Path, state, cfg: ExperimentConfig) -> None:
    g = state.grid
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# t={state.t!r} L={g.L!r} N={g.N} eps={cfg.eps!r} lambda={cfg.lam!r} m={cfg.m} gamma={cfg.gamma!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "u"))
        for x, u in zip(g.x, state.u):
            w.writerow((repr(float(x)), repr(float(u))))


def _trace_rows(trace):
    return trace.csv_rows()


def cmd_pde(args) -> int:
    cfg = build_config(args).resolve()
    params = cfg.params()
    setup = cfg.setup()
    out = _outdir(cfg)
    save(cfg, out / "config.ini")
    tracker = modulation.Tracker(params)
    snap_every = args.snapshots
    snaps = []

    def monitor(state, row):
        tracker(state, row)
        if snap_every and (len(tracker.samples) - 1) % snap_every == 0:
            snaps.append(state.copy())

    res = run_experiment(params, setup.solver_config(), x0=setup.x0, horizon=setup.horizon,
                         x_exit=setup.x_exit, on_monitor=monitor)
    samples = tracker.finish()
    write_csv(out / "trace.csv", TRACE_COLUMNS, _trace_rows(res.trace))
    write_csv(out / "track.csv", modulation.TRACK_COLUMNS, modulation.track_rows(samples))
    for i, st in enumerate(snaps):
        _write_snapshot(out / f"snapshot_{i:05d}.csv", st, cfg)
    manifest = res.manifest()
    manifest.update({
        "energy_drift": res.trace.energy_drift(),
        "l1_drift": res.trace.l1_drift(),
        "rate_residuals": res.trace.rate_residuals(),
        "mhat_increase_per_step": res.trace.mhat_increase_per_step(),
        "snapshots": len(snaps),
    })
    write_json(out / "manifest.json", manifest)
    print(json.dumps(_jsonable(manifest), indent=2))
    return EXIT_OK


def compare_verdict(summary: dict, eps: float, tol: float | None) -> list[str]:
    """Names of the failed comparison checks."""
    tol = modulation.comparison_tol(eps) if tol is None else tol
    bound = 2.0 * math.sqrt(eps)
    failed = []
    if not summary.get("ode_sup_c_error", math.inf) <= tol:
        failed.append("ode_sup_c_error")
    if not summary["scaling_error"] <= bound:
        failed.append("scaling_error")
    if summary["regime_measured"] != summary["regime_predicted"]:
        failed.append("regime")
    return failed


def cmd_compare(args) -> int:
    cfg = build_config(args).resolve()
    params = cfg.params()
    out = _outdir(cfg)
    save(cfg, out / "config.ini")
    result = experiments.run_compare(params, cfg.setup(), ode_dt=cfg.ode_dt)
    summary = result.summary()
    write_csv(out / "track.csv", modulation.TRACK_COLUMNS, modulation.track_rows(result.samples))
    write_csv(out / "trace.csv", TRACE_COLUMNS, _trace_rows(result.pde.trace))
    failed = compare_verdict(summary, params.eps, cfg.tol)
    summary["failed"] = failed
    write_json(out / "report.json", summary)
    print(json.dumps(_jsonable(summary), indent=2))
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def parse_lambdas(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        lo, hi, step = (float(v) for v in text.split(":"))
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + i * step, 12) for i in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_scan(args) -> int:
    cfg = build_config(args)
    try:
        lams = parse_lambdas(args.lambdas)
    except ValueError as exc:
        raise ConfigError(f"bad lambda grid {args.lambdas!r}") from exc
    dt = cfg.dt if cfg.dt is not None else experiments.DEFAULT_DT
    rows = experiments.scan_rows(cfg.m, lams, cfg.eps, cfg.gamma, dt, workers=args.workers)
    out = _outdir(cfg)
    table = [[r[k] for k in experiments.SCAN_COLUMNS] for r in rows]
    write_csv(out / "scan.csv", experiments.SCAN_COLUMNS, table)
    write_json(out / "scan.json", rows)
    print(",".join(experiments.SCAN_COLUMNS))
    for r in table:
        print(",".join(_num(v) for v in r))
    lt = scaling_laws.lambda_tilde(cfg.m)
    mismatched = [
        r["lambda"] for r in rows
        if abs(r["lambda"] - lt) >= CRITICAL_BAND and r["regime_measured"] != r["regime_predicted"]
    ]
    if mismatched:
        print(f"measured regime differs from prediction at lambda = {mismatched}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_checks(args) -> int:
    report = checks.suite_report(checks.run_checks(dx=args.dx))
    text = json.dumps(_jsonable(report), indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "checks.json", report)
    print(text)
    if not report["passed"]:
        for name in report["failing"]:
            print(f"FAILED {name}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gkdv-lab", description="gKdV solitons in a slowly varying medium")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("laws", help="scaling-law constants and c_inf tables")
    p.add_argument("--m", type=int, choices=ALLOWED_M)
    p.add_argument("--all", action="store_true")
    p.add_argument("--out")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_laws)

    p = sub.add_parser("ode", help="adiabatic modulation ODE")
    _add_model_flags(p, pde=False)
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("pde", help="direct simulation with invariant trace")
    _add_model_flags(p)
    p.add_argument("--snapshots", type=int, default=0, help="write every k-th monitored field")
    p.set_defaults(func=cmd_pde)

    p = sub.add_parser("compare", help="PDE against ODE and scaling laws")
    _add_model_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scan", help="regime over a lambda grid")
    _add_model_flags(p)
    p.add_argument("--lambdas", default="0.42:0.70:0.04")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("checks", help="profile and operator identity suites")
    p.add_argument("--dx", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(func=cmd_checks)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    warnings.simplefilter("default")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
