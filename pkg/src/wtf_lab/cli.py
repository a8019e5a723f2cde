"""Batch front-end: wtf-lab <command> --config <path> [--out DIR] [--threads N] [--seed S].

One command per process; every run writes a deterministic report.json (and
any CSV outputs) into the output directory.  Exit codes: 0 ok, 2 validation
error, 3 numerical failure, 4 budget exhausted.
"""

from __future__ import annotations

import argparse
import sys as _sys
import time

import numpy as np

from . import __version__
from .config import load_config, parse_model, parse_theta, require_int, require_number
from .errors import (
    BudgetExceeded,
    NUMERICAL_ERRORS,
    VALIDATION_ERRORS,
    WtfLabError,
)
from .metrics import (
    box_dimension,
    correlation_dimension,
    holder_birkhoff,
    holder_oscillation,
    read_cloud_csv,
    sample_graph,
    write_cloud_csv,
)
from .report import RunReport
from .thermo import (
    A_of_q,
    PotentialSpec,
    graph_dimension_prediction,
    gibbs_sample,
    jin_upper,
    lifted_dim_prediction,
    measure_stats,
    spectrum,
)
from .verify import CHECK_IDS, run_battery

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_BUDGET = 4


def _cmd_validate(config, out_dir, seed, report):
    sys = parse_model(config)
    report.outputs = {
        "model_id": sys.model_id,
        "branch_count": sys.ell,
        "hyperbolicity_margin": sys.hyperbolicity_margin,
        "margin_slack": sys.margin_slack,
        "lambda_inf": sys.lambda_inf,
        "lambda_sup": sys.lambda_sup,
        "full_branch": sys.is_full,
    }
    report.warnings.extend(sys.warnings)


def _cmd_predict(config, out_dir, seed, report):
    sys = parse_model(config)
    pred = graph_dimension_prediction(sys)
    report.outputs = {
        "s1": pred.s1,
        "s2": pred.s2,
        "box_dim": pred.box_dim,
        "hausdorff_upper": pred.hausdorff_upper,
        "min_is": pred.min_is,
    }


def _cmd_sample(config, out_dir, seed, report):
    sys = parse_model(config)
    theta = parse_theta(config, seed)
    depth = require_int(config, "depth", low=1, high=40)
    per_cylinder = require_int(config, "per_cylinder", default=1, low=1)
    tol = require_number(config, "tol", default=1e-8, low=1e-15)
    restricted = bool(config.get("restrict_to_repeller", False))
    cloud = sample_graph(sys, theta, depth, per_cylinder, tol, restricted)
    out = out_dir / str(config.get("cloud_csv", "cloud.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_cloud_csv(cloud, out)
    report.outputs = {
        "points": len(cloud),
        "cloud_csv": out.name,
        "provenance": cloud.provenance.to_dict(),
    }


def _load_or_sample_cloud(config, out_dir, seed):
    if "cloud_csv_in" in config:
        return read_cloud_csv(config["cloud_csv_in"])
    sys = parse_model(config)
    theta = parse_theta(config, seed)
    depth = require_int(config, "depth", low=1, high=40)
    per_cylinder = require_int(config, "per_cylinder", default=1, low=1)
    tol = require_number(config, "tol", default=1e-8, low=1e-15)
    restricted = bool(config.get("restrict_to_repeller", False))
    return sample_graph(sys, theta, depth, per_cylinder, tol, restricted)


def _cmd_boxdim(config, out_dir, seed, report):
    cloud = _load_or_sample_cloud(config, out_dir, seed)
    scales = config.get("scales")
    if scales is None:
        lo = require_int(config, "min_scale_exp", default=6, low=1)
        hi = require_int(config, "max_scale_exp", default=14, low=2)
        scales = [2.0**-k for k in range(lo, hi + 1)]
    drop = tuple(config.get("window_drop", (2, 2)))
    result = box_dimension(cloud, scales, drop=drop)
    report.outputs = {
        "slope": result.slope,
        "stderr": result.stderr,
        "r2": result.r2,
        "scales": list(result.scales),
        "counts": list(result.counts),
        "scale_window": list(result.scale_window),
    }
    report.warnings.extend(result.warnings)


def _cmd_holder(config, out_dir, seed, report):
    sys = parse_model(config)
    theta = parse_theta(config, seed)
    depth = require_int(config, "birkhoff_depth", default=30, low=1)
    lo = require_int(config, "osc_depth_min", default=2, low=1)
    hi = require_int(config, "osc_depth_max", default=20, low=2)
    probes = require_int(config, "probes", default=128, low=2)
    tol = require_number(config, "tol", default=1e-12, low=1e-16)
    points = config.get("points")
    if points is None:
        from .dynamics import sample_repeller
        n = require_int(config, "point_depth", default=12, low=1)
        count = require_int(config, "point_count", default=50, low=1)
        reps = sample_repeller(sys, n, "random", seed=seed if seed is not None else 7)
        step = max(1, len(reps) // count)
        points = [x for _, x in reps[::step]][:count]
    rows = []
    for x in points:
        bv = holder_birkhoff(sys, float(x), depth)
        ov = holder_oscillation(sys, float(x), theta, range(lo, hi + 1), probes, tol)
        rows.append((float(x), bv, ov))
    out = out_dir / str(config.get("holder_csv", "holder.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="\n") as fh:
        fh.write("x,birkhoff,oscillation\n")
        for x, bv, ov in rows:
            fh.write(f"{x:.17g},{bv:.17g},{ov:.17g}\n")
    report.outputs = {
        "holder_csv": out.name,
        "points": len(rows),
        "birkhoff_mean": float(np.mean([r[1] for r in rows])),
        "oscillation_mean": float(np.mean([r[2] for r in rows])),
    }


def _cmd_spectrum(config, out_dir, seed, report):
    sys = parse_model(config)
    grid = config.get("q_grid")
    if grid is None:
        q_min = require_number(config, "q_min", default=-3.0)
        q_max = require_number(config, "q_max", default=3.0)
        steps = require_int(config, "q_steps", default=25, low=2)
        grid = list(np.linspace(q_min, q_max, steps))
    fd_step = require_number(config, "fd_step", default=1e-3, low=1e-8)
    curve = spectrum(sys, grid, fd_step)
    out = out_dir / str(config.get("spectrum_csv", "spectrum.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="\n") as fh:
        fh.write("q,A_q,alpha,D\n")
        for q, a, al, d in curve.samples:
            fh.write(f"{q:.17g},{a:.17g},{al:.17g},{d:.17g}\n")
    report.outputs = {
        "spectrum_csv": out.name,
        "alpha_min": curve.alpha_min,
        "alpha_max": curve.alpha_max,
        "alpha_c": curve.alpha_c,
        "degenerate_flag": curve.degenerate_flag,
    }
    report.warnings.extend(curve.warnings)


def _pot_from_config(sys, config) -> PotentialSpec:
    if "q" in config:
        q = require_number(config, "q")
        return PotentialSpec(-A_of_q(sys, q), q)
    a = require_number(config, "pot_a", default=0.0)
    b = require_number(config, "pot_b", default=0.0)
    c = require_number(config, "pot_c", default=0.0)
    return PotentialSpec(a, b, c)


def _cmd_gibbs(config, out_dir, seed, report):
    sys = parse_model(config)
    pot = _pot_from_config(sys, config)
    depth = require_int(config, "depth", default=50, low=1)
    count = require_int(config, "count", default=10000, low=1)
    sample_seed = seed if seed is not None else require_int(config, "seed", default=1)
    sample = gibbs_sample(sys, pot, depth, count, sample_seed)
    out = out_dir / str(config.get("sample_csv", "gibbs.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="\n") as fh:
        fh.write("word,x\n")
        for word, x in sample:
            fh.write("".join(str(d) for d in word) + f",{x:.17g}\n")
    stats = measure_stats(sys, pot)
    report.outputs = {
        "sample_csv": out.name,
        "count": count,
        "entropy": stats.entropy,
        "lyapunov": stats.lyapunov,
        "mean_log_lambda": stats.mean_log_lambda,
        "dim": stats.dim,
        "alpha": stats.alpha,
    }


def _cmd_lift(config, out_dir, seed, report):
    sys = parse_model(config)
    grid = config.get("q_grid", [-2.0, -1.0, 0.0, 1.0, 2.0])
    rows = []
    for q in grid:
        a_q = A_of_q(sys, float(q))
        stats = measure_stats(sys, PotentialSpec(-a_q, float(q)))
        rows.append((float(q), stats.dim, stats.alpha,
                     lifted_dim_prediction(stats), jin_upper(stats.dim, stats.alpha)))
    out = out_dir / str(config.get("lift_csv", "lift.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="\n") as fh:
        fh.write("q,dim,alpha,lifted_dim,jin_upper\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    report.outputs = {"lift_csv": out.name, "rows": len(rows)}


def _cmd_verify(config, out_dir, seed, report):
    criteria = config.get("criteria")
    if criteria is not None:
        unknown = set(criteria) - set(CHECK_IDS)
        if unknown:
            from .errors import BadConfig
            raise BadConfig(f"unknown criteria {sorted(unknown)}; known: {CHECK_IDS}")
    results = run_battery(criteria)
    all_pass = all(r.passed for r in results)
    for r in results:
        line = f"{'PASS' if r.passed else 'FAIL'} {r.criterion}: {r.detail}"
        print(line)
        report.outputs[r.criterion] = {"passed": r.passed, "detail": r.detail}
        report.timings[r.criterion] = r.elapsed
    report.outputs["all_passed"] = all_pass
    if not all_pass:
        from .errors import Inconclusive
        raise Inconclusive("acceptance battery has failing criteria")


COMMANDS = {
    "validate": _cmd_validate,
    "predict": _cmd_predict,
    "sample": _cmd_sample,
    "boxdim": _cmd_boxdim,
    "holder": _cmd_holder,
    "spectrum": _cmd_spectrum,
    "gibbs": _cmd_gibbs,
    "lift": _cmd_lift,
    "verify": _cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wtf-lab",
        description="Weierstrass-type function laboratory over cookie-cutter maps",
    )
    parser.add_argument("--version", action="version", version=f"wtf-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "verify"), default=None)
        p.add_argument("--out", default=None, help="output directory (default runs/<command>)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap; results never depend on it")
        p.add_argument("--seed", type=int, default=None, help="override config seeds")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from pathlib import Path

    out_dir = Path(args.out) if args.out else Path("runs") / args.command
    report = RunReport(command=args.command, config={}, version=__version__)
    t0 = time.perf_counter()
    try:
        config = load_config(args.config) if args.config else {}
        report.config = config
        COMMANDS[args.command](config, out_dir, args.seed, report)
    except (WtfLabError, ValueError) as exc:
        report.status = "error"
        report.error = {"type": type(exc).__name__, "message": str(exc)}
        report.timings["total"] = time.perf_counter() - t0
        report.write(out_dir)
        print(f"error: {type(exc).__name__}: {exc}", file=_sys.stderr)
        if isinstance(exc, BudgetExceeded):
            return EXIT_BUDGET
        if isinstance(exc, NUMERICAL_ERRORS):
            return EXIT_NUMERICAL
        return EXIT_VALIDATION
    report.timings["total"] = time.perf_counter() - t0
    path = report.write(out_dir)
    print(f"report: {path}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
