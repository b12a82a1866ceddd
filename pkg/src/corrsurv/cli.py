"""Command-line interface.

Usage:
    corrsurv analyze system.json --t-max 5 --steps 50 --out curve.csv
    corrsurv simulate system.json --t-max 5 --steps 50 --reps 200000 --seed 7
    corrsurv expand system.json --mode paper
    corrsurv compare system.json --t-max 5 --steps 20 --reps 200000 --seed 7
    corrsurv correlation system.json --t 1 --node-i a --node-j b

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 expansion
capacity exceeded, 5 closed form and simulation disagree.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .quadrature import QuadratureError, QuadratureSettings
from .simulate import EstimatorConfig, estimate_stream_covariance, estimate_system_survival
from .structure import CapacityError
from .system_survival import (
    ProbabilityRangeWarning,
    model_expansion,
    stream_correlation,
    survival_curve,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_CAPACITY, EXIT_MISMATCH = 0, 2, 3, 4, 5
Z_LIMIT = 4.0


class UsageError(ValueError):
    pass


def _quad(args) -> QuadratureSettings:
    try:
        return QuadratureSettings(rel_tol=args.quad_rel_tol, abs_tol=args.quad_abs_tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid(t_max: float, steps: int, allow_zero: bool = False) -> np.ndarray:
    if not math.isfinite(t_max) or t_max < 0 or (t_max == 0 and not allow_zero):
        raise UsageError(f"--t-max must be > 0, got {t_max}")
    if steps < 1:
        raise UsageError(f"--steps must be >= 1, got {steps}")
    if t_max == 0:
        return np.array([0.0])
    grid = np.linspace(0.0, t_max, steps + 1)
    grid[-1] = t_max
    return grid


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        # repr gives the shortest string that round-trips the float.
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _estimator(name: str) -> str:
    return {"crude": "crude", "rb": "rao_blackwell", "rao_blackwell": "rao_blackwell"}[name]


def cmd_analyze(args) -> int:
    model = load_config(args.config)
    grid = _grid(args.t_max, args.steps)
    curve = survival_curve(model, grid, args.mode, _quad(args))
    _emit(_csv(["t", "survival"], zip(curve.grid, curve.values)), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = load_config(args.config)
    grid = _grid(args.t_max, args.steps)
    cfg = _config(args)
    curve = estimate_system_survival(model, grid, cfg, _quad(args), workers=args.workers)
    _emit(_csv(["t", "survival", "stderr"], zip(curve.grid, curve.values, curve.stderr)), args.out)
    return EXIT_OK


def cmd_expand(args) -> int:
    model = load_config(args.config)
    expansion = model_expansion(model, args.mode)
    _emit(json.dumps(expansion.to_json()) + "\n", args.out)
    return EXIT_OK


def _config(args) -> EstimatorConfig:
    try:
        return EstimatorConfig(args.reps, args.seed, _estimator(args.estimator))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _z(diff: float, se: float) -> float | None:
    if se > 0:
        return diff / se
    return 0.0 if abs(diff) <= 1e-12 else None


def cmd_compare(args) -> int:
    model = load_config(args.config)
    grid = _grid(args.t_max, args.steps, allow_zero=True)
    quad = _quad(args)
    exact = survival_curve(model, grid, "idempotent", quad)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProbabilityRangeWarning)
        paper = survival_curve(model, grid, "paper", quad)
    sim = estimate_system_survival(model, grid, _config(args), quad, workers=args.workers)

    rows = []
    for t, v, p, s, se in zip(grid, exact.values, paper.values, sim.values, sim.stderr):
        z = _z(float(v - s), float(se))
        rows.append(
            {
                "t": float(t),
                "closed_form_idempotent": float(v),
                "closed_form_paper": float(p),
                "simulated": float(s),
                "stderr": float(se),
                "z_idempotent": z,
                "z_paper": _z(float(p - s), float(se)),
                "pass": z is not None and abs(z) <= Z_LIMIT,
            }
        )
    passed = all(r["pass"] for r in rows)
    report = {
        "pass": passed,
        "z_limit": Z_LIMIT,
        "reps": args.reps,
        "seed": args.seed,
        "estimator": _estimator(args.estimator),
        "paper_out_of_range": paper.out_of_range,
        "rows": rows,
    }
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK if passed else EXIT_MISMATCH


def cmd_correlation(args) -> int:
    model = load_config(args.config)
    try:
        model.node(args.node_i)
        model.node(args.node_j)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    try:
        closed = stream_correlation(model, args.node_i, args.node_j, args.t, args.convention)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    est = estimate_stream_covariance(model, args.node_i, args.node_j, args.t, args.reps, args.seed)
    report = {
        "closed_form": closed,
        "simulated": est.correlation,
        "se": est.se,
        "covariance": est.covariance,
        "covariance_se": est.covariance_se,
        "convention": args.convention,
    }
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrsurv", description="Survival of systems with correlated NHPP workloads."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True, sim=False):
        p.add_argument("config", help="system configuration JSON")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--quad-rel-tol", type=float, default=1e-8)
        p.add_argument("--quad-abs-tol", type=float, default=1e-12)
        if grid:
            p.add_argument("--t-max", type=float, required=True)
            p.add_argument("--steps", type=int, default=100)
        if sim:
            p.add_argument("--reps", type=int, default=100_000)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--estimator", choices=["crude", "rb", "rao_blackwell"], default="crude")
            p.add_argument("--workers", type=int, default=1, help="threads for replication blocks")

    p = sub.add_parser("analyze", help="closed-form survival curve (CSV)")
    common(p)
    p.add_argument("--mode", choices=["idempotent", "paper"], default="idempotent")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo survival curve (CSV)")
    common(p, sim=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("expand", help="structure-function expansion (JSON)")
    common(p, grid=False)
    p.add_argument("--mode", choices=["idempotent", "paper"], default="idempotent")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("compare", help="closed form vs simulation report (JSON)")
    common(p, sim=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("correlation", help="composite-stream correlation (JSON)")
    common(p, grid=False)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--node-i", required=True)
    p.add_argument("--node-j", required=True)
    p.add_argument("--convention", choices=["mean_function", "paper_intensity"], default="mean_function")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_correlation)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", ProbabilityRangeWarning)
            warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            return args.func(args)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QuadratureError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
