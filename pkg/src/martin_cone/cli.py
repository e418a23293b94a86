"""Command-line front end: single computations, aperture sweeps, validation suites and fits."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .asymptotics import SweepRecord, fit_power_law, predicted_beta, slit_check
from .constants import StableParams, eval_constants, gamma
from .errors import DomainError, InvalidParameters, MartinConeError, UnsupportedAperture
from .kernels import KernelPoint, u_diff, u_kernel
from .solver import SolverOptions, barrier_bounds, solve_beta

THREADS_ENV = "MARTIN_CONE_THREADS"
CSV_HEADER = ["theta", "beta", "beta_lower", "beta_upper", "nodes", "residual", "predicted"]


class ConfigError(Exception):
    """Invalid command-line configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    d: Optional[int] = None
    alpha: Optional[float] = None
    theta: Optional[float] = None
    theta_min: Optional[float] = None
    theta_max: Optional[float] = None
    count: Optional[int] = None
    log_spacing: bool = False
    nodes: int = 128
    grading: float = 1.0
    tol: float = 1e-8
    method: str = "eigen"
    output_format: str = "text"
    output: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.d is not None and (self.d < 2):
            raise ConfigError("--d must be an integer >= 2")
        if self.alpha is not None and not (0.0 < self.alpha < 2.0):
            raise ConfigError("--alpha must lie in (0, 2)")
        if self.theta is not None and not (0.0 < self.theta < math.pi):
            raise ConfigError("--theta must lie in (0, pi) radians")
        if self.nodes < 4:
            raise ConfigError("--nodes must be >= 4")
        if self.grading < 1.0:
            raise ConfigError("--grading must be >= 1")
        if not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if self.command == "sweep":
            if not (0.0 < self.theta_min < self.theta_max < math.pi):
                raise ConfigError("--theta-min and --theta-max must satisfy 0 < min < max < pi")
            if self.count is None or self.count < 1:
                raise ConfigError("--count must be >= 1")
        if self.method in ("barrier", "both") and self.command in ("beta", "sweep"):
            top = self.theta if self.command == "beta" else self.theta_max
            if top > math.pi / 3 + 1e-12:
                raise ConfigError("--method barrier needs --theta <= pi/3")


def thread_budget() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _emit(obj, as_json: bool, out):
    if as_json:
        out.write(json.dumps(obj, indent=2, sort_keys=False) + "\n")
    else:
        for k, v in obj.items():
            out.write(f"{k}: {v}\n")


# ---------------------------------------------------------------- subcommands

def _cmd_constants(args, out):
    cs = eval_constants(StableParams(args.d, args.alpha)).as_dict()
    _emit({"d": args.d, "alpha": args.alpha, **cs}, args.json, out)
    return 0


def _cmd_kernel(args, out):
    params = StableParams(args.d, args.alpha)
    pt = KernelPoint(args.t, args.lam)
    val = u_diff(params, pt) if args.diff else u_kernel(params, pt)
    out.write(repr(float(val)) + "\n")
    return 0


def _solve_one(d: int, alpha: float, theta: float, nodes: int, grading: float, tol: float,
               method: str) -> dict:
    params = StableParams(d, alpha)
    opts = SolverOptions(nodes=nodes, grading=grading, tol=tol, barrier=(method == "both"))
    if method == "barrier":
        lo, hi = barrier_bounds(params, theta, opts)
        return {"d": d, "alpha": alpha, "theta": theta, "beta": None, "beta_lower": lo,
                "beta_upper": hi, "residual": None, "nodes": nodes, "self_convergence": None,
                "predicted": predicted_beta(params, theta) if theta < 1.0 else None,
                "grid_certified": True}
    res = solve_beta(params, theta, opts)
    out = res.as_dict()
    out["alpha_minus_beta"] = res.gap
    out["diagnostics"] = res.diagnostics
    return out


def _cmd_beta(args, out):
    theta = math.radians(args.theta) if args.degrees else args.theta
    cfg = RunConfig("beta", args.d, args.alpha, theta=theta, nodes=args.nodes, grading=args.grading,
                    tol=args.tol, method=args.method)
    cfg.validate()
    t0 = time.perf_counter()
    res = _solve_one(args.d, args.alpha, theta, args.nodes, args.grading, args.tol, args.method)
    res["degrees"] = bool(args.degrees)
    diag = res.pop("diagnostics", {})
    if args.verbose:
        res["diagnostics"] = diag
        res["seconds"] = time.perf_counter() - t0
    if args.json:
        out.write(json.dumps(res, indent=2) + "\n")
    else:
        for k, v in res.items():
            out.write(f"{k}: {v}\n")
    return 0


def _sweep_thetas(tmin: float, tmax: float, count: int, log: bool) -> list:
    if count == 1:
        return [tmin]
    if log:
        return list(np.geomspace(tmin, tmax, count))
    return list(np.linspace(tmin, tmax, count))


def _sweep_task(job):
    return _solve_one(*job)


def _cmd_sweep(args, out):
    cfg = RunConfig("sweep", args.d, args.alpha, theta_min=args.theta_min, theta_max=args.theta_max,
                    count=args.count, log_spacing=args.log, nodes=args.nodes, grading=args.grading,
                    tol=args.tol, method=args.method, output=args.output)
    cfg.validate()
    workers = thread_budget()
    thetas = _sweep_thetas(args.theta_min, args.theta_max, args.count, args.log)
    jobs = [(args.d, args.alpha, float(t), args.nodes, args.grading, args.tol, args.method)
            for t in thetas]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_task, jobs))  # map preserves theta order
    else:
        rows = [_sweep_task(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in CSV_HEADER])
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def read_sweep_csv(path: str) -> list:
    """Parse a CSV written by ``sweep`` into SweepRecord objects."""
    def opt(s):
        return None if s == "" else float(s)

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ConfigError(f"--input must have header {','.join(CSV_HEADER)}")
        recs = []
        for row in reader:
            if row["beta"] == "":
                raise ConfigError("--input rows need a beta value (eigen or both method)")
            recs.append(SweepRecord(float(row["theta"]), float(row["beta"]), opt(row["beta_lower"]),
                                    opt(row["beta_upper"]), int(row["nodes"]), opt(row["residual"]),
                                    opt(row["predicted"])))
    return recs


def _cmd_fit(args, out):
    if not os.path.exists(args.input):
        raise ConfigError(f"--input file not found: {args.input}")
    if not (0.0 < args.alpha < 2.0):
        raise ConfigError("--alpha must lie in (0, 2)")
    recs = read_sweep_csv(args.input)
    fit = fit_power_law(recs, args.alpha)
    _emit({"slope": fit.slope, "constant": fit.constant, "n_points": fit.n_points}, args.json, out)
    return 0


def _cmd_slit(args, out):
    try:
        thetas = [float(s) for s in args.theta_list.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError("--theta-list must be comma-separated numbers") from exc
    if not thetas or any(not (0.0 < t < 0.5) for t in thetas):
        raise ConfigError("--theta-list values must lie in (0, 0.5)")
    rep = slit_check(thetas, nodes=args.nodes)
    if args.json:
        out.write(json.dumps(rep.__dict__, indent=2) + "\n")
    else:
        out.write("theta,beta,reference,ratio,self_convergence\n")
        for row in zip(rep.thetas, rep.betas, rep.reference, rep.ratios, rep.self_convergence):
            out.write(",".join(_fmt(v) for v in row) + "\n")
    return 0


# ---------------------------------------------------------------- validation suites

def _suite_flat():
    from .euclidean import (FracLapSpec, cylinder_field, exit_field, frac_lap_at, riesz_field)

    spec = FracLapSpec(rel_tol=1e-7)
    rng = np.random.default_rng(0)
    checks = []
    for d, a in [(2, 0.5), (2, 1.0), (3, 1.5)]:
        f = exit_field(StableParams(d, a))
        worst = 0.0
        for _ in range(10):
            v = rng.normal(size=d)
            x = v / np.linalg.norm(v) * rng.uniform(0.0, 0.9)
            worst = max(worst, abs(frac_lap_at(f, x, spec).value + 1.0))
        checks.append((f"exit profile d={d} alpha={a}", worst, 1e-3))
    for d, a in [(2, 1.0), (3, 1.5)]:
        f = riesz_field(StableParams(d, a))
        worst = 0.0
        for r in (0.5, 1.0, 2.0):
            x = np.zeros(d)
            x[-1] = r
            worst = max(worst, abs(frac_lap_at(f, x, spec).value))
        checks.append((f"riesz d={d} alpha={a}", worst, 1e-4))
    f = cylinder_field(StableParams(2, 1.0), 0.05)
    checks.append(("cylinder d=2 alpha=1 eps=0.05", abs(frac_lap_at(f, np.array([0.0, 0.3]), spec).value + 1.0),
                   1e-3))
    return checks


def _suite_kernels():
    checks = []
    worst = 0.0
    for d, a, lam in [(2, 1.0, 0.0), (2, 1.0, 0.5), (2, 0.5, 0.2), (3, 1.5, 1.0), (3, 1.0, -0.5), (4, 0.7, 0.3)]:
        p = StableParams(d, a)
        exact = gamma(d + lam) * gamma(a - lam) / gamma(d + a)
        worst = max(worst, abs(u_kernel(p, KernelPoint(-1.0, lam)) / exact - 1.0))
    checks.append(("beta identity at t=-1 (relative)", worst, 1e-10))
    worst = 0.0
    for d, a in [(2, 1.0), (3, 0.5), (3, 1.5)]:
        p = StableParams(d, a)
        exact = 0.5 * gamma(d / 2) * gamma(a / 2) / gamma((d + a) / 2)
        worst = max(worst, abs(u_kernel(p, KernelPoint(0.0, 0.0)) / exact - 1.0))
    checks.append(("u_0(0) against half beta function (relative)", worst, 1e-10))
    p = StableParams(2, 1.0)
    ts = np.linspace(-0.95, 0.95, 8)
    lams = np.linspace(0.0, 0.9, 5)
    vals = np.array([[u_kernel(p, KernelPoint(t, l)) for t in ts] for l in lams])
    viol = int(np.sum(np.diff(vals, axis=1) <= 0) + np.sum(np.diff(vals, axis=0) <= 0))
    checks.append(("monotonicity violations in t and lambda", float(viol), 0.5))
    return checks


def _suite_halfspace(nodes: int):
    checks = []
    for d, a in [(2, 0.5), (2, 1.0), (2, 1.5), (3, 1.0)]:
        res = solve_beta(StableParams(d, a), 0.5 * math.pi, SolverOptions(nodes=nodes, self_check=False))
        checks.append((f"half-space d={d} alpha={a} |beta - alpha/2|", abs(res.beta - 0.5 * a), 5e-3))
    return checks


def _cmd_validate(args, out):
    suites = ["flat", "kernels", "halfspace"] if args.suite == "all" else [args.suite]
    ok = True
    report = []
    for s in suites:
        if s == "flat":
            checks = _suite_flat()
        elif s == "kernels":
            checks = _suite_kernels()
        else:
            checks = _suite_halfspace(args.nodes)
        for name, err, tol in checks:
            passed = err <= tol
            ok &= passed
            report.append({"suite": s, "check": name, "error": err, "tolerance": tol, "pass": passed})
    if args.json:
        out.write(json.dumps({"pass": ok, "checks": report}, indent=2) + "\n")
    else:
        for r in report:
            out.write(f"{'PASS' if r['pass'] else 'FAIL'} [{r['suite']}] {r['check']}: "
                      f"{r['error']:.3e} (tol {r['tolerance']:.0e})\n")
    return 0 if ok else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="martin-cone",
                                description="Homogeneity exponent of the Martin kernel in circular cones.")
    sub = p.add_subparsers(dest="command", required=True)

    def dims(sp):
        sp.add_argument("--d", type=int, required=True, help="dimension (>= 2)")
        sp.add_argument("--alpha", type=float, required=True, help="stability index in (0, 2)")

    def solver(sp):
        sp.add_argument("--nodes", type=int, default=128, help="collocation nodes N")
        sp.add_argument("--grading", type=float, default=1.0, help="node grading exponent (>= 1)")
        sp.add_argument("--tol", type=float, default=1e-8, help="relative eigenvalue residual tolerance")
        sp.add_argument("--method", choices=["eigen", "barrier", "both"], default="eigen")

    sp = sub.add_parser("constants", help="print the closed-form constants")
    dims(sp)
    sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("kernel", help="evaluate u_lambda(t) or u_lambda(t) - u_0(t)")
    dims(sp)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--diff", action="store_true", help="print u_lambda - u_0")

    sp = sub.add_parser("beta", help="compute beta for one aperture")
    dims(sp)
    sp.add_argument("--theta", type=float, required=True, help="aperture (radians unless --degrees)")
    solver(sp)
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--degrees", action="store_true", help="read --theta in degrees")
    sp.add_argument("--verbose", action="store_true", help="include solver diagnostics")

    sp = sub.add_parser("sweep", help="beta over a range of apertures, as CSV")
    dims(sp)
    sp.add_argument("--theta-min", type=float, required=True)
    sp.add_argument("--theta-max", type=float, required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--log", action="store_true", help="geometric spacing")
    sp.add_argument("--output", help="CSV path (default stdout)")
    solver(sp)

    sp = sub.add_parser("validate", help="run a validation suite")
    sp.add_argument("--suite", choices=["flat", "kernels", "halfspace", "all"], default="all")
    sp.add_argument("--nodes", type=int, default=128, help="nodes for the half-space suite")
    sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("fit", help="fit alpha - beta = C theta^p to a sweep CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--alpha", type=float, required=True, help="alpha used for the sweep")
    sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("slit", help="compare beta(2, 1, theta) with 1 - theta^2/4")
    sp.add_argument("--theta-list", required=True, help="comma-separated apertures in (0, 0.5)")
    sp.add_argument("--nodes", type=int, default=128)
    sp.add_argument("--json", action="store_true")
    return p


_COMMANDS = {
    "constants": _cmd_constants,
    "kernel": _cmd_kernel,
    "beta": _cmd_beta,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "fit": _cmd_fit,
    "slit": _cmd_slit,
}


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    """Run the command line; returns the process exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "d", None) is not None and args.d < 2:
            raise ConfigError("--d must be an integer >= 2")
        if getattr(args, "alpha", None) is not None and not (0.0 < args.alpha < 2.0):
            raise ConfigError("--alpha must lie in (0, 2)")
        if getattr(args, "nodes", 128) < 4:
            raise ConfigError("--nodes must be >= 4")
        return _COMMANDS[args.command](args, out)
    except ConfigError as exc:
        err.write(f"error: {exc}\n")
        return 2
    except (InvalidParameters, DomainError, UnsupportedAperture) as exc:
        err.write(f"error: {exc}\n")
        return 2
    except MartinConeError as exc:
        err.write(f"failed: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
