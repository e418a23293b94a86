"""Sweep beta over narrow apertures and compare alpha - beta with the leading term.

Writes a CSV with the raw results plus the ratio (alpha - beta) / (B theta^{d-1+alpha}).
"""

import argparse
import csv
import sys

import numpy as np

from martin_cone import SolverOptions, StableParams, SweepRecord, fit_power_law, martin_constant, solve_beta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--theta-min", type=float, default=0.025)
    ap.add_argument("--theta-max", type=float, default=0.4)
    ap.add_argument("--count", type=int, default=8)
    ap.add_argument("--nodes", type=int, default=128)
    ap.add_argument("--output", default="-")
    args = ap.parse_args(argv)

    params = StableParams(args.d, args.alpha)
    B = martin_constant(args.d, args.alpha)
    p = args.d - 1 + args.alpha
    thetas = np.geomspace(args.theta_min, args.theta_max, args.count)
    records, rows = [], []
    for th in thetas:
        r = solve_beta(params, float(th), SolverOptions(nodes=args.nodes))
        records.append(SweepRecord(r.theta, r.beta, None, None, r.nodes, r.residual, r.predicted,
                                   r.self_convergence))
        rows.append([r.theta, r.beta, r.gap, r.self_convergence, r.gap / (B * th ** p)])
        print(f"theta={th:.4f} beta={r.beta:.12f} ratio={rows[-1][-1]:.5f}", file=sys.stderr)

    fh = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["theta", "beta", "alpha_minus_beta", "self_convergence", "ratio_to_leading"])
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()
    fit = fit_power_law(records, args.alpha)
    print(f"fit: slope {fit.slope:.4f} (leading exponent {p:g}), constant {fit.constant:.5f} "
          f"(B = {B:.5f})", file=sys.stderr)


if __name__ == "__main__":
    main()
