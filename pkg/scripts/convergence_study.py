"""Grid refinement of beta: N, 2N, 4N, ... with observed order and a Richardson estimate."""

import argparse
import math

from martin_cone import SolverOptions, StableParams, solve_beta


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--theta", type=float, default=math.pi / 3)
    ap.add_argument("--nodes", type=int, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--grading", type=float, default=1.0)
    args = ap.parse_args(argv)

    params = StableParams(args.d, args.alpha)
    betas = []
    for n in args.nodes:
        r = solve_beta(params, args.theta, SolverOptions(nodes=n, grading=args.grading, self_check=False))
        betas.append(r.beta)
        line = f"N={n:4d} beta={r.beta:.14f}"
        if len(betas) >= 2:
            line += f" change={betas[-1] - betas[-2]:+.3e}"
        if len(betas) >= 3:
            q = (betas[-3] - betas[-2]) / (betas[-2] - betas[-1])
            rich = betas[-1] + (betas[-1] - betas[-2]) / (q - 1.0)
            line += f" ratio={q:.3f} order={math.log2(abs(q)):.2f} richardson={rich:.14f}"
        print(line)


if __name__ == "__main__":
    main()
