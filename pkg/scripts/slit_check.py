"""Ratios (1 - beta(2, 1, theta)) / (theta^2 / 4) for the slit-plane comparison."""

import argparse

from martin_cone import slit_check


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--nodes", type=int, default=128)
    args = ap.parse_args(argv)
    rep = slit_check(args.thetas, nodes=args.nodes)
    print("theta      beta              1-theta^2/4       ratio     self_convergence")
    for row in zip(rep.thetas, rep.betas, rep.reference, rep.ratios, rep.self_convergence):
        print("{:<10.4g} {:<17.14f} {:<17.14f} {:<9.5f} {:.2e}".format(*row))


if __name__ == "__main__":
    main()
