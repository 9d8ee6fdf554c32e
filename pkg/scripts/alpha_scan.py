"""Iteration count of GMRES versus the regularization parameter.

    python scripts/alpha_scan.py --p 16 --nu 1 --precond R
"""

import argparse

import numpy as np

from regsaddle.bench import CaseConfig, emit_table, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=16)
    ap.add_argument("--nu", type=float, default=1.0)
    ap.add_argument("--precond", default="R")
    ap.add_argument("--solver", default="fgmres")
    ap.add_argument("--alphas", type=float, nargs="+", default=list(np.geomspace(1e-2, 1e2, 9)))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    configs = [
        CaseConfig(p=args.p, nu=args.nu, solver=args.solver, precond=args.precond, alpha=float(a))
        for a in args.alphas
    ]
    print(emit_table(run_sweep(configs, workers=args.workers), "csv"), end="")


if __name__ == "__main__":
    main()
