"""Enumerate and verify the preconditioned spectrum on small grids.

For each (p, nu, alpha) writes ``spectrum_p{p}_nu{nu}_a{alpha}.csv`` with
the verified eigenvalues plus the raw eigenvalues of the symmetric operator,
and prints a one-line summary per case.

    python scripts/dump_spectra.py --out results/spectra
"""

import argparse
import itertools
import pathlib

from regsaddle.problem import build_example1
from regsaddle.spectral import compute_schur_chain, dump_spectrum_csv, enumerate_and_verify_spectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--nus", type=float, nargs="+", default=[1.0, 0.01])
    ap.add_argument("--alphas", type=float, nargs="+", default=[2.0, 6.0, 100.0])
    ap.add_argument("--out", default="results/spectra")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for p, nu in itertools.product(args.grids, args.nus):
        blocks = build_example1(p, nu)
        chain = compute_schur_chain(blocks)
        for alpha in args.alphas:
            rep = enumerate_and_verify_spectrum(blocks, alpha, chain)
            dump_spectrum_csv(rep, out / f"spectrum_p{p}_nu{nu:g}_a{alpha:g}.csv", raw_blocks=blocks)
            print(f"p={p} nu={nu:g} alpha={alpha:g}: {rep.summary()}")


if __name__ == "__main__":
    main()
