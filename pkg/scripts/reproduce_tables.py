"""Regenerate the iteration/CPU tables for the model problem.

Runs every preconditioner with GMRES and FGMRES on the nonsymmetric form and
MINRES (RD and BD only) on the symmetric form, for each grid and viscosity.
Writes a CSV and a markdown summary next to ``--out``.

    python scripts/reproduce_tables.py --grids 16 32 --workers 4 --out results/tables
"""

import argparse
import pathlib
import time

from regsaddle.bench import CaseConfig, emit_table, run_sweep

PRECONDS = ("R", "RD", "BD", "SS", "RSS")


def table_configs(grids, nus):
    configs = []
    for nu in nus:
        for p in grids:
            for solver in ("gmres", "fgmres"):
                configs += [CaseConfig(p=p, nu=nu, solver=solver, precond=k) for k in PRECONDS]
            configs += [CaseConfig(p=p, nu=nu, variant="plus", solver="minres", precond=k) for k in ("RD", "BD")]
    return configs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=[16, 32])
    ap.add_argument("--nus", type=float, nargs="+", default=[1.0, 0.01])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/tables")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results = run_sweep(table_configs(args.grids, args.nus), workers=args.workers)
    out.with_suffix(".csv").write_text(emit_table(results, "csv"))
    md = emit_table(results, "markdown")
    out.with_suffix(".md").write_text(md)
    print(md)
    print(f"{len(results)} cases in {time.perf_counter() - t0:.1f}s -> {out}.csv, {out}.md")


if __name__ == "__main__":
    main()
