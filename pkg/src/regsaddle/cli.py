"""Command-line entry point: ``run``, ``sweep`` and ``spectrum``."""

from __future__ import annotations

import argparse
import sys

from .bench import CaseConfig, ConfigError, emit_table, load_config, run_sweep
from .problem import build_example1
from .spectral import GuardError, dump_spectrum_csv, enumerate_and_verify_spectrum

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_CONFIG = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="regsaddle", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="run a single case")
    run.add_argument("--p", type=int, default=16)
    run.add_argument("--nu", type=float, default=1.0)
    run.add_argument("--variant", choices=["minus", "plus"])
    run.add_argument("--solver", default="gmres")
    run.add_argument("--precond", default="R")
    run.add_argument("--alpha", type=float)
    run.add_argument("--tol", type=float)
    run.add_argument("--maxit", type=int)
    run.add_argument("--inner-tol", type=float, default=1e-6)
    run.add_argument("--inner-maxit", type=int, default=100)
    run.add_argument("--shat-mode", default="full")
    run.add_argument("--droptol", type=float, default=1e-2)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--solution", default="ones")
    run.add_argument("--format", choices=["csv", "markdown"], default="csv")

    sw = sub.add_parser("sweep", help="run every [case] of a config file")
    sw.add_argument("--config", required=True)
    sw.add_argument("--format", choices=["csv", "markdown"], default="csv")
    sw.add_argument("--workers", type=int, default=1)

    spec = sub.add_parser("spectrum", help="dump verified eigenvalues as CSV")
    spec.add_argument("--p", type=int, default=4)
    spec.add_argument("--nu", type=float, default=1.0)
    spec.add_argument("--alpha", type=float, default=2.0)
    spec.add_argument("--out", required=True)
    spec.add_argument("--raw", action="store_true", help="append eigenvalues of the symmetric operator")
    return ap


def _finish(results, fmt: str) -> int:
    sys.stdout.write(emit_table(results, fmt))
    if any(r.status.startswith("error:config") for r in results):
        return EXIT_CONFIG
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "run":
            cfg = CaseConfig(
                p=args.p, nu=args.nu, variant=args.variant, solver=args.solver,
                precond=args.precond, alpha=args.alpha, tol=args.tol, maxit=args.maxit,
                inner_tol=args.inner_tol, inner_maxit=args.inner_maxit,
                shat_mode=args.shat_mode, droptol=args.droptol, seed=args.seed,
                solution=args.solution,
            )
            cfg.resolved()
            return _finish(run_sweep([cfg]), args.format)
        if args.cmd == "sweep":
            configs = load_config(args.config)
            return _finish(run_sweep(configs, args.workers), args.format)
        blocks = build_example1(args.p, args.nu)
        report = enumerate_and_verify_spectrum(blocks, args.alpha)
        dump_spectrum_csv(report, args.out, raw_blocks=blocks if args.raw else None)
        s = report.summary()
        print(
            f"p={args.p} nu={args.nu:g} alpha={args.alpha:g}: {s['total']} of {s['N']} eigenvalues "
            f"(one={s['one']} half={s['half']} quad={s['quad']}, complex={s['complex']}), "
            f"max residual {max(s['max_residual_one'], s['max_residual_quad']):.2e}"
        )
        return EXIT_OK
    except (ConfigError, GuardError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
