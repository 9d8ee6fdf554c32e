"""Benchmark harness: run solver/preconditioner cases on the model problem
and tabulate iteration counts, timings and errors."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .krylov import InnerStats, SolveReport, fgmres, gmres, minres, pcg
from .precond import DEFAULT_ALPHA, KINDS, build_preconditioner
from .problem import assemble_saddle, build_example1, manufactured_rhs
from .ict import ict

__all__ = [
    "ConfigError",
    "CaseConfig",
    "CaseResult",
    "run_case",
    "run_sweep",
    "emit_table",
    "results_from_csv",
    "parse_config",
    "load_config",
    "CSV_HEADER",
]

SOLVERS = ("gmres", "fgmres", "minres", "pcg")
DEFAULT_TOL = {"gmres": 1e-12, "fgmres": 1e-7, "minres": 1e-7, "pcg": 1e-6}
DEFAULT_MAXIT = {"gmres": 500, "fgmres": 500, "minres": 500, "pcg": 100}
CSV_HEADER = ("p", "nu", "solver", "precond", "alpha", "iter", "iter_pcg", "cpu_s", "err", "res", "status")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CaseConfig:
    """One benchmark case. ``None`` fields take solver/preconditioner defaults.

    ``solver="pcg"`` runs PCG with ICT on the leading block ``A`` alone (the
    inner-solver protocol) and requires ``precond="none"``.
    """

    p: int = 16
    nu: float = 1.0
    variant: str | None = None
    solver: str = "gmres"
    precond: str = "R"
    alpha: float | None = None
    tol: float | None = None
    maxit: int | None = None
    inner_tol: float = 1e-6
    inner_maxit: int = 100
    shat_mode: str = "full"
    droptol: float = 1e-2
    seed: int = 0
    solution: str = "ones"

    def resolved(self) -> "CaseConfig":
        """Fill defaults and validate; raises :class:`ConfigError`."""
        c = self
        if c.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {c.solver!r}")
        if c.precond not in KINDS:
            raise ConfigError(f"precond must be one of {KINDS}, got {c.precond!r}")
        variant = c.variant or ("plus" if c.solver == "minres" else "minus")
        if variant not in ("minus", "plus"):
            raise ConfigError(f"variant must be minus or plus, got {variant!r}")
        if c.solver == "minres" and (variant != "plus" or c.precond not in ("RD", "BD")):
            raise ConfigError("minres needs variant=plus and precond RD or BD")
        if c.solver in ("gmres", "fgmres") and variant != "minus":
            raise ConfigError(f"{c.solver} runs on variant=minus")
        if c.solver == "pcg" and c.precond != "none":
            raise ConfigError("pcg runs on block A with ICT; use precond=none")
        if isinstance(c.p, bool) or not isinstance(c.p, (int, np.integer)) or c.p < 2:
            raise ConfigError(f"p must be an integer >= 2, got {c.p!r}")
        alpha = DEFAULT_ALPHA[c.precond] if c.alpha is None else c.alpha
        tol = DEFAULT_TOL[c.solver] if c.tol is None else c.tol
        maxit = DEFAULT_MAXIT[c.solver] if c.maxit is None else c.maxit
        for name, v in (("nu", c.nu), ("alpha", alpha), ("tol", tol), ("inner_tol", c.inner_tol), ("droptol", c.droptol)):
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be a positive real, got {v!r}")
        if not tol < 1 or not c.inner_tol < 1:
            raise ConfigError("tolerances must be < 1")
        if maxit < 1 or c.inner_maxit < 1:
            raise ConfigError("iteration limits must be >= 1")
        if c.shat_mode not in ("full", "diagonal"):
            raise ConfigError(f"shat_mode must be full or diagonal, got {c.shat_mode!r}")
        if c.solution not in ("ones", "random"):
            raise ConfigError(f"solution must be ones or random, got {c.solution!r}")
        return dataclasses.replace(c, variant=variant, alpha=float(alpha), tol=float(tol), maxit=int(maxit))


@dataclass
class CaseResult:
    config: CaseConfig
    status: str
    report: SolveReport = field(default_factory=SolveReport)
    iter_pcg: float = 0.0
    setup_seconds: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def iters(self) -> int:
        return self.report.outer_iters

    @property
    def cpu_s(self) -> float:
        return self.report.wall_seconds

    @property
    def err(self) -> float:
        return self.report.err

    @property
    def res(self) -> float:
        return self.report.res

    def row(self) -> dict:
        c = self.config
        return {
            "p": c.p, "nu": c.nu, "solver": c.solver, "precond": c.precond, "alpha": c.alpha,
            "iter": self.iters, "iter_pcg": self.iter_pcg, "cpu_s": self.cpu_s,
            "err": self.err, "res": self.res, "status": self.status,
        }


def _exact_solution(cfg: CaseConfig, N: int) -> np.ndarray:
    if cfg.solution == "ones":
        return np.ones(N)
    return np.random.default_rng(cfg.seed).standard_normal(N)


def run_case(config: CaseConfig) -> CaseResult:
    """Assemble, precondition and solve one case from a zero initial guess.

    ``report.wall_seconds`` covers the Krylov solve only; assembly and
    factorizations go into ``setup_seconds``. ``res`` and ``err`` are
    recomputed from the returned iterate.
    """
    cfg = config.resolved()
    t0 = time.perf_counter()
    blocks = build_example1(cfg.p, cfg.nu)
    stats = InnerStats()
    if cfg.solver == "pcg":
        op = blocks.A
        w_star = _exact_solution(cfg, blocks.n)
        b = op @ w_star
        M = ict(blocks.A, cfg.droptol)
        setup = time.perf_counter() - t0
        try:
            w, rep = pcg(op, b, M, tol=cfg.tol, maxit=cfg.maxit)
        except ArithmeticError as exc:
            return CaseResult(cfg, f"error:{exc}", setup_seconds=setup)
        iter_pcg = 0.0
    else:
        system = assemble_saddle(blocks, cfg.variant)
        op = system.matrix
        b, w_star = manufactured_rhs(system, _exact_solution(cfg, system.N))
        state = build_preconditioner(
            blocks, cfg.precond, cfg.alpha, cfg.shat_mode, cfg.droptol, cfg.inner_tol, cfg.inner_maxit
        )
        setup = time.perf_counter() - t0
        solve = {"gmres": gmres, "fgmres": fgmres, "minres": minres}[cfg.solver]
        try:
            w, rep = solve(op, b, lambda r: state(r, stats), tol=cfg.tol, maxit=cfg.maxit)
        except (ArithmeticError, RuntimeError) as exc:
            return CaseResult(cfg, f"error:{exc}", setup_seconds=setup)
        iter_pcg = stats.iters / stats.calls if stats.calls else 0.0
    rep.inner_iters_total, rep.inner_calls = stats.iters, stats.calls
    rep.res = float(np.linalg.norm(b - op @ w) / np.linalg.norm(b))
    rep.err = float(np.linalg.norm(w - w_star) / np.linalg.norm(w_star))
    return CaseResult(cfg, rep.status, rep, iter_pcg, setup)


def _run_isolated(cfg: CaseConfig) -> CaseResult:
    try:
        return run_case(cfg)
    except ConfigError as exc:
        return CaseResult(cfg, f"error:config: {exc}")
    except Exception as exc:  # one broken case must not sink the sweep
        return CaseResult(cfg, f"error:{type(exc).__name__}: {exc}")


def run_sweep(configs, workers: int = 1) -> list[CaseResult]:
    """Run cases, returning results in input order. ``workers > 1`` spreads
    cases across processes; each case stays single-threaded."""
    configs = list(configs)
    if not configs:
        raise ValueError("empty sweep")
    if workers <= 1:
        return [_run_isolated(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_isolated, configs))


# --------------------------------------------------------------------------
# tables


def _num(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_table(results, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for r in results:
            row = r.row()
            wr.writerow([_num(row[k]) for k in CSV_HEADER])
        return buf.getvalue()
    if fmt == "markdown":
        return _markdown(results)
    raise ValueError(f"unknown table format {fmt!r}")


def results_from_csv(text: str) -> list[dict]:
    """Parse :func:`emit_table` CSV back into typed rows."""
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        out.append({
            "p": int(r["p"]), "nu": float(r["nu"]), "solver": r["solver"], "precond": r["precond"],
            "alpha": float(r["alpha"]), "iter": int(r["iter"]), "iter_pcg": float(r["iter_pcg"]),
            "cpu_s": float(r["cpu_s"]), "err": float(r["err"]), "res": float(r["res"]),
            "status": r["status"],
        })
    return out


def _cell(r: CaseResult) -> str:
    if r.status.startswith("error"):
        return "error"
    mark = "" if r.converged else f" ({r.status})"
    return (
        f"{r.iters} / {r.iter_pcg:.0f} / {r.cpu_s:.2f} / {r.err:.2e} / {r.res:.2e}{mark}"
    )


def _markdown(results) -> str:
    """One table per (nu, solver): grid sizes down, preconditioners across,
    each cell ``Iter / Iter_pcg / CPU / Err / Res``."""
    groups: dict[tuple, list[CaseResult]] = {}
    for r in results:
        groups.setdefault((r.config.nu, r.config.solver), []).append(r)
    parts = []
    for (nu, solver), rs in groups.items():
        kinds = list(dict.fromkeys(r.config.precond for r in rs))
        grids = sorted(set(r.config.p for r in rs))
        cells = {(r.config.p, r.config.precond): _cell(r) for r in rs}
        lines = [
            f"### {solver}, nu = {nu:g}",
            "",
            "| grid | " + " | ".join(kinds) + " |",
            "|---|" + "---|" * len(kinds),
        ]
        for p in grids:
            lines.append(f"| {p}x{p} | " + " | ".join(cells.get((p, k), "") for k in kinds) + " |")
        lines.append("")
        lines.append("cells: Iter / Iter_pcg / CPU (s) / Err / Res")
        parts.append("\n".join(lines))
    return "\n\n".join(parts) + ("\n" if parts else "")


# --------------------------------------------------------------------------
# config files

_FIELDS = {f.name: f for f in dataclasses.fields(CaseConfig)}
_INT_KEYS = {"p", "maxit", "inner_maxit", "seed"}
_FLOAT_KEYS = {"nu", "alpha", "tol", "inner_tol", "droptol"}


def _coerce(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_config(text: str) -> list[CaseConfig]:
    """Parse ``[case]`` sections of ``key = value`` lines (``#`` comments).

    Keys before the first section apply as defaults to every case.
    """
    defaults: dict = {}
    cases: list[dict] = []
    current = defaults
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line != "[case]":
                raise ConfigError(f"line {lineno}: unknown section {line}")
            current = {}
            cases.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        current[key] = _coerce(key, raw)
    if not cases:
        raise ConfigError("no [case] sections")
    configs = [CaseConfig(**{**defaults, **c}) for c in cases]
    for c in configs:
        c.resolved()
    return configs


def load_config(path) -> list[CaseConfig]:
    with open(path) as fh:
        return parse_config(fh.read())
