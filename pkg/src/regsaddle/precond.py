"""Block preconditioners for double saddle-point systems.

Five kinds are supported, each applied as ``w = P^{-1} r`` by block
elimination with inner Krylov solves:

``R``    regularized block lower-triangular ``[[A, B^T, 0], [-B, S^, 0], [0, C, aI]]``
``RD``   symmetric ``[[A, B^T, 0], [B, S^, 0], [0, 0, aI]]``
``BD``   block diagonal ``blockdiag(A, S^, C S^{-1} C^T)``
``SS``   shift-splitting ``(1/2) [[aI + A, B^T, 0], [-B, aI, -C^T], [0, C, aI]]``
``RSS``  relaxed shift-splitting, as ``SS`` with leading block ``A``

where ``S^`` approximates ``B A^{-1} B^T`` (see :func:`build_shat`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sparse as sp
from .ict import IctFactor, ict
from .krylov import IndefiniteError, InnerStats, SolveReport, minres, pcg
from .problem import ProblemBlocks
from .sparse import SparseMatrix

__all__ = [
    "KINDS",
    "DEFAULT_ALPHA",
    "ShatOperator",
    "PreconditionerState",
    "InnerSolveError",
    "build_shat",
    "build_preconditioner",
    "apply",
    "apply_pr",
    "apply_prd",
    "apply_pbd",
    "apply_pss",
]

KINDS = ("R", "RD", "BD", "SS", "RSS", "none")
DEFAULT_ALPHA = {"R": 2.0, "RD": 1.0, "BD": 1.0, "SS": 0.01, "RSS": 0.01, "none": 1.0}

# outer iteration cap for the Schur-complement CG solves nested one level up
SCHUR_MAXIT = 500


class InnerSolveError(RuntimeError):
    def __init__(self, what: str, report: SolveReport):
        self.report = report
        super().__init__(
            f"inner solve for {what} did not converge: {report.outer_iters} iterations, "
            f"residual {report.res:.2e}"
        )


@dataclass(frozen=True, eq=False)
class ShatOperator:
    """``S^ = alpha I + (1/alpha) C^T C`` (``full``) or with ``C^T C``
    replaced by its diagonal (``diagonal``), with an exact factorization."""

    mode: str
    alpha: float
    matrix: SparseMatrix
    factor: object

    def solve(self, r) -> np.ndarray:
        if self.mode == "diagonal":
            # factor holds the diagonal itself
            return np.asarray(r, dtype=float) / self.factor
        return self.factor.solve(r)


def build_shat(C: SparseMatrix, alpha: float, mode: str = "full") -> ShatOperator:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    m = C.ncols
    CtC = sp.matmul(sp.transpose(C), C)
    if mode == "full":
        S = sp.add(sp.scale(sp.identity(m), alpha), sp.scale(CtC, 1.0 / alpha))
        return ShatOperator(mode, alpha, S, sp.factor_spd(S))
    if mode == "diagonal":
        d = alpha + CtC.diagonal() / alpha
        return ShatOperator(mode, alpha, sp.diag(d), d)
    raise ValueError(f"unknown S^ mode {mode!r}")


@dataclass(frozen=True, eq=False)
class PreconditionerState:
    kind: str
    alpha: float
    blocks: ProblemBlocks
    shat: ShatOperator | None = None
    ict_of_A: IctFactor | None = None
    inner_tol: float = 1e-6
    inner_maxit: int = 100
    # shift-splitting only: leading block G and its incomplete factor
    G: SparseMatrix | None = None
    ict_of_G: IctFactor | None = None

    def __call__(self, r, stats: InnerStats | None = None) -> np.ndarray:
        return apply(self, r, stats)


def build_preconditioner(
    blocks: ProblemBlocks,
    kind: str,
    alpha: float | None = None,
    shat_mode: str = "full",
    droptol: float = 1e-2,
    inner_tol: float = 1e-6,
    inner_maxit: int = 100,
) -> PreconditionerState:
    if kind not in KINDS:
        raise ValueError(f"unknown preconditioner {kind!r}; expected one of {KINDS}")
    if alpha is None:
        alpha = DEFAULT_ALPHA[kind]
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if kind == "none":
        return PreconditionerState(kind, alpha, blocks)
    common = dict(inner_tol=inner_tol, inner_maxit=inner_maxit)
    if kind in ("SS", "RSS"):
        G = blocks.A
        if kind == "SS":
            G = sp.add(G, sp.scale(sp.identity(blocks.n), alpha))
        # S^ with the same alpha is exactly the y-block M_y = aI + C^T C / a
        return PreconditionerState(
            kind, alpha, blocks, shat=build_shat(blocks.C, alpha, "full"),
            G=G, ict_of_G=ict(G, droptol), **common,
        )
    return PreconditionerState(
        kind, alpha, blocks, shat=build_shat(blocks.C, alpha, shat_mode),
        ict_of_A=ict(blocks.A, droptol), **common,
    )


def _inner_pcg(what, op, rhs, precond, tol, maxit, stats):
    x, rep = pcg(op, rhs, precond, tol=tol, maxit=maxit)
    if stats is not None:
        stats.record(rep)
    if not rep.converged:
        raise InnerSolveError(what, rep)
    return x


def apply(state: PreconditionerState, r, stats: InnerStats | None = None) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (state.blocks.N,):
        raise sp.DimensionError(f"residual of shape {r.shape}, expected ({state.blocks.N},)")
    kind = state.kind
    if kind == "R":
        return apply_pr(state, r, stats)
    if kind == "RD":
        return apply_prd(state, r, stats)
    if kind == "BD":
        return apply_pbd(state, r, stats)
    if kind in ("SS", "RSS"):
        return apply_pss(state, r, stats)
    return r.copy()


def apply_pr(state: PreconditionerState, r, stats: InnerStats | None = None) -> np.ndarray:
    """Block elimination for the regularized preconditioner.

    1. solve ``(A + B^T S^{-1} B) x = r1 - B^T S^{-1} r2`` by PCG with ICT(A)
    2. ``y = S^{-1} (B x + r2)``
    3. ``z = (r3 - C y) / alpha``
    """
    b = state.blocks
    A, B, C = b.A, b.B, b.C
    Bt = B.T
    solve_s = state.shat.solve
    r1, r2, r3 = b.split(r)

    def op(v):
        return A @ v + Bt @ solve_s(B @ v)

    x = _inner_pcg(
        "A + B^T S^-1 B", op, r1 - Bt @ solve_s(r2), state.ict_of_A,
        state.inner_tol, state.inner_maxit, stats,
    )
    y = solve_s(B @ x + r2)
    z = (r3 - C @ y) / state.alpha
    return np.concatenate([x, y, z])


def apply_prd(state: PreconditionerState, r, stats: InnerStats | None = None) -> np.ndarray:
    """Schur elimination on the symmetric leading 2x2 block.

    ``(A - B^T S^{-1} B) x = r1 - B^T S^{-1} r2`` is solved by PCG; if the
    operator turns out indefinite the same system is re-solved by MINRES.
    Then ``y = S^{-1}(r2 - B x)`` and ``z = r3 / alpha``.
    """
    b = state.blocks
    A, B = b.A, b.B
    Bt = B.T
    solve_s = state.shat.solve
    r1, r2, r3 = b.split(r)

    def op(v):
        return A @ v - Bt @ solve_s(B @ v)

    rhs = r1 - Bt @ solve_s(r2)
    try:
        x = _inner_pcg(
            "A - B^T S^-1 B", op, rhs, state.ict_of_A, state.inner_tol, state.inner_maxit, stats
        )
    except IndefiniteError:
        x, rep = minres(op, rhs, state.ict_of_A, tol=state.inner_tol, maxit=state.inner_maxit)
        if stats is not None:
            stats.record(rep)
        if not rep.converged:
            raise InnerSolveError("A - B^T S^-1 B (MINRES)", rep)
    y = solve_s(r2 - B @ x)
    z = r3 / state.alpha
    return np.concatenate([x, y, z])


def apply_pbd(state: PreconditionerState, r, stats: InnerStats | None = None) -> np.ndarray:
    """``x = A^{-1} r1`` (PCG + ICT), ``y = S^{-1} r2``,
    ``z = (C S^{-1} C^T)^{-1} r3`` (CG on the operator form)."""
    b = state.blocks
    A, C = b.A, b.C
    Ct = C.T
    solve_s = state.shat.solve
    r1, r2, r3 = b.split(r)
    x = _inner_pcg("A", A, r1, state.ict_of_A, state.inner_tol, state.inner_maxit, stats)
    y = solve_s(r2)
    z = _inner_pcg(
        "C S^-1 C^T", lambda v: C @ solve_s(Ct @ v), r3, None,
        state.inner_tol, max(SCHUR_MAXIT, state.inner_maxit), None,
    )
    return np.concatenate([x, y, z])


def apply_pss(state: PreconditionerState, r, stats: InnerStats | None = None) -> np.ndarray:
    """Exact block elimination for the (relaxed) shift-splitting preconditioner.

    With ``M_y = alpha I + C^T C / alpha`` and ``G`` the leading block::

        (M_y + B G^{-1} B^T) y = 2 r2 + (2/alpha) C^T r3 + 2 B G^{-1} r1
        x = G^{-1} (2 r1 - B^T y)
        z = (2 r3 - C y) / alpha

    The ``y`` system is solved by CG preconditioned with the exact factor of
    ``M_y``; every ``G^{-1}`` is a PCG solve with ICT(G). Its right-hand side
    carries a ``1/alpha`` factor, so its tolerance is tightened by
    ``min(1, alpha)`` to keep the residual of ``P w = r`` at the inner level.
    """
    b = state.blocks
    B, C = b.B, b.C
    Bt, Ct = B.T, C.T
    G = state.G
    a = state.alpha
    r1, r2, r3 = b.split(r)

    def solve_g(v):
        return _inner_pcg("G", G, v, state.ict_of_G, state.inner_tol, state.inner_maxit, stats)

    def op(v):
        return state.shat.matrix @ v + B @ solve_g(Bt @ v)

    rhs = 2.0 * r2 + (2.0 / a) * (Ct @ r3) + 2.0 * (B @ solve_g(r1))
    y = _inner_pcg(
        "M_y + B G^-1 B^T", op, rhs, state.shat.solve,
        state.inner_tol * min(1.0, a), max(SCHUR_MAXIT, state.inner_maxit), None,
    )
    x = solve_g(2.0 * r1 - Bt @ y)
    z = (2.0 * r3 - C @ y) / a
    return np.concatenate([x, y, z])
