"""Double saddle-point test problems.

The model problem is the Kronecker-structured Stokes-like system on a
``p x p`` grid with ``h = 1/(p+1)``::

    T = (nu/h^2) tridiag(-1, 2, -1)     F = (1/h) tridiag(0, 1, -1)
    E = diag(1, p+1, 2p+1, ..., p^2-p+1)

    A = blockdiag(I(x)T + T(x)I, I(x)T + T(x)I)   (2p^2 x 2p^2)
    B = [I(x)F, F(x)I]                            (p^2 x 2p^2)
    C = E(x)F                                     (p^2 x p^2)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sparse as sp
from .sparse import SparseMatrix

VARIANTS = ("minus", "plus")


@dataclass(frozen=True, eq=False)
class ProblemBlocks:
    A: SparseMatrix
    B: SparseMatrix
    C: SparseMatrix
    p: int | None = None
    nu: float | None = None
    T: SparseMatrix | None = None
    F: SparseMatrix | None = None
    E: SparseMatrix | None = None

    @property
    def n(self) -> int:
        return self.A.nrows

    @property
    def m(self) -> int:
        return self.B.nrows

    @property
    def l(self) -> int:  # noqa: E743
        return self.C.nrows

    @property
    def N(self) -> int:
        return self.n + self.m + self.l

    def split(self, w):
        """View a length-N vector as its ``(x, y, z)`` blocks."""
        n, m = self.n, self.m
        return w[:n], w[n:n + m], w[n + m:]


@dataclass(frozen=True, eq=False)
class SaddleSystem:
    matrix: SparseMatrix
    variant: str
    n: int
    m: int
    l: int  # noqa: E741

    @property
    def N(self) -> int:
        return self.n + self.m + self.l

    def __matmul__(self, w):
        return self.matrix @ w


def check_blocks(A: SparseMatrix, B: SparseMatrix, C: SparseMatrix) -> None:
    if A.nrows != A.ncols:
        raise sp.DimensionError(f"A must be square, got {A.shape}")
    if B.ncols != A.nrows:
        raise sp.DimensionError(f"B is {B.shape} but A is {A.shape}")
    if C.ncols != B.nrows:
        raise sp.DimensionError(f"C is {C.shape} but B is {B.shape}")


def make_blocks(A, B, C) -> ProblemBlocks:
    """Wrap arbitrary dense or sparse blocks (used for small hand examples)."""
    conv = [x if isinstance(x, SparseMatrix) else SparseMatrix.from_dense(x) for x in (A, B, C)]
    check_blocks(*conv)
    return ProblemBlocks(*conv)


def build_example1(p: int, nu: float = 1.0) -> ProblemBlocks:
    """Model double saddle-point blocks on a ``p x p`` grid with ``h = 1/(p+1)``.

    ``A = blockdiag(L, L)`` with ``L = I (x) T + T (x) I`` and ``T = nu/h^2 tridiag(-1, 2, -1)``,
    ``B = [I (x) F, F (x) I]`` with ``F = (1/h) bidiag(1, -1)`` and
    ``C = E (x) F`` with ``E = diag(1, 1 + p, ..., 1 + (p-1) p)``.
    """
    if p < 2:
        raise ValueError(f"grid parameter p must be >= 2, got {p}")
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    h = 1.0 / (p + 1)
    I = sp.identity(p)
    T = sp.tridiag(p, -1.0, 2.0, -1.0, nu / h**2)
    F = sp.tridiag(p, 0.0, 1.0, -1.0, 1.0 / h)
    E = sp.diag(1.0 + p * np.arange(p))
    lap = sp.add(sp.kron(I, T), sp.kron(T, I))
    A = sp.block_matrix([[lap, None], [None, lap]])
    B = sp.hstack(sp.kron(I, F), sp.kron(F, I))
    C = sp.kron(E, F)
    return ProblemBlocks(A, B, C, p=p, nu=nu, T=T, F=F, E=E)


def assemble_saddle(blocks: ProblemBlocks, variant: str = "minus") -> SaddleSystem:
    """Full operator ``[[A, B^T, 0], [s B, 0, s C^T], [0, C, 0]]`` with
    ``s = -1`` for the nonsymmetric variant and ``s = +1`` for the symmetric one."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    s = -1.0 if variant == "minus" else 1.0
    A, B, C = blocks.A, blocks.B, blocks.C
    Bt, Ct = sp.transpose(B), sp.transpose(C)
    matrix = sp.block_matrix(
        [
            [A, Bt, None],
            [sp.scale(B, s), None, sp.scale(Ct, s)],
            [None, C, None],
        ]
    )
    return SaddleSystem(matrix, variant, blocks.n, blocks.m, blocks.l)


def manufactured_rhs(system: SaddleSystem, w_star=None):
    """Right-hand side ``b = K @ w_star``; ``w_star`` defaults to all ones."""
    if w_star is None:
        w_star = np.ones(system.N)
    w_star = np.asarray(w_star, dtype=float)
    if w_star.shape != (system.N,):
        raise sp.DimensionError(f"w_star has shape {w_star.shape}, expected ({system.N},)")
    return system.matrix @ w_star, w_star
