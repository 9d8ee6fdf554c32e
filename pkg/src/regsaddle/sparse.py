"""Sparse and small dense linear-algebra kernels.

CSR is the only sparse format. Products are delegated to scipy's compiled
CSR kernels, which accumulate each row in ascending column order, so results
are reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import math

import numpy as np
import scipy.linalg
import scipy.sparse

__all__ = [
    "SparseMatrix",
    "StructuralError",
    "DimensionError",
    "NotPositiveDefiniteError",
    "NotSymmetricError",
    "csr_from_triplets",
    "csr_from_coo",
    "spmv",
    "transpose",
    "kron",
    "tridiag",
    "diag",
    "identity",
    "add",
    "scale",
    "matmul",
    "hstack",
    "block_matrix",
    "CholeskyFactor",
    "BandCholeskyFactor",
    "dense_cholesky",
    "cholesky_solve",
    "band_cholesky",
    "factor_spd",
    "jacobi_eigen_sym",
    "row_reduce",
]


class StructuralError(ValueError):
    """Malformed sparse structure (index out of range, bad shape)."""


class DimensionError(ValueError):
    """Operand dimensions do not conform."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, pivot: int, value: float | None = None):
        self.pivot = pivot
        self.value = value
        msg = f"matrix is not positive definite (pivot {pivot}"
        if value is not None:
            msg += f", value {value:.3e}"
        super().__init__(msg + ")")


class NotSymmetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Compressed sparse row matrix.

    ``row_ptr`` has length ``nrows + 1``; the column indices of row ``i`` are
    ``col_idx[row_ptr[i]:row_ptr[i+1]]`` and are strictly increasing.
    """

    nrows: int
    ncols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return len(self.values)

    @cached_property
    def _csr(self) -> scipy.sparse.csr_matrix:
        m = scipy.sparse.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=self.shape
        )
        m.has_sorted_indices = True
        return m

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        return self._csr

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_idx[lo:hi], self.values[lo:hi]

    def __matmul__(self, x):
        if isinstance(x, SparseMatrix):
            return matmul(self, x)
        return spmv(self, x)

    @cached_property
    def T(self) -> "SparseMatrix":
        return transpose(self)

    def is_symmetric(self) -> bool:
        t = transpose(self)
        return (
            np.array_equal(t.row_ptr, self.row_ptr)
            and np.array_equal(t.col_idx, self.col_idx)
            and np.array_equal(t.values, self.values)
        )

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = scipy.sparse.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        return cls(
            m.shape[0],
            m.shape[1],
            m.indptr.astype(np.int64),
            m.indices.astype(np.int64),
            m.data.astype(float),
        )

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        rows, cols = np.nonzero(a)
        return csr_from_coo(rows, cols, a[rows, cols], *a.shape)


def csr_from_coo(rows, cols, vals, nrows: int, ncols: int) -> SparseMatrix:
    """Canonical CSR from coordinate arrays; duplicates are summed.

    Entries whose duplicates sum to zero are kept as explicit zeros.
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    if not (len(rows) == len(cols) == len(vals)):
        raise StructuralError("row, column and value arrays differ in length")
    if nrows < 0 or ncols < 0:
        raise StructuralError("negative dimension")
    if len(rows):
        bad = (rows < 0) | (rows >= nrows) | (cols < 0) | (cols >= ncols)
        if bad.any():
            k = int(np.argmax(bad))
            raise StructuralError(
                f"entry ({rows[k]}, {cols[k]}) out of range for {nrows}x{ncols}"
            )
    key = rows * max(ncols, 1) + cols
    order = np.argsort(key, kind="stable")
    key, vals = key[order], vals[order]
    uniq, start = np.unique(key, return_index=True)
    summed = np.add.reduceat(vals, start) if len(vals) else vals
    r = uniq // max(ncols, 1)
    c = uniq % max(ncols, 1)
    row_ptr = np.zeros(nrows + 1, dtype=np.int64)
    np.add.at(row_ptr, r + 1, 1)
    np.cumsum(row_ptr, out=row_ptr)
    return SparseMatrix(nrows, ncols, row_ptr, c.astype(np.int64), summed.astype(float))


def csr_from_triplets(
    triplets: Iterable[tuple[int, int, float]], nrows: int, ncols: int
) -> SparseMatrix:
    """Build a CSR matrix from ``(row, col, value)`` triplets.

    >>> csr_from_triplets([(0, 1, 2.0), (0, 1, 3.0)], 1, 2).to_dense()
    array([[0., 5.]])
    """
    trip = list(triplets)
    if not trip:
        return csr_from_coo([], [], [], nrows, ncols)
    r, c, v = zip(*trip)
    return csr_from_coo(r, c, v, nrows, ncols)


def spmv(M: SparseMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) != M.ncols:
        raise DimensionError(f"vector of length {x.shape} against {M.shape} matrix")
    return M.to_scipy() @ x


def transpose(M: SparseMatrix) -> SparseMatrix:
    rows = np.repeat(np.arange(M.nrows, dtype=np.int64), np.diff(M.row_ptr))
    return csr_from_coo(M.col_idx, rows, M.values, M.ncols, M.nrows)


def _coo(M: SparseMatrix):
    rows = np.repeat(np.arange(M.nrows, dtype=np.int64), np.diff(M.row_ptr))
    return rows, M.col_idx, M.values


def kron(Ma: SparseMatrix, Mb: SparseMatrix) -> SparseMatrix:
    """Kronecker product; entry ``[i*rb + k, j*cb + l] = Ma[i, j] * Mb[k, l]``."""
    ra, ca, va = _coo(Ma)
    rb, cb, vb = _coo(Mb)
    rows = (ra[:, None] * Mb.nrows + rb[None, :]).ravel()
    cols = (ca[:, None] * Mb.ncols + cb[None, :]).ravel()
    vals = (va[:, None] * vb[None, :]).ravel()
    return csr_from_coo(rows, cols, vals, Ma.nrows * Mb.nrows, Ma.ncols * Mb.ncols)


def tridiag(n: int, sub: float, main: float, sup: float, scale: float = 1.0) -> SparseMatrix:
    """``scale * tridiag(sub, main, sup)`` of order ``n``.

    Zero diagonals are not stored.
    """
    if n < 1:
        raise StructuralError("tridiag needs n >= 1")
    rows, cols, vals = [], [], []
    i = np.arange(n)
    for off, v in ((-1, sub), (0, main), (1, sup)):
        if v == 0:
            continue
        r = i[max(0, -off): n - max(0, off)]
        rows.append(r)
        cols.append(r + off)
        vals.append(np.full(len(r), scale * v))
    if not rows:
        return csr_from_coo([], [], [], n, n)
    return csr_from_coo(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), n, n)


def diag(d) -> SparseMatrix:
    d = np.asarray(d, dtype=float)
    i = np.arange(len(d))
    return csr_from_coo(i, i, d, len(d), len(d))


def identity(n: int) -> SparseMatrix:
    return diag(np.ones(n))


def add(*terms: SparseMatrix) -> SparseMatrix:
    """Entrywise sum of same-shape matrices."""
    shape = terms[0].shape
    if any(t.shape != shape for t in terms):
        raise DimensionError("shape mismatch in add")
    parts = [_coo(t) for t in terms]
    return csr_from_coo(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        *shape,
    )


def scale(M: SparseMatrix, s: float) -> SparseMatrix:
    return SparseMatrix(M.nrows, M.ncols, M.row_ptr, M.col_idx, s * M.values)


def matmul(Ma: SparseMatrix, Mb: SparseMatrix) -> SparseMatrix:
    if Ma.ncols != Mb.nrows:
        raise DimensionError(f"{Ma.shape} @ {Mb.shape}")
    return SparseMatrix.from_scipy(Ma.to_scipy() @ Mb.to_scipy())


def block_matrix(blocks: Sequence[Sequence[SparseMatrix | None]]) -> SparseMatrix:
    """Assemble a block matrix; ``None`` marks a zero block.

    Every block row and block column needs at least one non-``None`` entry
    to fix its size.
    """
    nbr, nbc = len(blocks), len(blocks[0])
    heights = [None] * nbr
    widths = [None] * nbc
    for i, brow in enumerate(blocks):
        if len(brow) != nbc:
            raise StructuralError("ragged block layout")
        for j, b in enumerate(brow):
            if b is None:
                continue
            if heights[i] not in (None, b.nrows) or widths[j] not in (None, b.ncols):
                raise DimensionError(f"block ({i}, {j}) has inconsistent shape {b.shape}")
            heights[i], widths[j] = b.nrows, b.ncols
    if None in heights or None in widths:
        raise StructuralError("a block row or column is entirely empty")
    roff = np.concatenate([[0], np.cumsum(heights)])
    coff = np.concatenate([[0], np.cumsum(widths)])
    rows, cols, vals = [], [], []
    for i, brow in enumerate(blocks):
        for j, b in enumerate(brow):
            if b is None:
                continue
            r, c, v = _coo(b)
            rows.append(r + roff[i])
            cols.append(c + coff[j])
            vals.append(v)
    return csr_from_coo(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), roff[-1], coff[-1]
    )


def hstack(*mats: SparseMatrix) -> SparseMatrix:
    return block_matrix([list(mats)])


# --------------------------------------------------------------------------
# dense Cholesky


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L @ L.T == M``."""

    L: np.ndarray

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def solve(self, b) -> np.ndarray:
        return cholesky_solve(self, b)


@dataclass(frozen=True)
class BandCholeskyFactor:
    """Lower band storage as produced by LAPACK ``pbtrf``."""

    ab: np.ndarray
    bandwidth: int

    @property
    def n(self) -> int:
        return self.ab.shape[1]

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionError(f"rhs length {b.shape[0]} for order {self.n}")
        return scipy.linalg.cho_solve_banded((self.ab, True), b, check_finite=False)


def _check_symmetric(M: np.ndarray, rtol: float) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"square matrix required, got {M.shape}")
    scale_ = max(np.abs(M).max(initial=0.0), np.finfo(float).tiny)
    asym = np.abs(M - M.T).max(initial=0.0)
    if asym > rtol * scale_:
        raise NotSymmetricError(f"asymmetry {asym:.3e} exceeds {rtol:g} relative")


def dense_cholesky(M, sym_rtol: float = 1e-12) -> CholeskyFactor:
    """Cholesky factor of a dense SPD matrix (LAPACK ``potrf``)."""
    M = np.asarray(M, dtype=float)
    _check_symmetric(M, sym_rtol)
    if M.shape[0] == 0:
        return CholeskyFactor(np.zeros((0, 0)))
    c, info = scipy.linalg.lapack.dpotrf(M, lower=1, clean=1)
    if info > 0:
        k = info - 1
        return_val = M[k, k] - c[k, :k] @ c[k, :k]
        raise NotPositiveDefiniteError(k, float(return_val))
    if info < 0:
        raise ValueError(f"potrf argument {-info} invalid")
    return CholeskyFactor(np.tril(c))


def cholesky_solve(factor: CholeskyFactor, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factor.n:
        raise DimensionError(f"rhs length {b.shape[0]} for order {factor.n}")
    y = scipy.linalg.solve_triangular(factor.L, b, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(factor.L, y, lower=True, trans="T", check_finite=False)


def bandwidth(M: SparseMatrix) -> int:
    rows, cols, _ = _coo(M)
    return int(np.abs(rows - cols).max(initial=0))


def band_cholesky(M: SparseMatrix, bw: int | None = None) -> BandCholeskyFactor:
    """Banded Cholesky of a sparse SPD matrix; bandwidth detected if not given."""
    if M.nrows != M.ncols:
        raise DimensionError("square matrix required")
    if bw is None:
        bw = bandwidth(M)
    rows, cols, vals = _coo(M)
    low = rows >= cols
    ab = np.zeros((bw + 1, M.nrows))
    ab[rows[low] - cols[low], cols[low]] = vals[low]
    c, info = scipy.linalg.lapack.dpbtrf(ab, lower=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1)
    return BandCholeskyFactor(c, bw)


DENSE_CHOLESKY_LIMIT = 5000


def factor_spd(M: SparseMatrix) -> CholeskyFactor | BandCholeskyFactor:
    """Exact factorization of a sparse SPD matrix.

    Dense up to ``DENSE_CHOLESKY_LIMIT``, banded above it.
    """
    if M.nrows <= DENSE_CHOLESKY_LIMIT:
        return dense_cholesky(M.to_dense())
    return band_cholesky(M)


# --------------------------------------------------------------------------
# symmetric eigenproblem


def jacobi_eigen_sym(
    M, tol: float = 1e-12, max_sweeps: int = 100, sym_rtol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns.
    """
    a = np.array(M, dtype=float)
    _check_symmetric(a, sym_rtol)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    fro = np.linalg.norm(a)
    if n < 2 or fro == 0.0:
        w = np.diag(a).copy()
        order = np.argsort(w, kind="stable")
        return w[order], v[:, order]

    def off(a):
        # direct sum of squares; subtracting the diagonal from ||a||_F cancels
        return np.linalg.norm(a - np.diag(np.diag(a)))

    for _ in range(max_sweeps):
        if off(a) <= tol * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 if theta == 0.0 else math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise np.linalg.LinAlgError("Jacobi sweeps did not converge")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def row_reduce(M, rtol: float = 1e-10) -> tuple[int, np.ndarray]:
    """Rank and null-space basis by Gaussian elimination with partial pivoting.

    A pivot is accepted when its magnitude exceeds ``rtol * ||M||_F``.
    The null-space basis is returned as columns (not orthonormalised).
    """
    a = np.array(M, dtype=float)
    nr, nc = a.shape
    thresh = rtol * np.linalg.norm(a)
    pivots = []
    r = 0
    for c in range(nc):
        if r == nr:
            break
        k = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[k, c]) <= thresh:
            continue
        a[[r, k]] = a[[k, r]]
        a[r] /= a[r, c]
        others = np.arange(nr) != r
        a[others] -= np.outer(a[others, c], a[r])
        pivots.append(c)
        r += 1
    rank = len(pivots)
    free = [c for c in range(nc) if c not in pivots]
    basis = np.zeros((nc, len(free)))
    for j, f in enumerate(free):
        basis[f, j] = 1.0
        for i, pc in enumerate(pivots):
            basis[pc, j] = -a[i, f]
    return rank, basis
