"""Incomplete Cholesky factorization with threshold dropping."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from . import sparse as sp
from .sparse import SparseMatrix

__all__ = ["IctFactor", "IctBreakdown", "ict", "ict_solve"]


class IctBreakdown(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class IctFactor:
    L: SparseMatrix
    applied_shift: float = 0.0

    @property
    def n(self) -> int:
        return self.L.nrows

    @property
    def Lt(self) -> SparseMatrix:
        return self.L.T

    def solve(self, r) -> np.ndarray:
        return ict_solve(self, r)

    def __call__(self, r) -> np.ndarray:
        return ict_solve(self, r)


def _lower_columns(M: SparseMatrix):
    """Column j of the lower triangle as (rows, vals), plus full column norms."""
    Mt = sp.transpose(M)  # row j of Mt is column j of M
    n = M.nrows
    cols = []
    sq = np.zeros(n)
    for j in range(n):
        idx, val = Mt.row(j)
        keep = idx >= j
        r, v = idx[keep], val[keep]
        cols.append((r.tolist(), v.tolist()))
        sq[j] += np.sum(v * v)
        # the strictly-upper part of column j mirrors row j of the lower triangle
        lo = r > j
        sq[r[lo]] += v[lo] ** 2
    return cols, np.sqrt(sq)


def _factor(cols, colnorm, droptol, shift, diag):
    n = len(cols)
    Lrows = [[] for _ in range(n)]  # Lrows[i]: list of (k, L[i,k]) for k < i
    Lcols_r: list[list[int]] = []
    Lcols_v: list[list[float]] = []
    for j in range(n):
        r0, v0 = cols[j]
        acc = dict(zip(r0, v0))
        if shift:
            acc[j] = acc.get(j, 0.0) + shift * diag[j]
        for k, ljk in Lrows[j]:
            rk, vk = Lcols_r[k], Lcols_v[k]
            start = bisect.bisect_left(rk, j)
            for t in range(start, len(rk)):
                i = rk[t]
                acc[i] = acc.get(i, 0.0) - vk[t] * ljk
        d = acc.pop(j, 0.0)
        if not d > 0.0 or not math.isfinite(d):
            raise IctBreakdown(f"non-positive pivot {d:.3e} at column {j}")
        ljj = math.sqrt(d)
        thresh = droptol * colnorm[j]
        rows = [j]
        vals = [ljj]
        for i in sorted(acc):
            # compared before scaling by the pivot so the rule is invariant
            # under M -> c*M
            if abs(acc[i]) < thresh:
                continue
            lij = acc[i] / ljj
            rows.append(i)
            vals.append(lij)
            Lrows[i].append((j, lij))
        Lcols_r.append(rows)
        Lcols_v.append(vals)
    return Lcols_r, Lcols_v


def ict(M: SparseMatrix, droptol: float = 1e-2) -> IctFactor:
    """Threshold incomplete Cholesky ``M ~ L L^T`` (left-looking, by columns).

    Only the lower triangle of ``M`` is read. An off-diagonal ``L[i, j]`` is
    dropped when ``|L[i, j] * L[j, j]| < droptol * ||M[:, j]||_2``, i.e. the
    update is tested before division by the pivot; diagonals are kept.
    A non-positive pivot triggers a restart on ``M + sigma * diag(M)`` with
    ``sigma = 1e-3, 2e-3, 4e-3, ...`` up to 1.
    """
    if not droptol > 0:
        raise ValueError(f"droptol must be positive, got {droptol}")
    if M.nrows != M.ncols:
        raise sp.DimensionError(f"square matrix required, got {M.shape}")
    cols, colnorm = _lower_columns(M)
    diag = M.diagonal()
    shift = 0.0
    while True:
        try:
            Lr, Lv = _factor(cols, colnorm, droptol, shift, diag)
            break
        except IctBreakdown:
            shift = 1e-3 if shift == 0.0 else 2.0 * shift
            if shift > 1.0:
                raise
    n = M.nrows
    # columns of L are rows of L^T
    ptr = np.zeros(n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(r) for r in Lr])
    Lt = SparseMatrix(
        n,
        n,
        ptr,
        np.fromiter((i for r in Lr for i in r), dtype=np.int64, count=ptr[-1]),
        np.fromiter((v for c in Lv for v in c), dtype=float, count=ptr[-1]),
    )
    L = sp.transpose(Lt)
    L.__dict__["T"] = Lt  # seed the cached transpose
    return IctFactor(L, shift)


def ict_solve(factor: IctFactor, r) -> np.ndarray:
    """``(L L^T)^{-1} r`` by forward then backward substitution."""
    r = np.asarray(r, dtype=float)
    if r.shape != (factor.n,):
        raise sp.DimensionError(f"vector of shape {r.shape} for order {factor.n}")
    y = scipy.sparse.linalg.spsolve_triangular(factor.L.to_scipy(), r, lower=True)
    return scipy.sparse.linalg.spsolve_triangular(factor.Lt.to_scipy(), y, lower=False)
