"""Krylov solvers: PCG, left-preconditioned GMRES, flexible GMRES, MINRES.

All solvers start from the zero vector and return ``(x, SolveReport)``.
Preconditioners are plain callables ``r -> z``; GMRES/FGMRES/PCG never
assume they are linear.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sparse import SparseMatrix

__all__ = [
    "LinearOperator",
    "SolveReport",
    "InnerStats",
    "IndefiniteError",
    "IndefinitePreconditionerError",
    "as_operator",
    "pcg",
    "gmres",
    "fgmres",
    "minres",
]

Vector = np.ndarray


class IndefiniteError(ArithmeticError):
    """CG met a direction with ``p^T A p <= 0`` (or non-finite arithmetic)."""

    def __init__(self, iteration: int, value: float):
        self.iteration = iteration
        self.value = value
        super().__init__(f"operator not positive definite at iteration {iteration} (pAp={value:.3e})")


class IndefinitePreconditionerError(ArithmeticError):
    def __init__(self, iteration: int, value: float):
        self.iteration = iteration
        self.value = value
        super().__init__(f"preconditioner not positive definite at iteration {iteration} (r'z={value:.3e})")


@dataclass(frozen=True)
class LinearOperator:
    n: int
    apply: Callable[[Vector], Vector]

    def __call__(self, x: Vector) -> Vector:
        return self.apply(x)


def as_operator(A) -> Callable[[Vector], Vector]:
    if A is None:
        return _identity
    if isinstance(A, SparseMatrix):
        return A.__matmul__
    if isinstance(A, np.ndarray):
        return A.__matmul__
    if hasattr(A, "matvec"):
        return A.matvec
    if callable(A):
        return A
    raise TypeError(f"cannot use {type(A).__name__} as an operator")


def _identity(x: Vector) -> Vector:
    return x.copy()


@dataclass
class SolveReport:
    outer_iters: int = 0
    inner_iters_total: int = 0
    inner_calls: int = 0
    wall_seconds: float = 0.0
    err: float = math.nan
    res: float = math.nan
    converged: bool = False
    status: str = ""
    history: list[float] = field(default_factory=list)

    @property
    def inner_iters_per_outer(self) -> float:
        """Average inner iterations per preconditioner application."""
        if self.inner_calls == 0:
            return 0.0
        return self.inner_iters_total / self.inner_calls

    @property
    def iter_pcg(self) -> int:
        return int(round(self.inner_iters_per_outer))


@dataclass
class InnerStats:
    """Mutable tally of inner-solver work, owned by whoever runs the outer solve."""

    iters: int = 0
    calls: int = 0

    def record(self, report: SolveReport) -> None:
        self.iters += report.outer_iters
        self.calls += 1


def _finish(report: SolveReport, t0: float, x, x_star) -> None:
    report.wall_seconds = time.perf_counter() - t0
    if x_star is not None:
        x_star = np.asarray(x_star)
        report.err = float(np.linalg.norm(x - x_star) / np.linalg.norm(x_star))


def _true_res(op, b, x, bnorm):
    return float(np.linalg.norm(b - op(x)) / bnorm)


# --------------------------------------------------------------------------


def pcg(op, b, precond=None, tol: float = 1e-6, maxit: int = 100, callback=None, x_star=None):
    """Preconditioned conjugate gradients.

    Stops when the recursively updated residual satisfies
    ``||r|| <= tol * ||b||``; ``report.res`` holds that ratio.
    """
    t0 = time.perf_counter()
    A = as_operator(op)
    M = as_operator(precond)
    b = np.asarray(b, dtype=float)
    report = SolveReport()
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        report.converged, report.res, report.status = True, 0.0, "converged"
        _finish(report, t0, x, x_star)
        return x, report
    r = b.copy()
    z = M(r)
    rz = float(r @ z)
    if not rz > 0.0:
        raise IndefiniteError(0, rz)
    p = z.copy()
    for k in range(1, maxit + 1):
        q = A(p)
        pq = float(p @ q)
        if not pq > 0.0 or not math.isfinite(pq):
            raise IndefiniteError(k, pq)
        a = rz / pq
        x += a * p
        r -= a * q
        rel = float(np.linalg.norm(r) / bnorm)
        report.history.append(rel)
        report.outer_iters = k
        if callback is not None:
            callback(x)
        if rel <= tol:
            report.converged = True
            break
        z = M(r)
        rz_new = float(r @ z)
        if not rz_new > 0.0 or not math.isfinite(rz_new):
            raise IndefiniteError(k, rz_new)
        p = z + (rz_new / rz) * p
        rz = rz_new
    report.res = report.history[-1] if report.history else 1.0
    report.status = "converged" if report.converged else "maxit"
    _finish(report, t0, x, x_star)
    return x, report


# --------------------------------------------------------------------------


def _givens(a: float, b: float) -> tuple[float, float, float]:
    if b == 0.0:
        return 1.0, 0.0, a
    r = math.hypot(a, b)
    return a / r, b / r, r


def _arnoldi_gmres(op, b, precond, flexible: bool, tol, maxit, callback, x_star):
    t0 = time.perf_counter()
    A = as_operator(op)
    M = as_operator(precond)
    b = np.asarray(b, dtype=float)
    N = len(b)
    report = SolveReport()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        x = np.zeros(N)
        report.converged, report.res, report.status = True, 0.0, "converged"
        _finish(report, t0, x, x_star)
        return x, report

    r0 = b if flexible else M(b)
    beta = float(np.linalg.norm(r0))
    V = [r0 / beta]
    Z = []  # preconditioned basis, flexible only
    H = np.zeros((maxit + 1, maxit))
    cs = np.zeros(maxit)
    sn = np.zeros(maxit)
    g = np.zeros(maxit + 1)
    g[0] = beta

    def solution(k):
        R = H[:k, :k]
        y = np.zeros(k)
        for i in range(k - 1, -1, -1):
            y[i] = (g[i] - R[i, i + 1:k] @ y[i + 1:k]) / R[i, i]
        basis = Z if flexible else V
        x = np.zeros(N)
        for i in range(k):
            x += y[i] * basis[i]
        return x

    x = np.zeros(N)
    status = "maxit"
    for k in range(maxit):
        if flexible:
            zk = M(V[k])
            Z.append(zk)
            w = A(zk)
        else:
            w = M(A(V[k]))
        wnorm0 = np.linalg.norm(w)
        for i in range(k + 1):
            H[i, k] = w @ V[i]
            w -= H[i, k] * V[i]
        hnext = np.linalg.norm(w)
        if hnext < 1e-3 * wnorm0:
            # one reorthogonalization pass
            for i in range(k + 1):
                c = w @ V[i]
                H[i, k] += c
                w -= c * V[i]
            hnext = np.linalg.norm(w)
        H[k + 1, k] = hnext
        for i in range(k):
            t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
            H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
            H[i, k] = t
        cs[k], sn[k], H[k, k] = _givens(H[k, k], H[k + 1, k])
        H[k + 1, k] = 0.0
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]
        est = abs(g[k + 1]) / beta
        report.history.append(est)
        report.outer_iters = k + 1
        breakdown = hnext <= 1e-14 * max(wnorm0, 1e-300)
        if callback is not None:
            x = solution(k + 1)
            callback(x)
        if est <= tol or breakdown:
            if callback is None:
                x = solution(k + 1)
            report.res = _true_res(A, b, x, bnorm)
            if report.res <= tol:
                report.converged = True
                status = "converged"
                break
            if breakdown:
                status = "breakdown"
                break
        if k + 1 < maxit:
            V.append(w / hnext)
    else:
        x = solution(report.outer_iters)
        report.res = _true_res(A, b, x, bnorm)

    report.status = status
    _finish(report, t0, x, x_star)
    return x, report


def gmres(op, b, left_precond=None, tol: float = 1e-12, maxit: int = 500, callback=None, x_star=None):
    """Full GMRES on ``M^{-1} A x = M^{-1} b`` (left preconditioning, no restart).

    Iteration proceeds while the preconditioned residual estimate is above
    ``tol``; once it is not, convergence must be confirmed by the true
    residual ``||b - A x|| / ||b|| <= tol``, otherwise iteration continues.
    """
    return _arnoldi_gmres(op, b, left_precond, False, tol, maxit, callback, x_star)


def fgmres(op, b, right_precond=None, tol: float = 1e-7, maxit: int = 500, callback=None, x_star=None):
    """Flexible GMRES: right preconditioning that may change between calls."""
    return _arnoldi_gmres(op, b, right_precond, True, tol, maxit, callback, x_star)


# --------------------------------------------------------------------------


def minres(op, b, precond=None, tol: float = 1e-7, maxit: int = 500, callback=None, x_star=None):
    """Preconditioned MINRES for symmetric ``A`` with an SPD preconditioner.

    The stopping quantity is ``||r_k||_{M^-1} / ||b||_{M^-1}``, which the
    recurrence makes non-increasing; ``report.history`` records it and
    ``report.res`` holds the true relative residual at exit.
    """
    t0 = time.perf_counter()
    A = as_operator(op)
    M = as_operator(precond)
    b = np.asarray(b, dtype=float)
    n = len(b)
    report = SolveReport()
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)

    r1 = b.copy()
    y = M(r1)
    beta1 = float(r1 @ y)
    if beta1 < 0.0:
        raise IndefinitePreconditionerError(0, beta1)
    if bnorm == 0.0 or beta1 == 0.0:
        report.converged, report.res, report.status = True, 0.0, "converged"
        _finish(report, t0, x, x_star)
        return x, report
    beta1 = math.sqrt(beta1)

    oldb, beta, dbar, epsln, phibar = 0.0, beta1, 0.0, 0.0, beta1
    cs, sn = -1.0, 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    r2 = r1
    eps = np.finfo(float).eps
    for itn in range(1, maxit + 1):
        v = y / beta
        y = A(v)
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = float(v @ y)
        y = y - (alfa / beta) * r2
        r1, r2 = r2, y
        y = M(r2)
        oldb = beta
        beta2 = float(r2 @ y)
        if beta2 < 0.0:
            raise IndefinitePreconditionerError(itn, beta2)
        beta = math.sqrt(beta2)

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(math.hypot(gbar, beta), eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1, w2 = w2, w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w

        rel = phibar / beta1
        report.history.append(rel)
        report.outer_iters = itn
        if callback is not None:
            callback(x)
        if rel <= tol or beta == 0.0:
            report.converged = True
            break
    report.res = _true_res(A, b, x, bnorm)
    report.status = "converged" if report.converged else "maxit"
    _finish(report, t0, x, x_star)
    return x, report
