"""Constructive spectral analysis of the regularized preconditioner.

For ``P_R = [[A, B^T, 0], [-B, S, 0], [0, C, aI]]`` with the exact Schur
complement ``S = B A^{-1} B^T``, the generalized problem
``K_minus w = lam P_R w`` splits into three eigenvector families:

* ``lam = 1`` with ``w = (x; 0; 0)`` for any ``x``;
* ``lam = 1/2`` with ``w = (-A^{-1} B^T y; y; 0)`` for ``y`` in null(C);
* for each eigenpair ``(eta, z)`` of ``S_C = C S^{-1} C^T`` the two roots of
  ``2 a lam^2 - (a + eta) lam + eta = 0``, with
  ``y = S^{-1} C^T z / (1 - 2 lam)`` and ``x = -A^{-1} B^T y``.

Everything here is real dense arithmetic at small sizes; candidates are
checked through their residuals instead of a nonsymmetric eigensolver.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import sparse as sp
from .problem import ProblemBlocks, assemble_saddle

__all__ = [
    "SchurChain",
    "RootPair",
    "IntervalReport",
    "Eigenpair",
    "SpectrumReport",
    "GuardError",
    "compute_schur_chain",
    "eta_of_lambda",
    "lambda_roots",
    "printed_bound_interval",
    "assemble_pr_exact",
    "enumerate_and_verify_spectrum",
    "dump_spectrum_csv",
    "parse_spectrum_csv",
]

MAX_P = 8
MAX_N = 2 * MAX_P**2
CONSISTENCY_RTOL = 1e-10
SYM_TOL = 1e-9


class GuardError(ValueError):
    """Problem too large for the dense spectral machinery."""


@dataclass(frozen=True, eq=False)
class SchurChain:
    S: np.ndarray
    S_C: np.ndarray
    eta: np.ndarray  # ascending eigenvalues of S_C
    Z: np.ndarray  # orthonormal eigenvectors, as columns
    A_factor: sp.CholeskyFactor
    S_factor: sp.CholeskyFactor
    asymmetry: tuple[float, float]  # relative, before symmetrization


def _guard(blocks: ProblemBlocks) -> None:
    if blocks.p is not None:
        if blocks.p > MAX_P:
            raise GuardError(f"dense spectral analysis limited to p <= {MAX_P}, got p={blocks.p}")
    elif blocks.n > MAX_N:
        raise GuardError(f"dense spectral analysis limited to n <= {MAX_N}, got n={blocks.n}")


def _symmetrize(M: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    scale = max(np.abs(M).max(initial=0.0), np.finfo(float).tiny)
    asym = float(np.abs(M - M.T).max(initial=0.0) / scale)
    if asym >= SYM_TOL:
        raise sp.NotSymmetricError(f"{what} asymmetry {asym:.2e} exceeds {SYM_TOL:g}")
    return 0.5 * (M + M.T), asym


def compute_schur_chain(blocks: ProblemBlocks) -> SchurChain:
    """``S = B A^{-1} B^T`` and ``S_C = C S^{-1} C^T`` densely, plus eig(S_C)."""
    _guard(blocks)
    A = blocks.A.to_dense()
    B = blocks.B.to_dense()
    C = blocks.C.to_dense()
    fa = sp.dense_cholesky(A)
    S, asym_s = _symmetrize(B @ fa.solve(B.T), "S")
    fs = sp.dense_cholesky(S)
    S_C, asym_c = _symmetrize(C @ fs.solve(C.T), "S_C")
    eta, Z = sp.jacobi_eigen_sym(S_C)
    return SchurChain(S, S_C, eta, Z, fa, fs, (asym_s, asym_c))


def eta_of_lambda(alpha: float, lam):
    """``eta = alpha lam (2 lam - 1) / (lam - 1)``; works for complex ``lam``."""
    if lam == 1:
        raise ZeroDivisionError("eta(lambda) has a pole at lambda = 1")
    return alpha * lam * (2 * lam - 1) / (lam - 1)


@dataclass(frozen=True)
class RootPair:
    """Roots of ``a2 lam^2 - a1 lam + a0 = 0`` and whether each root maps back
    to ``eta`` through :func:`eta_of_lambda`."""

    form: str
    eta: float
    roots: tuple[complex, complex]
    consistent: tuple[bool, bool]

    @property
    def is_real(self) -> bool:
        return all(r.imag == 0.0 for r in self.roots)


def _quadratic(a2: float, a1: float, a0: float) -> tuple[complex, complex]:
    # a2 x^2 - a1 x + a0, roots ordered larger (real part) first
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc >= 0.0:
        s = math.sqrt(disc)
        big = (a1 + math.copysign(s, a1)) / (2.0 * a2)
        small = a0 / (a2 * big) if big != 0.0 else (a1 - s) / (2.0 * a2)
        lo, hi = sorted((big, small))
        return complex(hi), complex(lo)
    s = cmath.sqrt(disc)
    return (a1 + s) / (2.0 * a2), (a1 - s) / (2.0 * a2)


def lambda_roots(alpha: float, eta: float, form: str = "corrected") -> RootPair:
    """Candidate eigenvalues attached to an eigenvalue ``eta`` of ``S_C``.

    ``form="corrected"`` solves ``2 a lam^2 - (a + eta) lam + eta = 0``, which
    follows from clearing the denominator of :func:`eta_of_lambda`.
    ``form="printed"`` solves the printed variant
    ``2 a lam^2 - a (eta + 1) lam + eta = 0``.
    """
    if not alpha > 0 or not eta > 0:
        raise ValueError(f"alpha and eta must be positive, got {alpha}, {eta}")
    if form == "corrected":
        roots = _quadratic(2.0 * alpha, alpha + eta, eta)
    elif form == "printed":
        roots = _quadratic(2.0 * alpha, alpha * (eta + 1.0), eta)
    else:
        raise ValueError(f"unknown form {form!r}")
    flags = []
    for r in roots:
        if r == 1:
            flags.append(False)
            continue
        lam = r.real if r.imag == 0.0 else r
        flags.append(abs(eta_of_lambda(alpha, lam) - eta) <= CONSISTENCY_RTOL * eta)
    return RootPair(form, eta, roots, tuple(flags))


@dataclass(frozen=True)
class IntervalReport:
    """Printed interval endpoints and the per-root ranges from the proof.

    Negative radicands make the corresponding endpoint ``nan`` and clear the
    matching ``*_valid`` flag.
    """

    alpha: float
    eta_min: float
    eta_max: float
    radicand_lo: float
    radicand_hi: float
    lo: float
    hi: float
    lambda1_range: tuple[float, float]
    lambda2_range: tuple[float, float]

    @property
    def lo_valid(self) -> bool:
        return self.radicand_lo >= 0.0

    @property
    def hi_valid(self) -> bool:
        return self.radicand_hi >= 0.0

    @property
    def valid(self) -> bool:
        return self.lo_valid and self.hi_valid

    def contains(self, lam: float, tol: float = 1e-12) -> bool | None:
        if not self.valid:
            return None
        return self.lo - tol <= lam <= self.hi + tol


def printed_bound_interval(alpha: float, eta_min: float, eta_max: float) -> IntervalReport:
    """Evaluate the printed eigenvalue-interval formulas verbatim (``alpha >= 2``)."""
    if alpha < 2:
        raise ValueError(f"interval formulas assume alpha >= 2, got {alpha}")
    rad_lo = 1.0 - 8.0 * eta_min / (alpha * (eta_max + 1.0))
    rad_hi = 1.0 - 8.0 * eta_max / (alpha * (eta_min + 1.0))
    s_lo = math.sqrt(rad_lo) if rad_lo >= 0 else math.nan
    s_hi = math.sqrt(rad_hi) if rad_hi >= 0 else math.nan
    q_lo = 0.25 * (eta_min + 1.0)
    q_hi = 0.25 * (eta_max + 1.0)
    return IntervalReport(
        alpha, eta_min, eta_max, rad_lo, rad_hi,
        q_lo * s_lo, q_hi * s_hi,
        (q_lo * (1.0 + s_lo), q_hi * (1.0 + s_hi)),
        (q_lo * (1.0 - s_lo), q_hi * (1.0 - s_hi)),
    )


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Eigenpair:
    value: complex
    cls: str  # "one", "half" or "quad"
    residual: float  # nan when not verified (complex candidates)
    eta: float = math.nan

    @property
    def verified(self) -> bool:
        return not math.isnan(self.residual)


@dataclass
class SpectrumReport:
    alpha: float
    n: int
    m: int
    l: int  # noqa: E741
    eigenpairs: list[Eigenpair] = field(default_factory=list)
    eta_min: float = math.nan
    eta_max: float = math.nan
    null_dim_C: int = 0
    interval: IntervalReport | None = None
    corrected_roots: list[RootPair] = field(default_factory=list)
    printed_roots: list[RootPair] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.n + self.m + self.l

    def count(self, cls: str) -> int:
        return sum(1 for e in self.eigenpairs if e.cls == cls)

    @property
    def total(self) -> int:
        return len(self.eigenpairs)

    def max_residual(self, cls: str) -> float:
        r = [e.residual for e in self.eigenpairs if e.cls == cls and e.verified]
        return max(r, default=0.0)

    def eta_containment(self, tol: float = 1e-8) -> list[bool]:
        """For each verified real eigenvalue outside {1, 1/2}: does
        ``eta(lam)`` fall in ``[eta_min - tol, eta_max + tol]``?"""
        out = []
        for e in self.eigenpairs:
            lam = e.value.real
            if not e.verified or e.value.imag != 0.0 or lam in (1.0, 0.5):
                continue
            et = eta_of_lambda(self.alpha, lam)
            out.append(self.eta_min - tol <= et <= self.eta_max + tol)
        return out

    def interval_containment(self) -> list[bool | None]:
        if self.interval is None:
            return []
        return [
            self.interval.contains(e.value.real)
            for e in self.eigenpairs
            if e.cls == "quad" and e.verified
        ]

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "N": int(self.N),
            "total": self.total,
            "one": self.count("one"),
            "half": self.count("half"),
            "quad": self.count("quad"),
            "complex": sum(1 for e in self.eigenpairs if e.value.imag != 0.0),
            "null_dim_C": self.null_dim_C,
            "eta_min": self.eta_min,
            "eta_max": self.eta_max,
            "max_residual_one": self.max_residual("one"),
            "max_residual_quad": self.max_residual("quad"),
        }


def assemble_pr_exact(blocks: ProblemBlocks, S: np.ndarray, alpha: float) -> np.ndarray:
    """Dense ``[[A, B^T, 0], [-B, S, 0], [0, C, alpha I]]``."""
    A, B, C = (M.to_dense() for M in (blocks.A, blocks.B, blocks.C))
    n, m, l = blocks.n, blocks.m, blocks.l
    return np.block(
        [
            [A, B.T, np.zeros((n, l))],
            [-B, S, np.zeros((m, l))],
            [np.zeros((l, n)), C, alpha * np.eye(l)],
        ]
    )


def _residual(K, P, w, lam) -> float:
    return float(np.linalg.norm(K @ w - lam * (P @ w)) / np.linalg.norm(w))


def enumerate_and_verify_spectrum(
    blocks: ProblemBlocks, alpha: float, chain: SchurChain | None = None
) -> SpectrumReport:
    """Build every eigenvector candidate of ``P_R^{-1} K_minus`` (exact ``S``)
    and record its residual ``||K w - lam P_R w|| / ||w||``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    _guard(blocks)
    if chain is None:
        chain = compute_schur_chain(blocks)
    K = assemble_saddle(blocks, "minus").matrix.to_dense()
    P = assemble_pr_exact(blocks, chain.S, alpha)
    n, m, l = blocks.n, blocks.m, blocks.l
    B = blocks.B.to_dense()
    C = blocks.C.to_dense()
    rep = SpectrumReport(alpha, n, m, l)
    rep.eta_min = float(chain.eta[0]) if l else math.nan
    rep.eta_max = float(chain.eta[-1]) if l else math.nan

    # lam = 1: w = (e_i; 0; 0)
    for i in range(n):
        w = np.zeros(n + m + l)
        w[i] = 1.0
        rep.eigenpairs.append(Eigenpair(1.0 + 0j, "one", _residual(K, P, w, 1.0)))

    # lam = 1/2: y in null(C)
    _, Y = sp.row_reduce(C)
    rep.null_dim_C = Y.shape[1]
    for j in range(Y.shape[1]):
        y = Y[:, j]
        x = -chain.A_factor.solve(B.T @ y)
        w = np.concatenate([x, y, np.zeros(l)])
        rep.eigenpairs.append(Eigenpair(0.5 + 0j, "half", _residual(K, P, w, 0.5)))

    # remaining pairs, one per root per eigenvalue of S_C
    for k in range(l):
        eta = float(chain.eta[k])
        z = chain.Z[:, k]
        pair = lambda_roots(alpha, eta, "corrected")
        rep.corrected_roots.append(pair)
        rep.printed_roots.append(lambda_roots(alpha, eta, "printed"))
        u = chain.S_factor.solve(C.T @ z)
        for lam, ok in zip(pair.roots, pair.consistent):
            if lam.imag != 0.0 or not ok:
                rep.eigenpairs.append(Eigenpair(lam, "quad", math.nan, eta))
                continue
            lr = lam.real
            y = u / (1.0 - 2.0 * lr)
            x = -chain.A_factor.solve(B.T @ y)
            w = np.concatenate([x, y, z])
            rep.eigenpairs.append(Eigenpair(complex(lr), "quad", _residual(K, P, w, lr), eta))

    if alpha >= 2 and l:
        rep.interval = printed_bound_interval(alpha, rep.eta_min, rep.eta_max)
    return rep


# --------------------------------------------------------------------------

CSV_HEADER = ("re", "im", "class", "residual")


def _fmt(v: float) -> str:
    return "%.17g" % v


def dump_spectrum_csv(report: SpectrumReport | None, out=None, raw_blocks: ProblemBlocks | None = None) -> str:
    """Serialize eigenvalues as ``re,im,class,residual`` rows.

    With ``raw_blocks`` the eigenvalues of the symmetric unpreconditioned
    operator are appended with class ``raw`` (and residual ``nan``), for
    side-by-side scatter plots. ``out`` may be a path or a text stream.
    """
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    if report is not None:
        for e in report.eigenpairs:
            wr.writerow([_fmt(e.value.real), _fmt(e.value.imag), e.cls, _fmt(e.residual)])
    if raw_blocks is not None:
        _guard(raw_blocks)
        K = assemble_saddle(raw_blocks, "plus").matrix.to_dense()
        for v in sp.jacobi_eigen_sym(K)[0]:
            wr.writerow([_fmt(v), _fmt(0.0), "raw", _fmt(math.nan)])
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", newline="") as fh:
                fh.write(text)
    return text


def parse_spectrum_csv(text: str) -> list[tuple[float, float, str, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("missing spectrum CSV header")
    return [(float(a), float(b), c, float(d)) for a, b, c, d in rows[1:]]
