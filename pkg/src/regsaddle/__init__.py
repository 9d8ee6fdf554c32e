"""Regularized block preconditioners for double saddle-point systems."""

from .bench import CaseConfig, CaseResult, emit_table, run_case, run_sweep
from .ict import IctFactor, ict
from .krylov import SolveReport, fgmres, gmres, minres, pcg
from .precond import build_preconditioner, build_shat
from .problem import ProblemBlocks, assemble_saddle, build_example1, manufactured_rhs
from .sparse import SparseMatrix

__all__ = [
    "CaseConfig", "CaseResult", "emit_table", "run_case", "run_sweep",
    "IctFactor", "ict",
    "SolveReport", "fgmres", "gmres", "minres", "pcg",
    "build_preconditioner", "build_shat",
    "ProblemBlocks", "assemble_saddle", "build_example1", "manufactured_rhs",
    "SparseMatrix",
]

__version__ = "0.1.0"
