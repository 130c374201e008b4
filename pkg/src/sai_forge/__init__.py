"""Adaptive F-norm minimisation sparse approximate inverse preconditioners.

RSAI / RSAI(tol) and SPAI column builders, a right-preconditioned BiCGStab
solver and a benchmark harness over Matrix Market matrices.
"""

from .config import SaiConfig
from .krylov import SolveOutcome, Status, bicgstab
from .matching import StructurallySingularError, ensure_nonzero_diagonal
from .mmio import load_matrix_market, pattern_dump, write_matrix_market
from .precond import Preconditioner, build_preconditioner
from .rsai import drop_small, rsai_build_column, select_dominant, theorem1_bound
from .spai import score_candidate, spai_build_column
from .sparse import Permutation, SparseMatrix, SparseVector, sparse_matvec

__all__ = [
    "Permutation",
    "Preconditioner",
    "SaiConfig",
    "SolveOutcome",
    "SparseMatrix",
    "SparseVector",
    "Status",
    "StructurallySingularError",
    "bicgstab",
    "build_preconditioner",
    "drop_small",
    "ensure_nonzero_diagonal",
    "load_matrix_market",
    "pattern_dump",
    "rsai_build_column",
    "score_candidate",
    "select_dominant",
    "sparse_matvec",
    "spai_build_column",
    "theorem1_bound",
    "write_matrix_market",
]

__version__ = "0.1.0"
