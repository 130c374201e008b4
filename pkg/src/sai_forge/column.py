"""Per-column working state shared by the RSAI and SPAI builders."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .lsq import QrFactor, qr_append_columns, qr_solve
from .sparse import (
    SparseMatrix,
    SparseVector,
    column_entries,
    extract_submatrix,
    nonzero_rows_of_columns,
)


class ColumnError(RuntimeError):
    """A column cannot be built (e.g. structurally zero column of A)."""


class LoopRecord(NamedTuple):
    loop: int
    pattern_size: int
    residual_norm: float
    n_dropped: int


@dataclass
class ColumnState:
    """Working set of one column ``m_k``.

    ``J`` lists the pattern in factor (insertion) order, aligned with
    ``values``; ``I`` is the sorted row set. ``R`` is the union of every
    dominant index set chosen so far.
    """

    k: int
    J: np.ndarray
    I: np.ndarray
    R: np.ndarray
    residual: SparseVector
    residual_norm: float
    loop: int
    factor: QrFactor
    converged: bool = False
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    history: list = field(default_factory=list)
    chosen: list = field(default_factory=list)
    drops: list = field(default_factory=list)

    def m(self) -> SparseVector:
        """The current column ``m_k`` as a sparse vector."""
        n = self.residual.dim
        order = np.argsort(self.J)
        return SparseVector.from_pairs(n, zip(self.J[order].tolist(), self.values[order].tolist()))

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))


class ColumnWork:
    """Owns the QR factor of ``A(I, J)`` and the explicit residual of one column."""

    def __init__(self, A: SparseMatrix, k: int):
        if A.n_rows != A.n_cols:
            raise ValueError("matrix must be square")
        rows_k, _ = A.column(k)
        if rows_k.size == 0:
            raise ColumnError(f"column {k} of A is structurally zero")
        self.A = A
        self.k = int(k)
        self.state: ColumnState | None = None
        self.resolve(np.array([k], dtype=np.int64))

    # LS maintenance -------------------------------------------------------

    def resolve(self, J) -> None:
        """Factor ``A(I, J)`` from scratch, with ``I`` the rows of ``J`` plus ``k``."""
        A, k = self.A, self.k
        J = np.asarray(J, dtype=np.int64)
        I = np.union1d(nonzero_rows_of_columns(A, J), [k])
        A_k = extract_submatrix(A, I, J)
        rhs = (I == k).astype(float)
        _, _, fac = qr_solve(A_k, rhs, row_ids=I.tolist(), col_ids=J.tolist())
        self._install(fac)

    def extend(self, new_cols) -> list[int]:
        """Append candidate columns; returns the column ids rejected as rank deficient."""
        fac = self.state.factor
        new_cols = np.asarray(new_cols, dtype=np.int64)
        old_rows = np.asarray(fac.row_ids, dtype=np.int64)
        new_rows = np.setdiff1d(nonzero_rows_of_columns(self.A, new_cols), old_rows)
        all_rows = np.concatenate((old_rows, new_rows))
        block = extract_submatrix(self.A, all_rows, new_cols)
        rhs = np.concatenate((fac.rhs, (new_rows == self.k).astype(float)))
        qr_append_columns(fac, block, new_rows.tolist(), rhs, col_ids=new_cols.tolist())
        rejected = [int(new_cols[t]) for t in fac.rejected]
        self._install(fac)
        return rejected

    def _install(self, fac: QrFactor) -> None:
        x = fac.solution()
        J = np.asarray(fac.col_ids, dtype=np.int64)
        residual = explicit_residual(self.A, self.k, J, x)
        prev = self.state
        st = ColumnState(
            k=self.k,
            J=J,
            I=np.sort(np.asarray(fac.row_ids, dtype=np.int64)),
            R=prev.R if prev else np.empty(0, dtype=np.int64),
            residual=residual,
            residual_norm=residual.norm(),
            loop=prev.loop if prev else 0,
            factor=fac,
            values=x,
            history=prev.history if prev else [],
            chosen=prev.chosen if prev else [],
            drops=prev.drops if prev else [],
        )
        self.state = st


def explicit_residual(A: SparseMatrix, k: int, J: np.ndarray, x: np.ndarray) -> SparseVector:
    """``A m - e_k`` with ``m`` scattered from ``x`` into positions ``J``."""
    owner, rows, vals = column_entries(A, J)
    rows = np.concatenate((rows, [k]))
    contrib = np.concatenate((vals * x[owner], [-1.0]))
    uniq, inv = np.unique(rows, return_inverse=True)
    r = np.bincount(inv, weights=contrib, minlength=uniq.size)
    nz = r != 0.0
    return SparseVector(A.n_rows, uniq[nz], r[nz])
