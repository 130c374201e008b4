"""Compressed sparse column matrices and sparse vectors.

Indices are 0-based everywhere inside the package. A ``SparseMatrix`` is
immutable after construction; it also carries a structure-only row index
(row -> column adjacency) so that rows can be scanned without touching every
column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class SparseFormatError(ValueError):
    """Raised when arrays do not describe a valid compressed matrix."""


def _as_index_array(idx: Iterable[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(list(idx) if not isinstance(idx, np.ndarray) else idx, dtype=np.int64)
    return arr.reshape(-1)


class SparseMatrix:
    """Immutable CSC matrix with a cached 1-norm and per-row nonzero counts.

    Use :meth:`from_coo` or :meth:`from_dense` unless the compressed arrays
    are already canonical (sorted rows, no duplicates, no explicit zeros).
    """

    __slots__ = (
        "n_rows",
        "n_cols",
        "col_ptr",
        "row_idx",
        "values",
        "row_ptr",
        "col_idx",
        "_col_of_entry",
        "_norm_1",
    )

    def __init__(self, n_rows: int, n_cols: int, col_ptr, row_idx, values, *, check: bool = True):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.col_ptr = np.ascontiguousarray(col_ptr, dtype=np.int64)
        self.row_idx = np.ascontiguousarray(row_idx, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        if check:
            self._validate()
        for arr in (self.col_ptr, self.row_idx, self.values):
            arr.setflags(write=False)

        counts = np.diff(self.col_ptr)
        self._col_of_entry = np.repeat(np.arange(self.n_cols, dtype=np.int64), counts)
        # row structure: stable sort on row keeps columns ascending inside a row
        order = np.argsort(self.row_idx, kind="stable")
        self.col_idx = self._col_of_entry[order]
        self.row_ptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.row_idx, minlength=self.n_rows), out=self.row_ptr[1:])
        for arr in (self._col_of_entry, self.col_idx, self.row_ptr):
            arr.setflags(write=False)

        if self.nnz:
            colsum = np.bincount(self._col_of_entry, weights=np.abs(self.values), minlength=self.n_cols)
            self._norm_1 = float(colsum.max())
        else:
            self._norm_1 = 0.0

    def _validate(self) -> None:
        cp, ri, v = self.col_ptr, self.row_idx, self.values
        if self.n_rows < 0 or self.n_cols < 0:
            raise SparseFormatError("negative dimension")
        if cp.shape != (self.n_cols + 1,):
            raise SparseFormatError(f"col_ptr must have length n_cols+1={self.n_cols + 1}, got {cp.shape[0]}")
        if cp[0] != 0 or cp[-1] != ri.shape[0] or ri.shape != v.shape:
            raise SparseFormatError("col_ptr endpoints inconsistent with stored entries")
        if np.any(np.diff(cp) < 0):
            raise SparseFormatError("col_ptr must be non-decreasing")
        if ri.size and (ri.min() < 0 or ri.max() >= self.n_rows):
            raise SparseFormatError("row index out of range")
        if ri.size > 1:
            same_col = np.repeat(np.arange(self.n_cols), np.diff(cp))
            step = np.diff(ri)
            inside = same_col[1:] == same_col[:-1]
            if np.any(step[inside] <= 0):
                raise SparseFormatError("row indices must be strictly increasing within a column")
        if np.any(v == 0.0):
            raise SparseFormatError("explicit zero stored")
        if not np.all(np.isfinite(v)):
            raise SparseFormatError("non-finite value stored")

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    @classmethod
    def from_coo(cls, n_rows: int, n_cols: int, rows, cols, vals) -> "SparseMatrix":
        """Build from triplets; duplicates are summed and exact zeros dropped."""
        rows = _as_index_array(rows)
        cols = _as_index_array(cols)
        vals = np.asarray(vals, dtype=np.float64).reshape(-1)
        if not (rows.shape == cols.shape == vals.shape):
            raise SparseFormatError("coordinate arrays differ in length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise SparseFormatError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise SparseFormatError("column index out of range")
        key = cols * max(n_rows, 1) + rows
        order = np.argsort(key, kind="stable")
        key = key[order]
        vals = vals[order]
        if key.size:
            start = np.concatenate(([True], key[1:] != key[:-1]))
            group = np.cumsum(start) - 1
            summed = np.zeros(int(group[-1]) + 1)
            np.add.at(summed, group, vals)
            key = key[start]
            vals = summed
        keep = vals != 0.0
        key, vals = key[keep], vals[keep]
        c = key // max(n_rows, 1)
        r = key % max(n_rows, 1)
        col_ptr = np.zeros(n_cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(c, minlength=n_cols), out=col_ptr[1:])
        return cls(n_rows, n_cols, col_ptr, r, vals)

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise SparseFormatError("dense input must be two-dimensional")
        r, c = np.nonzero(dense)
        return cls.from_coo(dense.shape[0], dense.shape[1], r, c, dense[r, c])

    @classmethod
    def from_columns(cls, n_rows: int, columns: Sequence[tuple[np.ndarray, np.ndarray]]) -> "SparseMatrix":
        """Assemble from per-column ``(row_indices, values)`` pairs in any order."""
        rows = [np.asarray(r, dtype=np.int64) for r, _ in columns]
        cols = [np.full(len(r), j, dtype=np.int64) for j, r in enumerate(rows)]
        vals = [np.asarray(v, dtype=np.float64) for _, v in columns]
        if not columns:
            return cls.from_coo(n_rows, 0, [], [], [])
        return cls.from_coo(n_rows, len(columns), np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.col_ptr[-1])

    @property
    def norm_1(self) -> float:
        """Maximum absolute column sum."""
        return self._norm_1

    @property
    def row_nnz(self) -> np.ndarray:
        """Number of stored entries in each row."""
        return np.diff(self.row_ptr)

    @property
    def max_row_nnz(self) -> int:
        return int(self.row_nnz.max()) if self.n_rows else 0

    @property
    def col_nnz(self) -> np.ndarray:
        return np.diff(self.col_ptr)

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and values of column ``j`` (views, read-only)."""
        if not 0 <= j < self.n_cols:
            raise IndexError(f"column {j} out of range for {self.n_cols} columns")
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.row_idx[lo:hi], self.values[lo:hi]

    def row_columns(self, i: int) -> np.ndarray:
        """Column indices of the stored entries of row ``i``."""
        if not 0 <= i < self.n_rows:
            raise IndexError(f"row {i} out of range for {self.n_rows} rows")
        return self.col_idx[self.row_ptr[i]:self.row_ptr[i + 1]]

    def diagonal(self) -> np.ndarray:
        d = np.zeros(min(self.n_rows, self.n_cols))
        on = self.row_idx == self._col_of_entry
        d[self.row_idx[on]] = self.values[on]
        return d

    def has_zero_free_diagonal(self) -> bool:
        if self.n_rows != self.n_cols:
            return False
        on = self.row_idx == self._col_of_entry
        return int(np.count_nonzero(on)) == self.n_rows

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.row_idx, self._col_of_entry] = self.values
        return out

    def to_coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.row_idx.copy(), self._col_of_entry.copy(), self.values.copy()

    def permute_rows(self, perm: "Permutation") -> "SparseMatrix":
        """Return ``P A`` where row ``k`` of the result is row ``perm[k]`` of ``A``."""
        if len(perm) != self.n_rows:
            raise ValueError("permutation length does not match row count")
        new_pos = perm.inverse()
        r, c, v = self.to_coo()
        return SparseMatrix.from_coo(self.n_rows, self.n_cols, new_pos[r], c, v)

    def __repr__(self) -> str:
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.col_ptr, other.col_ptr)
            and np.array_equal(self.row_idx, other.row_idx)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]

    def __reduce__(self):
        return (_rebuild, (self.n_rows, self.n_cols, self.col_ptr, self.row_idx, self.values))


def _rebuild(n_rows, n_cols, col_ptr, row_idx, values):
    return SparseMatrix(n_rows, n_cols, col_ptr, row_idx, values, check=False)


@dataclass(frozen=True)
class SparseVector:
    """Sparse vector with strictly increasing indices and no stored zeros."""

    dim: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        val = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if idx.shape != val.shape:
            raise SparseFormatError("indices and values differ in length")
        if idx.size:
            if idx.min() < 0 or idx.max() >= self.dim:
                raise SparseFormatError("index out of range")
            if np.any(np.diff(idx) <= 0):
                raise SparseFormatError("indices must be strictly increasing")
        if np.any(val == 0.0):
            raise SparseFormatError("explicit zero stored")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, dense) -> "SparseVector":
        dense = np.asarray(dense, dtype=np.float64).reshape(-1)
        idx = np.flatnonzero(dense)
        return cls(dense.shape[0], idx, dense[idx])

    @classmethod
    def from_pairs(cls, dim: int, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        pairs = sorted((int(i), float(v)) for i, v in pairs if v != 0.0)
        return cls(dim, np.array([i for i, _ in pairs], dtype=np.int64), np.array([v for _, v in pairs]))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def __len__(self) -> int:
        return self.nnz


class Permutation:
    """Bijection on ``0..n-1`` stored as its forward map."""

    __slots__ = ("forward",)

    def __init__(self, forward):
        fwd = np.asarray(forward, dtype=np.int64).reshape(-1)
        if not np.array_equal(np.sort(fwd), np.arange(fwd.size)):
            raise ValueError("forward map is not a bijection on 0..n-1")
        fwd.setflags(write=False)
        self.forward = fwd

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.forward)
        inv[self.forward] = np.arange(self.forward.size)
        return inv

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.forward, np.arange(self.forward.size)))

    def apply(self, vec) -> np.ndarray:
        """Permute a vector the same way rows are permuted: ``out[k] = vec[forward[k]]``."""
        return np.asarray(vec)[self.forward]

    def __len__(self) -> int:
        return int(self.forward.size)

    def __getitem__(self, k):
        return self.forward[k]

    def __repr__(self) -> str:
        return f"Permutation({self.forward.tolist()})"


# ----------------------------------------------------------------------
# structural kernels
# ----------------------------------------------------------------------


def _check_index_set(idx: np.ndarray, bound: int, what: str) -> None:
    if idx.size and (idx.min() < 0 or idx.max() >= bound):
        raise IndexError(f"{what} index out of range [0, {bound})")


def extract_submatrix(A: SparseMatrix, rows, cols) -> np.ndarray:
    """Dense ``A(rows, cols)``; ``rows`` and ``cols`` keep their given order."""
    rows = _as_index_array(rows)
    cols = _as_index_array(cols)
    _check_index_set(rows, A.n_rows, "row")
    _check_index_set(cols, A.n_cols, "column")
    out = np.zeros((rows.size, cols.size))
    if rows.size == 0 or cols.size == 0:
        return out
    pos = np.full(A.n_rows, -1, dtype=np.int64)
    pos[rows] = np.arange(rows.size)
    for b, j in enumerate(cols):
        lo, hi = A.col_ptr[j], A.col_ptr[j + 1]
        p = pos[A.row_idx[lo:hi]]
        hit = p >= 0
        out[p[hit], b] = A.values[lo:hi][hit]
    return out


def _gather(ptr: np.ndarray, idx: np.ndarray, sel: np.ndarray) -> np.ndarray:
    if sel.size == 0:
        return np.empty(0, dtype=np.int64)
    starts = ptr[sel]
    counts = ptr[sel + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offs = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    return idx[np.arange(total) + offs]


def nonzero_rows_of_columns(A: SparseMatrix, cols) -> np.ndarray:
    """Sorted union of the row indices stored in the given columns."""
    cols = _as_index_array(cols)
    _check_index_set(cols, A.n_cols, "column")
    return np.unique(_gather(A.col_ptr, A.row_idx, cols))


def nonzero_cols_of_rows(A: SparseMatrix, rows) -> np.ndarray:
    """Sorted union of the column indices stored in the given rows."""
    rows = _as_index_array(rows)
    _check_index_set(rows, A.n_rows, "row")
    return np.unique(_gather(A.row_ptr, A.col_idx, rows))


def column_entries(A: SparseMatrix, cols) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concatenated ``(position_in_cols, row, value)`` for all entries of ``cols``."""
    cols = _as_index_array(cols)
    if cols.size == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e, np.empty(0)
    starts = A.col_ptr[cols]
    counts = A.col_ptr[cols + 1] - starts
    total = int(counts.sum())
    offs = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    sel = np.arange(total) + offs
    owner = np.repeat(np.arange(cols.size, dtype=np.int64), counts)
    return owner, A.row_idx[sel], A.values[sel]


def sparse_matvec(A: SparseMatrix, x) -> np.ndarray:
    """``A @ x`` accumulated in stored (column-major) order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.n_cols,):
        raise ValueError(f"dimension mismatch: matrix has {A.n_cols} columns, vector has shape {x.shape}")
    return np.bincount(A.row_idx, weights=A.values * x[A._col_of_entry], minlength=A.n_rows)


def sparse_rmatvec(A: SparseMatrix, y) -> np.ndarray:
    """``A.T @ y``."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.n_rows,):
        raise ValueError(f"dimension mismatch: matrix has {A.n_rows} rows, vector has shape {y.shape}")
    return np.bincount(A._col_of_entry, weights=A.values * y[A.row_idx], minlength=A.n_cols)
