"""Row permutation to a zero-free diagonal via maximum bipartite matching."""

from __future__ import annotations

import numpy as np

from .sparse import Permutation, SparseMatrix


class StructurallySingularError(ValueError):
    """No row permutation can give a zero-free diagonal."""


def maximum_matching(A: SparseMatrix) -> np.ndarray:
    """Maximum matching of columns to rows through stored entries.

    Returns ``row_of_col`` with -1 for unmatched columns. Augmenting paths are
    searched depth first with an explicit stack; a greedy pass that prefers
    the diagonal entry seeds the matching.
    """
    n_rows, n_cols = A.shape
    row_of_col = np.full(n_cols, -1, dtype=np.int64)
    col_of_row = np.full(n_rows, -1, dtype=np.int64)
    ptr, idx = A.col_ptr, A.row_idx

    for j in range(n_cols):
        rows = idx[ptr[j]:ptr[j + 1]]
        if j < n_rows and col_of_row[j] < 0 and np.any(rows == j):
            row_of_col[j] = j
            col_of_row[j] = j
    for j in range(n_cols):
        if row_of_col[j] >= 0:
            continue
        for i in idx[ptr[j]:ptr[j + 1]]:
            if col_of_row[i] < 0:
                row_of_col[j] = i
                col_of_row[i] = j
                break

    visited = np.full(n_rows, -1, dtype=np.int64)
    for root in range(n_cols):
        if row_of_col[root] >= 0:
            continue
        # stack of (column, next position in its row list); parent row per level
        stack = [(root, int(ptr[root]))]
        via_row: list[int] = []
        found = -1
        while stack and found < 0:
            j, pos = stack[-1]
            end = int(ptr[j + 1])
            advanced = False
            while pos < end:
                i = int(idx[pos])
                pos += 1
                if visited[i] == root:
                    continue
                visited[i] = root
                stack[-1] = (j, pos)
                if col_of_row[i] < 0:
                    found = i
                    via_row.append(i)
                    break
                via_row.append(i)
                nxt = int(col_of_row[i])
                stack.append((nxt, int(ptr[nxt])))
                advanced = True
                break
            if found >= 0:
                break
            if not advanced:
                stack.pop()
                if via_row:
                    via_row.pop()
        if found < 0:
            continue
        # flip the alternating path: stack[d] column takes via_row[d]
        for (j, _), i in zip(stack, via_row):
            row_of_col[j] = i
            col_of_row[i] = j
    return row_of_col


def ensure_nonzero_diagonal(A: SparseMatrix) -> tuple[Permutation, SparseMatrix]:
    """Row-permute ``A`` so that every diagonal entry is stored.

    Returns ``(P, PA)`` with ``PA[k, :] = A[P[k], :]``. ``P`` is the identity
    when the diagonal is already zero-free.
    """
    if A.n_rows != A.n_cols:
        raise ValueError(f"matrix must be square, got {A.n_rows}x{A.n_cols}")
    if A.has_zero_free_diagonal():
        return Permutation.identity(A.n_rows), A
    row_of_col = maximum_matching(A)
    unmatched = np.flatnonzero(row_of_col < 0)
    if unmatched.size:
        raise StructurallySingularError(
            f"structurally singular: {unmatched.size} column(s) cannot be matched (first: {int(unmatched[0])})"
        )
    perm = Permutation(row_of_col)
    return perm, A.permute_rows(perm)
