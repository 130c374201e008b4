"""Residual based sparse approximate inverse columns, with and without dropping.

Each loop picks the ``c`` largest residual entries not used before, adds every
column of ``A`` that touches those rows and updates the reduced LS solution.
With ``dropping`` on, entries at or below ``epsilon / (nnz(m_k) ||A||_1)`` are
removed after each update and the LS problem is re-solved on what survives.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .column import ColumnState, ColumnWork, LoopRecord
from .config import SaiConfig
from .sparse import SparseMatrix, SparseVector, nonzero_cols_of_rows


def select_dominant(residual: SparseVector, exclusion, c: int) -> np.ndarray:
    """Indices of the ``c`` largest ``|r(i)|`` outside ``exclusion``.

    Ties go to the smaller index. The result is sorted; it is shorter than
    ``c`` only when fewer eligible indices exist.
    """
    idx, val = residual.indices, residual.values
    if len(exclusion):
        keep = ~np.isin(idx, np.asarray(exclusion, dtype=np.int64))
        idx, val = idx[keep], val[keep]
    if idx.size == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((idx, -np.abs(val)))
    return np.sort(idx[order[:c]])


def candidate_columns(A: SparseMatrix, dominant, J) -> np.ndarray:
    """Columns of ``A(dominant, :)`` not yet in the pattern ``J``."""
    return np.setdiff1d(nonzero_cols_of_rows(A, dominant), np.asarray(J, dtype=np.int64))


class DropRecord(NamedTuple):
    """One drop pass: the vector it filtered, its threshold and what went."""

    loop: int
    tol: float
    before: SparseVector
    dropped: list


def drop_small(m: SparseVector, epsilon: float, norm1A: float) -> SparseVector:
    """Remove entries with ``|m_j| <= epsilon / (nnz(m) * norm1A)``.

    ``nnz(m)`` is taken before the pass. The entry of largest magnitude always
    survives so a column never becomes empty.
    """
    if m.nnz == 0:
        return m
    tol = epsilon / (m.nnz * norm1A)
    keep = np.abs(m.values) > tol
    keep[int(np.argmax(np.abs(m.values)))] = True
    return SparseVector(m.dim, m.indices[keep], m.values[keep])


def _drop_pass(work: ColumnWork, cfg: SaiConfig) -> int:
    st = work.state
    m = st.m()
    kept = drop_small(m, cfg.epsilon, work.A.norm_1)
    n_dropped = m.nnz - kept.nnz
    tol = cfg.epsilon / (m.nnz * work.A.norm_1) if m.nnz else 0.0
    st.drops.append(DropRecord(st.loop, tol, m, m.indices[~np.isin(m.indices, kept.indices)].tolist()))
    if n_dropped:
        survivors = st.J[np.isin(st.J, kept.indices)]
        work.resolve(survivors)
    return n_dropped


def rsai_build_column(A: SparseMatrix, k: int, cfg: SaiConfig) -> ColumnState:
    """Run the RSAI loops for column ``k`` starting from the pattern ``{k}``."""
    work = ColumnWork(A, k)
    st = work.state
    st.history.append(LoopRecord(0, st.J.size, st.residual_norm, 0))
    used = np.empty(0, dtype=np.int64)
    g = A.max_row_nnz
    while work.state.residual_norm > cfg.epsilon and work.state.loop < cfg.l_max:
        st = work.state
        dominant = select_dominant(st.residual, used, cfg.c)
        if dominant.size == 0:
            break
        used = np.union1d(used, dominant)
        st.R = used
        st.chosen.append(dominant)
        new = candidate_columns(A, dominant, st.J)
        st.loop += 1
        if new.size == 0:
            st.history.append(LoopRecord(st.loop, st.J.size, st.residual_norm, 0))
            continue
        work.extend(new)
        n_dropped = _drop_pass(work, cfg) if cfg.dropping else 0
        st = work.state
        st.R = used
        st.history.append(LoopRecord(st.loop, st.J.size, st.residual_norm, n_dropped))
        assert cfg.dropping or st.J.size <= g * cfg.c * st.loop + 1, "pattern outgrew g*c*l+1"
    if cfg.dropping:
        _drop_pass(work, cfg)
    st = work.state
    st.R = used
    st.converged = bool(st.residual_norm <= cfg.epsilon)
    return st


def theorem1_bound(A: SparseMatrix, cfg: SaiConfig) -> int:
    """Upper bound ``min{(g c l_max + 1) n, n^2}`` on ``nnz(M)`` for basic RSAI,
    where ``g`` is the largest row count of ``A``."""
    n = A.n_cols
    g = A.max_row_nnz
    return int(min((g * cfg.c * cfg.l_max + 1) * n, n * n))


def column_bound(A: SparseMatrix, cfg: SaiConfig, loops: int) -> int:
    """Per-column bound ``min{g c loops + 1, n}``."""
    return int(min(A.max_row_nnz * cfg.c * loops + 1, A.n_cols))
