"""SPAI baseline: grow each column by its most profitable indices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .column import ColumnState, ColumnWork, LoopRecord
from .config import SaiConfig
from .sparse import SparseMatrix, SparseVector, column_entries, nonzero_cols_of_rows


@dataclass(frozen=True)
class CandidateScore:
    """One-dimensional improvement obtainable by adding column ``j``.

    ``rho`` is the norm of ``r + mu_j A e_j`` at the optimal
    ``mu_j = -numerator / denom``.
    """

    j: int
    rho: float
    numerator: float
    denom: float

    @property
    def mu(self) -> float:
        return -self.numerator / self.denom


def spai_candidates(A: SparseMatrix, state: ColumnState) -> np.ndarray:
    """Columns of ``A`` touching the residual support, minus the current pattern."""
    rows = state.residual.indices
    return np.setdiff1d(nonzero_cols_of_rows(A, rows), state.J)


def _column_sums(A: SparseMatrix, r: SparseVector, cands: np.ndarray):
    """Per candidate: ``r^T A e_j``, ``||A e_j||^2`` and the residual entries
    on the support of ``A e_j`` (aligned with ``column_entries``)."""
    owner, rows, vals = column_entries(A, cands)
    if r.nnz:
        pos = np.minimum(np.searchsorted(r.indices, rows), r.nnz - 1)
        hit = r.indices[pos] == rows
        rv = np.where(hit, r.values[pos], 0.0)
    else:
        hit = np.zeros(rows.size, dtype=bool)
        rv = np.zeros(rows.size)
    num = np.bincount(owner, weights=rv * vals, minlength=cands.size)
    den = np.bincount(owner, weights=vals * vals, minlength=cands.size)
    return owner, vals, rv, hit, num, den


def score_candidates(A: SparseMatrix, r: SparseVector, cands) -> list[CandidateScore]:
    """Score each candidate by the residual norm of its optimal 1-D update.

    ``rho^2 = ||r||^2 - (r^T A e_j)^2 / ||A e_j||^2`` is evaluated as the part
    of ``||r||^2`` off the support of ``A e_j`` plus the updated entries on it,
    which avoids the cancellation of the difference form when ``rho << ||r||``.
    """
    cands = np.asarray(cands, dtype=np.int64)
    owner, vals, rv, hit, num, den = _column_sums(A, r, cands)
    if np.any(den == 0.0):
        bad = int(cands[np.flatnonzero(den == 0.0)[0]])
        raise ValueError(f"column {bad} of A is zero; it cannot be scored")
    mu = -num / den
    rr = float(np.dot(r.values, r.values))
    on = np.bincount(owner, weights=rv * rv, minlength=cands.size)
    covered = np.bincount(owner, weights=hit.astype(float), minlength=cands.size) == r.nnz
    off = np.where(covered, 0.0, np.maximum(rr - on, 0.0))
    upd = rv + mu[owner] * vals
    rho = np.sqrt(off + np.bincount(owner, weights=upd * upd, minlength=cands.size))
    return [CandidateScore(int(j), float(p), float(a), float(d)) for j, p, a, d in zip(cands, rho, num, den)]


def score_candidate(A: SparseMatrix, r: SparseVector, j: int) -> CandidateScore:
    """Score a single candidate column ``j`` against residual ``r``."""
    return score_candidates(A, r, [j])[0]


def most_profitable(scores: list[CandidateScore], l_a: int) -> np.ndarray:
    """The ``l_a`` smallest-``rho`` candidates, ties to the smaller index; sorted."""
    ranked = sorted(scores, key=lambda s: (s.rho, s.j))
    return np.sort(np.array([s.j for s in ranked[:l_a]], dtype=np.int64))


def spai_build_column(A: SparseMatrix, k: int, cfg: SaiConfig, l_max: int | None = None) -> ColumnState:
    """Run SPAI for column ``k`` from the pattern ``{k}``.

    ``l_max`` overrides ``cfg.l_max`` (the benchmark passes ``cfg.spai_lmax(A)``).
    """
    limit = cfg.l_max if l_max is None else int(l_max)
    work = ColumnWork(A, k)
    st = work.state
    st.history.append(LoopRecord(0, st.J.size, st.residual_norm, 0))
    while work.state.residual_norm > cfg.epsilon and work.state.loop < limit:
        st = work.state
        cands = spai_candidates(A, st)
        if cands.size == 0:
            break
        scores = score_candidates(A, st.residual, cands)
        picked = most_profitable(scores, cfg.l_a)
        st.chosen.append(picked)
        st.loop += 1
        work.extend(picked)
        st = work.state
        st.history.append(LoopRecord(st.loop, st.J.size, st.residual_norm, 0))
        assert st.J.size <= 1 + cfg.l_a * st.loop, "pattern outgrew 1 + l_a*l"
    st = work.state
    st.converged = bool(st.residual_norm <= cfg.epsilon)
    return st
