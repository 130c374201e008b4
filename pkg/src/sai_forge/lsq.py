"""Reduced least-squares solves with column-appending QR updates.

A factor holds a thin orthonormal ``Q`` (m x k), an upper-triangular ``R``
(k x k, nonnegative diagonal), ``Q^T b`` and the LS residual vector
``b - Q Q^T b``. Appending columns (optionally together with new rows that are
zero in all previous columns) costs O(m k s) for s new columns instead of a
full refactorisation.

Columns whose new ``R`` diagonal falls below ``RANK_TOL * ||A_k||_F`` are
rejected and reported through ``QrFactor.rejected``; the rest of the batch
is still appended.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

RANK_TOL = 1e-12


class QrContractError(ValueError):
    """Inputs inconsistent with the factor being updated."""


@dataclass
class QrFactor:
    q: np.ndarray
    r: np.ndarray
    qtb: np.ndarray
    res: np.ndarray
    rhs: np.ndarray
    row_ids: list = field(default_factory=list)
    col_ids: list = field(default_factory=list)
    fro2: float = 0.0
    # positions (within the last call's new columns) that were rejected
    rejected: list = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.q.shape[0]

    @property
    def k(self) -> int:
        return self.q.shape[1]

    def solution(self) -> np.ndarray:
        if self.k == 0:
            return np.zeros(0)
        return solve_triangular(self.r, self.qtb, lower=False, check_finite=False)

    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.res))

    def reconstruct(self) -> np.ndarray:
        return self.q @ self.r


def _sign_fix(q: np.ndarray, r: np.ndarray) -> None:
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    r *= d[:, None]
    q *= d[None, :]


def _empty_factor(rhs: np.ndarray, row_ids) -> QrFactor:
    m = rhs.shape[0]
    return QrFactor(
        q=np.zeros((m, 0)),
        r=np.zeros((0, 0)),
        qtb=np.zeros(0),
        res=rhs.astype(float, copy=True),
        rhs=rhs.astype(float, copy=True),
        row_ids=list(row_ids) if row_ids is not None else list(range(m)),
    )


def qr_solve(A_k, rhs, row_ids=None, col_ids=None):
    """Solve ``min ||A_k x - rhs||`` from scratch.

    Returns ``(x, residual_norm, factor)``. Rank-deficient columns are dropped
    one at a time, latest offending column first, until the remaining ones
    pass the diagonal test; ``x`` then covers the surviving columns only
    (``factor.col_ids`` tells which).
    """
    A_k = np.asarray(A_k, dtype=float)
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    if A_k.ndim != 2 or A_k.shape[0] != rhs.shape[0]:
        raise QrContractError(f"shape mismatch: A_k {A_k.shape}, rhs {rhs.shape}")
    m, k = A_k.shape
    cols = list(range(k)) if col_ids is None else list(col_ids)
    if len(cols) != k:
        raise QrContractError("col_ids length does not match A_k")
    keep = list(range(k))
    rejected = []
    while True:
        sub = A_k[:, keep]
        fro = float(np.linalg.norm(sub))
        if not keep:
            fac = _empty_factor(rhs, row_ids)
            break
        if len(keep) > m:
            bad = len(keep) - 1
        else:
            q, r = np.linalg.qr(sub, mode="reduced")
            _sign_fix(q, r)
            small = np.flatnonzero(np.diag(r) <= RANK_TOL * fro)
            bad = int(small[-1]) if small.size else -1
        if bad < 0:
            qtb = q.T @ rhs
            res = rhs - q @ qtb
            fac = QrFactor(q=q, r=r, qtb=qtb, res=res, rhs=rhs.copy(),
                           row_ids=list(row_ids) if row_ids is not None else list(range(m)),
                           fro2=fro * fro)
            break
        rejected.append(keep.pop(bad))
    fac.col_ids = [cols[i] for i in keep]
    fac.rejected = sorted(rejected)
    return fac.solution(), fac.residual_norm(), fac


def _append_block(fac: QrFactor, block: np.ndarray, fro2_new: float) -> bool:
    """Try to append ``block`` (m x s) in one go; False if rank test fails."""
    q = fac.q
    c1 = q.T @ block
    t = block - q @ c1
    c2 = q.T @ t
    t -= q @ c2
    c1 += c2
    q2, r2 = np.linalg.qr(t, mode="reduced")
    _sign_fix(q2, r2)
    if np.any(np.diag(r2) <= RANK_TOL * np.sqrt(fro2_new)):
        return False
    k, s = fac.k, block.shape[1]
    r = np.zeros((k + s, k + s))
    r[:k, :k] = fac.r
    r[:k, k:] = c1
    r[k:, k:] = r2
    fac.q = np.hstack((q, q2))
    fac.r = r
    add = q2.T @ fac.res
    fac.qtb = np.concatenate((fac.qtb, add))
    fac.res = fac.res - q2 @ add
    # one cheap re-projection keeps b = Q qtb + res orthogonal
    corr = fac.q.T @ fac.res
    fac.qtb += corr
    fac.res -= fac.q @ corr
    return True


def qr_append_columns(factor: QrFactor, new_cols, new_row_ids, rhs, col_ids=None):
    """Append columns (and rows zero in all old columns) to a factor in place.

    ``new_cols`` has ``factor.m + len(new_row_ids)`` rows: the old rows in
    ``factor.row_ids`` order followed by the new rows. ``rhs`` is the full
    extended right-hand side; its first ``factor.m`` entries must equal the
    factor's. Returns ``(x, residual_norm, factor)`` like :func:`qr_solve`.
    """
    new_row_ids = list(new_row_ids)
    p = len(new_row_ids)
    new_cols = np.asarray(new_cols, dtype=float)
    if new_cols.ndim == 1:
        new_cols = new_cols[:, None]
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    m_old = factor.m
    if new_cols.shape[0] != m_old + p or rhs.shape[0] != m_old + p:
        raise QrContractError(
            f"expected {m_old + p} rows, got new_cols {new_cols.shape[0]} and rhs {rhs.shape[0]}"
        )
    if set(new_row_ids) & set(factor.row_ids):
        raise QrContractError("new_row_ids overlap the factor's existing rows")
    if not np.array_equal(rhs[:m_old], factor.rhs):
        raise QrContractError("rhs disagrees with the factor on existing rows")
    s = new_cols.shape[1]
    ids = list(range(factor.k, factor.k + s)) if col_ids is None else list(col_ids)
    if len(ids) != s:
        raise QrContractError("col_ids length does not match new_cols")

    if p:
        factor.q = np.vstack((factor.q, np.zeros((p, factor.k))))
        factor.res = np.concatenate((factor.res, rhs[m_old:]))
        factor.rhs = rhs.copy()
        factor.row_ids = factor.row_ids + new_row_ids
    factor.rejected = []
    if s == 0:
        return factor.solution(), factor.residual_norm(), factor

    col_fro2 = np.einsum("ij,ij->j", new_cols, new_cols)
    if s <= factor.m - factor.k and _append_block(factor, new_cols, factor.fro2 + col_fro2.sum()):
        factor.fro2 += float(col_fro2.sum())
        factor.col_ids = factor.col_ids + ids
    else:
        for t in range(s):
            trial = factor.fro2 + col_fro2[t]
            if factor.k < factor.m and _append_block(factor, new_cols[:, t:t + 1], trial):
                factor.fro2 = float(trial)
                factor.col_ids = factor.col_ids + [ids[t]]
            else:
                factor.rejected.append(t)
    return factor.solution(), factor.residual_norm(), factor
