"""Assemble a sparse approximate inverse column by column."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .column import ColumnError, ColumnState
from .config import SaiConfig
from .rsai import rsai_build_column
from .spai import spai_build_column
from .sparse import SparseMatrix

log = logging.getLogger(__name__)

ALGORITHMS = ("rsai", "spai")


@dataclass
class Preconditioner:
    M: SparseMatrix
    n_c: int
    residual_norms: np.ndarray
    column_loops: np.ndarray
    algorithm: str
    config: SaiConfig
    ptime: float = 0.0
    errors: dict = field(default_factory=dict)
    states: list | None = None

    @property
    def loops(self) -> int:
        return int(self.column_loops.sum())

    def spar(self, A: SparseMatrix) -> float:
        return self.M.nnz / A.nnz


def _build_one(A, k, cfg, algorithm, spai_lmax):
    if algorithm == "rsai":
        return rsai_build_column(A, k, cfg)
    return spai_build_column(A, k, cfg, l_max=spai_lmax)


def _build_chunk(A, cols, cfg, algorithm, spai_lmax, keep_states):
    out = []
    for k in cols:
        try:
            st = _build_one(A, k, cfg, algorithm, spai_lmax)
        except ColumnError as exc:
            out.append((k, None, str(exc)))
            continue
        if keep_states:
            out.append((k, st, None))
        else:
            # ship only what assembly needs across process boundaries
            out.append((k, _Summary(st), None))
    return out


class _Summary:
    __slots__ = ("J", "values", "residual_norm", "loop")

    def __init__(self, st: ColumnState):
        self.J = st.J
        self.values = st.values
        self.residual_norm = st.residual_norm
        self.loop = st.loop


def build_preconditioner(
    A: SparseMatrix,
    cfg: SaiConfig,
    algorithm: str = "rsai",
    *,
    workers: int = 1,
    spai_lmax: int | None = None,
    keep_states: bool = False,
) -> Preconditioner:
    """Build ``M ~ A^{-1}`` with one independent LS problem per column.

    ``workers > 1`` farms contiguous column blocks out to processes; the
    result is identical to the serial one because columns never interact.
    Failing columns are recorded in ``errors`` (they count into ``n_c`` and
    stay empty in ``M``); only a total failure raises.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if A.n_rows != A.n_cols:
        raise ValueError("matrix must be square")
    n = A.n_cols
    if algorithm == "spai" and spai_lmax is None:
        spai_lmax = cfg.l_max
    t0 = time.perf_counter()
    cols = list(range(n))
    if workers > 1 and n > 1:
        chunks = [c.tolist() for c in np.array_split(np.arange(n), min(workers * 4, n))]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _build_chunk, [A] * len(chunks), chunks, [cfg] * len(chunks),
                [algorithm] * len(chunks), [spai_lmax] * len(chunks), [keep_states] * len(chunks),
            )
            results = [r for part in parts for r in part]
    else:
        results = _build_chunk(A, cols, cfg, algorithm, spai_lmax, keep_states)
    results.sort(key=lambda t: t[0])
    ptime = time.perf_counter() - t0

    columns = []
    resn = np.ones(n)
    loops = np.zeros(n, dtype=np.int64)
    errors = {}
    states = [] if keep_states else None
    for k, st, err in results:
        if err is not None:
            errors[k] = err
            columns.append((np.empty(0, dtype=np.int64), np.empty(0)))
            if keep_states:
                states.append(None)
            continue
        nz = st.values != 0.0
        columns.append((st.J[nz], st.values[nz]))
        resn[k] = st.residual_norm
        loops[k] = st.loop
        if keep_states:
            states.append(st)
    if errors and len(errors) == n:
        raise ColumnError(f"every column failed; first error: {errors[min(errors)]}")
    if errors:
        log.warning("%d column(s) failed: %s", len(errors), errors[min(errors)])
    M = SparseMatrix.from_columns(n, columns)
    n_c = int(np.count_nonzero(resn > cfg.epsilon))
    return Preconditioner(
        M=M, n_c=n_c, residual_norms=resn, column_loops=loops, algorithm=algorithm,
        config=cfg, ptime=ptime, errors=errors, states=states,
    )
