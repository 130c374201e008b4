"""Matrix Market coordinate reader/writer (real general/symmetric, pattern dump)."""

from __future__ import annotations

import gzip
import os
from pathlib import Path

import numpy as np

from .sparse import SparseMatrix

_MAX_DIM = 2**31 - 1


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market file."""

    def __init__(self, msg: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {msg}" if where else msg)
        self.line = line


def _open(path):
    path = os.fspath(path)
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="ascii", errors="replace")
    return open(path, "r", encoding="ascii", errors="replace")


def load_matrix_market(path) -> SparseMatrix:
    """Read a real coordinate Matrix Market file.

    Symmetric storage is expanded to general, duplicate coordinates are
    summed, exact zeros are dropped and 1-based indices become 0-based.
    ``.gz`` files are decompressed transparently.
    """
    with _open(path) as fh:
        header = fh.readline()
        lineno = 1
        tokens = header.strip().split()
        if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
            raise MatrixMarketError("missing '%%MatrixMarket' banner", path, lineno)
        obj, fmt, field, symm = (t.lower() for t in tokens[1:])
        if obj != "matrix":
            raise MatrixMarketError(f"unsupported object '{obj}'", path, lineno)
        if fmt != "coordinate":
            raise MatrixMarketError(f"unsupported format '{fmt}' (only coordinate)", path, lineno)
        if field == "pattern":
            raise MatrixMarketError("pattern-only files carry no values", path, lineno)
        if field not in ("real", "double"):
            raise MatrixMarketError(f"unsupported field '{field}' (need real)", path, lineno)
        if symm not in ("general", "symmetric"):
            raise MatrixMarketError(f"unsupported symmetry '{symm}'", path, lineno)

        size_line = None
        for line in fh:
            lineno += 1
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            size_line = s
            break
        if size_line is None:
            raise MatrixMarketError("missing size line", path, lineno)
        try:
            m, n, nnz = (int(t) for t in size_line.split())
        except ValueError:
            raise MatrixMarketError(f"bad size line '{size_line}'", path, lineno) from None
        if min(m, n, nnz) < 0 or max(m, n) > _MAX_DIM or nnz > _MAX_DIM:
            raise MatrixMarketError(f"dimension overflow in size line '{size_line}'", path, lineno)
        if symm == "symmetric" and m != n:
            raise MatrixMarketError("symmetric matrix must be square", path, lineno)

        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        k = 0
        for line in fh:
            lineno += 1
            s = line.strip()
            if not s or s.startswith("%"):
                continue
            if k >= nnz:
                raise MatrixMarketError(f"more than the declared {nnz} entries", path, lineno)
            parts = s.split()
            if len(parts) != 3:
                raise MatrixMarketError(f"expected 'row col value', got '{s}'", path, lineno)
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise MatrixMarketError(f"cannot parse entry '{s}'", path, lineno) from None
            if not (1 <= i <= m and 1 <= j <= n):
                raise MatrixMarketError(f"index ({i}, {j}) outside {m}x{n}", path, lineno)
            rows[k], cols[k], vals[k] = i - 1, j - 1, v
            k += 1
        if k != nnz:
            raise MatrixMarketError(f"declared {nnz} entries, found {k}", path, lineno)

    if symm == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate((rows, cols[off])),
            np.concatenate((cols, rows[off])),
            np.concatenate((vals, vals[off])),
        )
    return SparseMatrix.from_coo(m, n, rows, cols, vals)


def write_matrix_market(A: SparseMatrix, path, comment: str | None = None) -> None:
    """Write ``A`` as ``coordinate real general`` (column-major entry order)."""
    r, c, v = A.to_coo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()):
            fh.write(f"{i + 1} {j + 1} {x!r}\n")


def pattern_dump(M: SparseMatrix, path) -> Path:
    """Write the nonzero structure of ``M`` as a Matrix Market pattern file."""
    path = Path(path)
    r, c, _ = M.to_coo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate pattern general\n")
        fh.write(f"{M.n_rows} {M.n_cols} {M.nnz}\n")
        fh.writelines(f"{i + 1} {j + 1}\n" for i, j in zip(r.tolist(), c.tolist()))
    return path


def read_pattern(path) -> tuple[tuple[int, int], np.ndarray, np.ndarray]:
    """Read back a pattern file as ``(shape, rows, cols)`` (0-based)."""
    with _open(path) as fh:
        banner = fh.readline().split()
        if len(banner) != 5 or banner[3].lower() != "pattern":
            raise MatrixMarketError("not a pattern file", path, 1)
        data = [ln.split() for ln in fh if ln.strip() and not ln.startswith("%")]
    m, n, nnz = (int(t) for t in data[0])
    body = np.array(data[1:], dtype=np.int64).reshape(-1, 2)
    if body.shape[0] != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {body.shape[0]}", path)
    return (m, n), body[:, 0] - 1, body[:, 1] - 1
