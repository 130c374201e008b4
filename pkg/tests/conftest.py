import os
from pathlib import Path

import numpy as np
import pytest

from sai_forge.sparse import SparseMatrix

ROOT = Path(__file__).resolve().parents[1]
MATRIX_DIRS = [Path(p) for p in os.environ.get("SAI_FORGE_MATRIX_DIR", "").split(os.pathsep) if p]
MATRIX_DIRS.append(ROOT / "matrices")

FETCH_HINT = "run scripts/fetch_matrices.sh or point SAI_FORGE_MATRIX_DIR at a directory holding it"


def find_matrix(name):
    for d in MATRIX_DIRS:
        for suffix in (".mtx", ".mtx.gz"):
            p = d / f"{name}{suffix}"
            if p.exists():
                return p
    return None


def require_matrix(name):
    p = find_matrix(name)
    if p is None:
        if os.environ.get("SAI_FORGE_REQUIRE_MATRICES"):
            pytest.fail(f"test matrix '{name}' not found ({FETCH_HINT})")
        pytest.skip(f"test matrix '{name}' not found; {FETCH_HINT}")
    return p


def random_sparse(rng, n, density=0.3, m=None, diag=True):
    """Random sparse matrix with a (well-scaled) nonzero diagonal when square."""
    m = n if m is None else m
    dense = np.where(rng.random((m, n)) < density, rng.standard_normal((m, n)), 0.0)
    if diag and m == n:
        dense[np.arange(n), np.arange(n)] = rng.uniform(1.0, 2.0, n) * rng.choice([-1.0, 1.0], n)
    return dense


def small_corpus(count=100, seed=20240611, lo=4, hi=8):
    """Nonsingular sparse matrices with n in [lo, hi], condition number below 1e6."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(lo, hi + 1))
        dense = random_sparse(rng, n, density=float(rng.uniform(0.15, 0.5)))
        if np.linalg.cond(dense) < 1e6:
            out.append(dense)
    return out


def convection_diffusion(m, beta=20.0):
    """Upwind-free central differences for -lap(u) + beta (u_x + 2 u_y) on an m x m grid."""
    h = 1.0 / (m + 1)
    rows, cols, vals = [], [], []
    for i in range(m):
        for j in range(m):
            p = i * m + j
            rows.append(p), cols.append(p), vals.append(4.0)
            for di, dj, w in ((-1, 0, -1 - beta * h / 2), (1, 0, -1 + beta * h / 2),
                              (0, -1, -1 - beta * h), (0, 1, -1 + beta * h)):
                ii, jj = i + di, j + dj
                if 0 <= ii < m and 0 <= jj < m:
                    rows.append(p), cols.append(ii * m + jj), vals.append(w)
    return SparseMatrix.from_coo(m * m, m * m, rows, cols, vals)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def grow_sequence(rng, n=40, density=0.08, steps=6):
    """Grow a pattern for a random column by random batches, updating the QR
    factor incrementally. Yields ``(dense, k, rows, cols, x, resnorm, factor)``
    after every step so callers can compare against a from-scratch solve."""
    from sai_forge.lsq import qr_append_columns, qr_solve
    from sai_forge.sparse import extract_submatrix, nonzero_rows_of_columns

    dense = random_sparse(rng, n, density=density)
    A = SparseMatrix.from_dense(dense)
    k = int(rng.integers(n))
    cols = [k]
    rows = np.union1d(nonzero_rows_of_columns(A, cols), [k])
    x, res, fac = qr_solve(extract_submatrix(A, rows, cols), (rows == k).astype(float),
                           row_ids=rows.tolist(), col_ids=cols)
    yield dense, k, np.asarray(fac.row_ids), list(fac.col_ids), x, res, fac
    for _ in range(steps):
        pool = np.setdiff1d(np.arange(n), fac.col_ids)
        if pool.size == 0:
            break
        new = rng.choice(pool, size=min(pool.size, int(rng.integers(1, 4))), replace=False)
        old = np.asarray(fac.row_ids, dtype=np.int64)
        add = np.setdiff1d(nonzero_rows_of_columns(A, new), old)
        allr = np.concatenate((old, add))
        rhs = np.concatenate((fac.rhs, (add == k).astype(float)))
        x, res, fac = qr_append_columns(fac, extract_submatrix(A, allr, new), add.tolist(), rhs,
                                        col_ids=new.tolist())
        yield dense, k, np.asarray(fac.row_ids), list(fac.col_ids), x, res, fac


# acceptance bookkeeping: one summary line per criterion -----------------

_ACCEPTANCE: dict = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        num, title = marker
        entry = _ACCEPTANCE.setdefault(num, {"title": title, "outcomes": []})
        reason = ""
        if report.skipped and isinstance(report.longrepr, tuple):
            reason = report.longrepr[2]
        entry["outcomes"].append((report.outcome, report.head_line or report.nodeid, reason))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        outcome.get_result().acceptance = (mark.args[0], mark.kwargs.get("title", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[num]
        kinds = [o for o, _, _ in entry["outcomes"]]
        if "failed" in kinds:
            verdict = "FAIL"
        elif all(k == "skipped" for k in kinds):
            verdict = "SKIPPED"
        elif "skipped" in kinds:
            verdict = "PARTIAL"
        else:
            verdict = "PASS"
        parts = [f"{name.split('.')[-1]}={o}" for o, name, _ in entry["outcomes"]]
        tr.write_line(f"criterion {num} [{verdict}] {entry['title']}: {', '.join(parts)}")
        for o, name, reason in entry["outcomes"]:
            if o == "skipped" and reason:
                tr.write_line(f"    {name.split('.')[-1]}: {reason}")
