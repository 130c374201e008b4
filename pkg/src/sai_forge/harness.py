"""Experiment sweeps: load, permute, precondition, solve, report."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import SaiConfig
from .krylov import SolveOutcome, Status, bicgstab, ones_rhs
from .matching import ensure_nonzero_diagonal
from .mmio import load_matrix_market
from .precond import ALGORITHMS, build_preconditioner
from .sparse import SparseMatrix

log = logging.getLogger(__name__)

MARKERS = {Status.MAX_ITERS: "†", Status.STAGNATED: "‡", Status.BREAKDOWN: "brk"}
COLUMNS = ("matrix", "algorithm", "spar", "ptime", "n_c", "iter", "stime",
           "eps", "c", "lmax", "la", "drop", "relres", "error")


@dataclass
class RunReport:
    matrix: str
    algorithm: str
    config: dict
    n: int = 0
    nnz_A: int = 0
    nnz_M: int = 0
    spar: float = float("nan")
    ptime: float = float("nan")
    n_c: int = 0
    iterations: int | None = None
    status: str | None = None
    stime: float = float("nan")
    relres: float = float("nan")
    l_max_used: int = 0
    permuted: bool = False
    error: str | None = None

    @property
    def iter_cell(self) -> str:
        if self.error is not None or self.status is None:
            return "-"
        if self.status == Status.CONVERGED.value:
            return str(self.iterations)
        return MARKERS[Status(self.status)]

    def row(self) -> dict:
        cfg = self.config
        ok = self.status == Status.CONVERGED.value
        return {
            "matrix": self.matrix,
            "algorithm": self.algorithm,
            "spar": _fmt(self.spar, 2),
            "ptime": _fmt(self.ptime, 2),
            "n_c": "-" if self.error else str(self.n_c),
            "iter": self.iter_cell,
            "stime": _fmt(self.stime, 2) if ok else "-",
            "eps": f"{cfg.get('epsilon', '')}",
            "c": f"{cfg.get('c', '')}" if self.algorithm == "rsai" else "-",
            "lmax": str(self.l_max_used or cfg.get("l_max", "")),
            "la": f"{cfg.get('l_a', '')}" if self.algorithm == "spai" else "-",
            "drop": ("on" if cfg.get("dropping") else "off") if self.algorithm == "rsai" else "-",
            "relres": _fmt(self.relres, 1, sci=True),
            "error": self.error or "",
        }


def _fmt(x, digits, sci=False):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    return f"{x:.{digits}e}" if sci else f"{x:.{digits}f}"


@dataclass
class ExperimentSpec:
    matrices: list
    algorithms: list = field(default_factory=lambda: ["rsai"])
    epsilons: list = field(default_factory=lambda: [0.4])
    cs: list = field(default_factory=lambda: [3])
    l_maxes: list = field(default_factory=lambda: [10])
    l_as: list = field(default_factory=lambda: [3])
    droppings: list = field(default_factory=lambda: [True])
    spai_nnz_cap_ratio: float = 5.0
    spai_lmax: str | int = "auto"
    rtol: float = 1e-8
    max_iters: int = 1000
    output_format: str = "table"
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.matrices:
            raise ValueError("no matrices given")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"unknown algorithm(s) {bad}; expected {ALGORITHMS}")
        for name in ("epsilons", "cs", "l_maxes", "l_as", "droppings"):
            if not getattr(self, name):
                raise ValueError(f"parameter grid '{name}' is empty")
        if self.output_format not in ("table", "csv", "json"):
            raise ValueError(f"unknown format {self.output_format!r}")
        if not self.rtol > 0 or self.max_iters < 1 or self.workers < 1:
            raise ValueError("rtol, max_iters and workers must be positive")
        if self.spai_lmax != "auto" and int(self.spai_lmax) < 1:
            raise ValueError("spai_lmax must be 'auto' or a positive integer")
        self.points()  # SaiConfig validates every grid point

    def points(self) -> list[tuple[str, str, SaiConfig]]:
        """Expand to ``(matrix, algorithm, config)`` triples in a stable order."""
        out = []
        for mat in self.matrices:
            for alg in self.algorithms:
                if alg == "rsai":
                    grid = itertools.product(self.epsilons, self.cs, self.l_maxes, self.droppings, [self.l_as[0]])
                else:
                    grid = itertools.product(self.epsilons, [self.cs[0]], self.l_maxes, [False], self.l_as)
                for eps, c, lmax, drop, la in grid:
                    cfg = SaiConfig(epsilon=float(eps), c=int(c), l_max=int(lmax), dropping=bool(drop),
                                    l_a=int(la), spai_nnz_cap_ratio=self.spai_nnz_cap_ratio)
                    out.append((str(mat), alg, cfg))
        return out


def matrix_name(path) -> str:
    name = Path(path).name
    for suffix in (".gz", ".mtx"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


def prepare_matrix(path) -> tuple[SparseMatrix, bool]:
    """Load and row-permute to a zero-free diagonal; returns ``(PA, permuted)``."""
    A = load_matrix_market(path)
    perm, PA = ensure_nonzero_diagonal(A)
    return PA, not perm.is_identity()


def run_point(A: SparseMatrix, name: str, algorithm: str, cfg: SaiConfig, *,
              rtol: float = 1e-8, max_iters: int = 1000, spai_lmax="auto",
              permuted: bool = False) -> RunReport:
    """One experiment on an already prepared matrix."""
    rep = RunReport(matrix=name, algorithm=algorithm, config=cfg.as_dict(), n=A.n_rows,
                    nnz_A=A.nnz, permuted=permuted)
    lmax = cfg.l_max
    if algorithm == "spai":
        lmax = cfg.spai_lmax(A) if spai_lmax == "auto" else int(spai_lmax)
    rep.l_max_used = lmax
    pre = build_preconditioner(A, cfg, algorithm, spai_lmax=lmax if algorithm == "spai" else None)
    rep.nnz_M = pre.M.nnz
    rep.spar = pre.M.nnz / A.nnz
    rep.ptime = pre.ptime
    rep.n_c = pre.n_c
    b = ones_rhs(A)
    t0 = time.perf_counter()
    out: SolveOutcome = bicgstab(A, pre.M, b, rtol=rtol, max_iters=max_iters)
    rep.stime = time.perf_counter() - t0
    rep.status = out.status.value
    rep.iterations = out.whole_iterations
    rep.relres = out.final_relative_residual
    return rep


def _run_indexed(args):
    idx, path, alg, cfg, rtol, max_iters, spai_lmax = args
    name = matrix_name(path)
    try:
        A, permuted = prepare_matrix(path)
        rep = run_point(A, name, alg, cfg, rtol=rtol, max_iters=max_iters,
                        spai_lmax=spai_lmax, permuted=permuted)
    except Exception as exc:  # per-row failure, never abort the sweep
        log.warning("%s/%s failed: %s", name, alg, exc)
        rep = RunReport(matrix=name, algorithm=alg, config=cfg.as_dict(), error=f"{type(exc).__name__}: {exc}")
    return idx, rep


def run_experiment(spec: ExperimentSpec) -> list[RunReport]:
    """Run every grid point of ``spec``; reports come back in grid order."""
    jobs = [(i, m, a, cfg, spec.rtol, spec.max_iters, spec.spai_lmax)
            for i, (m, a, cfg) in enumerate(spec.points())]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    else:
        results = [_run_indexed(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    return [r for _, r in results]


def emit_report(reports: list[RunReport], fmt: str = "table") -> str:
    """Render reports as an aligned text table, CSV or JSON."""
    if fmt == "json":
        return json.dumps([asdict(r) for r in reports], indent=2, default=float)
    rows = [r.row() for r in reports]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    cols = [c for c in COLUMNS if c != "error" or any(r["error"] for r in rows)]
    width = {c: max([len(c)] + [len(r[c]) for r in rows]) for c in cols}
    lines = ["  ".join(c.rjust(width[c]) for c in cols)]
    lines.append("  ".join("-" * width[c] for c in cols))
    for r in rows:
        lines.append("  ".join(r[c].rjust(width[c]) for c in cols))
    return "\n".join(lines) + "\n"


def matrix_stats(A: SparseMatrix) -> dict:
    """Size and regularity figures: ``p`` average per column, ``p_d`` densest
    column, ``s`` columns with more than ``10 p`` entries, ``g`` densest row."""
    counts = A.col_nnz
    p = A.nnz / A.n_cols
    return {
        "n": A.n_cols,
        "nnz": A.nnz,
        "s": int(np.count_nonzero(counts > 10 * p)),
        "p": round(p),
        "p_d": int(counts.max()),
        "g": A.max_row_nnz,
        "norm_1": A.norm_1,
        "zero_free_diagonal": A.has_zero_free_diagonal(),
    }
