"""Right-preconditioned BiCGStab: solve ``A M y = b`` and return ``x = M y``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .sparse import SparseMatrix, sparse_matvec

BREAKDOWN_TOL = 1e-300
STAGNATION_WINDOW = 50
STAGNATION_REL = 1e-14


class Status(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    STAGNATED = "stagnated"
    BREAKDOWN = "breakdown"


@dataclass
class SolveOutcome:
    status: Status
    iterations: float
    final_relative_residual: float
    solution: np.ndarray
    history: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def whole_iterations(self) -> int:
        """Iteration count rounded up (a converged half step counts as one)."""
        return int(math.ceil(self.iterations))


def _true_relres(A, b, x, bnorm):
    return float(np.linalg.norm(b - sparse_matvec(A, x)) / bnorm)


def bicgstab(
    A: SparseMatrix,
    M: SparseMatrix | None,
    b,
    rtol: float = 1e-8,
    max_iters: int = 1000,
) -> SolveOutcome:
    """BiCGStab on ``v -> A (M v)`` from ``x0 = 0``.

    Convergence is tested at both half steps and is only accepted once the
    true residual ``||b - A x|| / ||b||`` is below ``rtol``. ``M=None`` means
    no preconditioning. ``history`` holds the recurrence relative residual
    after every half step.
    """
    b = np.asarray(b, dtype=np.float64)
    n = A.n_rows
    if A.n_cols != n or b.shape != (n,):
        raise ValueError(f"dimension mismatch: A is {A.shape}, b has shape {b.shape}")
    if M is not None and M.shape != (n, n):
        raise ValueError(f"preconditioner shape {M.shape} does not match A {A.shape}")
    apply_m = (lambda v: v) if M is None else (lambda v: sparse_matvec(M, v))

    x = np.zeros(n)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return SolveOutcome(Status.CONVERGED, 0.0, 0.0, x)

    r = b.copy()
    r_hat = r.copy()
    p = np.zeros(n)
    v = np.zeros(n)
    rho_prev = alpha = omega = 1.0
    history = [1.0]
    best = 1.0
    since_best = 0

    def done(status, iters, xx):
        return SolveOutcome(status, iters, _true_relres(A, b, xx, bnorm), xx, history)

    for it in range(1, max_iters + 1):
        rho = float(np.dot(r_hat, r))
        if not math.isfinite(rho) or abs(rho) < BREAKDOWN_TOL:
            return done(Status.BREAKDOWN, it - 1, x)
        if it == 1:
            p = r.copy()
        else:
            beta = (rho / rho_prev) * (alpha / omega)
            p = r + beta * (p - omega * v)
        p_hat = apply_m(p)
        v = sparse_matvec(A, p_hat)
        denom = float(np.dot(r_hat, v))
        if not math.isfinite(denom) or abs(denom) < BREAKDOWN_TOL:
            return done(Status.BREAKDOWN, it - 1, x)
        alpha = rho / denom
        s = r - alpha * v
        x_half = x + alpha * p_hat
        rel = float(np.linalg.norm(s)) / bnorm
        history.append(rel)
        if not math.isfinite(rel):
            return done(Status.BREAKDOWN, it - 0.5, x)
        if rel < rtol and _true_relres(A, b, x_half, bnorm) < rtol:
            return done(Status.CONVERGED, it - 0.5, x_half)

        s_hat = apply_m(s)
        t = sparse_matvec(A, s_hat)
        tt = float(np.dot(t, t))
        if tt == 0.0 or not math.isfinite(tt):
            return done(Status.BREAKDOWN, it - 0.5, x_half)
        omega = float(np.dot(t, s)) / tt
        if not math.isfinite(omega) or abs(omega) < BREAKDOWN_TOL:
            return done(Status.BREAKDOWN, it - 0.5, x_half)
        x = x_half + omega * s_hat
        r = s - omega * t
        rel = float(np.linalg.norm(r)) / bnorm
        history.append(rel)
        if not math.isfinite(rel):
            return done(Status.BREAKDOWN, it, x_half)
        if rel < rtol:
            true_r = b - sparse_matvec(A, x)
            if float(np.linalg.norm(true_r)) / bnorm < rtol:
                return done(Status.CONVERGED, float(it), x)
            # recurrence drifted below rtol: continue from the true residual
            r = true_r
            rel = float(np.linalg.norm(r)) / bnorm

        if rel < best * (1.0 - STAGNATION_REL):
            best = rel
            since_best = 0
        else:
            since_best += 1
            if since_best >= STAGNATION_WINDOW:
                return done(Status.STAGNATED, float(it), x)
        rho_prev = rho

    return done(Status.MAX_ITERS, float(max_iters), x)


def ones_rhs(A: SparseMatrix) -> np.ndarray:
    """Right-hand side whose exact solution is the all-ones vector."""
    return sparse_matvec(A, np.ones(A.n_cols))
