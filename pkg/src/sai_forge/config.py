from __future__ import annotations

from dataclasses import asdict, dataclass

from .sparse import SparseMatrix


@dataclass(frozen=True)
class SaiConfig:
    """Parameters shared by the RSAI and SPAI column builders.

    epsilon
        Column residual tolerance; a column is done once ``||A m_k - e_k|| <= epsilon``.
    c
        Dominant residual indices taken per RSAI loop.
    l_max
        Maximum number of loops per column.
    dropping
        Apply the adaptive small-entry dropping (RSAI(tol)); off gives basic RSAI.
    l_a
        Most profitable indices SPAI adds per loop.
    spai_nnz_cap_ratio
        Target bound on ``nnz(M)/nnz(A)`` used to derive the SPAI loop cap,
        see :meth:`spai_lmax`.
    """

    epsilon: float = 0.4
    c: int = 3
    l_max: int = 10
    dropping: bool = True
    l_a: int = 3
    spai_nnz_cap_ratio: float = 5.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        for name in ("c", "l_max", "l_a"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v}")
        if not self.spai_nnz_cap_ratio > 0:
            raise ValueError("spai_nnz_cap_ratio must be positive")

    def spai_lmax(self, A: SparseMatrix) -> int:
        """Loop cap for SPAI in benchmark mode.

        ``floor(2 * ratio * nnz(A) / (l_a * n))``; ratio 5 and ``l_a = 3``
        reproduce the ``floor(10 nnz(A) / (3 n))`` cap of the published runs.
        """
        n = A.n_cols
        return max(1, int((2.0 * self.spai_nnz_cap_ratio * A.nnz) // (self.l_a * n)))

    def as_dict(self) -> dict:
        return asdict(self)
