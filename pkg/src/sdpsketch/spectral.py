"""Eigenstructure of the constraint sum compressed into the sketched basis.

Each entry of the compressed matrix is a trace against a rank-one outer
product of basis columns and is estimated summand by summand through the
randomized trace estimator; only the upper triangle is estimated and the
mirror is filled by conjugation before an exact eigendecomposition.
Working with the compressed matrix directly, rather than squaring through
a singular-value route, preserves eigenvalue signs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .errors import NumericalError
from .sketch import BasisSketch, MatrixSum
from .trace import EstimatorConfig, QueryableOperator, estimate_trace_product

# Absolute slack allowed on the compressed spectrum beyond the summand count.
SPECTRUM_SLACK = 0.5


def default_core_precision(eps: float, rank: int) -> float:
    """Worst-case total error budget eps / (400 rank^2) for the compression."""
    return eps / (400.0 * rank**2)


@dataclass(frozen=True)
class SpectralSurrogate:
    """Eigenvectors and descending real eigenvalues of the compressed matrix."""

    u: np.ndarray
    d: np.ndarray
    basis: Optional[BasisSketch] = None

    def __post_init__(self):
        r = self.d.shape[0]
        if self.u.shape != (r, r):
            raise ValueError(
                f"eigenvector block has shape {self.u.shape}, expected {(r, r)}"
            )
        if r and self.basis is not None:
            bound = self.basis.ms.tau + SPECTRUM_SLACK
            top = float(np.abs(self.d).max())
            if top > bound:
                raise NumericalError(
                    f"compressed spectrum reaches {top:.6g}, beyond the "
                    f"summand bound {bound:.6g}"
                )

    @property
    def r_tilde(self) -> int:
        return int(self.d.shape[0])


def estimate_vav(
    v: BasisSketch,
    ms: MatrixSum,
    eps_s: float,
    delta: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Estimate the basis-compressed constraint sum to Frobenius error eps_s.

    Entry (i, j) of the result approximates column_i^dagger A column_j for
    the summed constraint A.  The budget is split as in the error
    analysis: each of the tau summand contributions to each entry is
    estimated to eps_s / (r_tilde tau) with failure probability
    2 delta / (tau (r_tilde^2 + r_tilde)).  Cost grows with
    (r_tilde tau / eps_s)^2, so callers at desk scale pass a per-entry
    budget scaled up accordingly.
    """
    r = v.r_tilde
    tau = ms.tau
    if r == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    dense_cols = v.rows_dense(range(v.n))
    col_norms = np.sqrt((np.abs(dense_cols) ** 2).sum(axis=0))
    eps_entry = eps_s / (r * tau)
    delta_entry = 2.0 * delta / (tau * (r**2 + r))
    cfg = EstimatorConfig(eps=eps_entry, delta=delta_entry)

    pairs = [(i, j) for i in range(r) for j in range(i, r)]
    streams = rng.spawn(len(pairs) * tau)
    out = np.zeros((r, r), dtype=np.complex128)
    pos = 0
    for i, j in pairs:
        def bulk(rows, cols, _i=i, _j=j):
            return dense_cols[rows, _j] * np.conj(dense_cols[cols, _i])

        oracle = QueryableOperator(
            n=v.n,
            entry=lambda a, b, _i=i, _j=j: complex(
                dense_cols[a, _j] * np.conj(dense_cols[b, _i])
            ),
            fro_bound=float(col_norms[j] * col_norms[i]),
            hermitian=(i == j),
            bulk_entries=bulk,
        )
        total = 0j
        for summand in ms.summands:
            total += estimate_trace_product(summand, oracle, cfg, streams[pos])
            pos += 1
        out[i, j] = total
        if i != j:
            out[j, i] = total.conjugate()
    return 0.5 * (out + out.conj().T)


def decompose(core: np.ndarray, basis: Optional[BasisSketch] = None) -> SpectralSurrogate:
    """Exact eigendecomposition of the (Hermitian) compressed matrix."""
    core = np.asarray(core, dtype=np.complex128)
    if core.shape[0] == 0:
        return SpectralSurrogate(
            u=np.zeros((0, 0), dtype=np.complex128),
            d=np.zeros(0, dtype=np.float64),
            basis=basis,
        )
    u, d = linalg.eigh(core)
    return SpectralSurrogate(u=u, d=d, basis=basis)


def spectral_approximation(
    v: BasisSketch,
    ms: MatrixSum,
    eps: float,
    delta: float,
    rng: np.random.Generator,
) -> SpectralSurrogate:
    """Compression plus decomposition at the worst-case error budget.

    Uses the full eps / (400 rank^2) target; sample counts explode for
    small eps, so this entry point suits only tiny demonstrations.
    """
    core = estimate_vav(v, ms, default_core_precision(eps, ms.rank), delta, rng)
    return decompose(core, basis=v)
