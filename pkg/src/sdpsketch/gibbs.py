"""Succinct Gibbs-weighted solution candidate and its trace estimates.

The candidate density operator is (V U) exp(-beta D) (V U)^dagger / eta
for the sketched basis V and compressed eigensystem (U, D), with
eta = sum_k exp(-beta D_k).  The normalizer is carried in max-subtracted
form (mantissa, log-scale) so large exponents cannot overflow; entry
queries cancel the scale exactly.  When the basis is empty the candidate
falls back to the maximally mixed state I/n.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .sketch import BasisSketch
from .spectral import SpectralSurrogate
from .trace import EstimatorConfig, QueryableOperator, estimate_trace_product

# Relative headroom on the declared Frobenius bound over the computed norm.
_BOUND_SLACK = 1e-9


class GibbsDescription:
    """Queryable description of the Gibbs-weighted candidate.

    Immutable in meaning; internal caches only memoize basis rows.  Entry
    queries cost O(p tau) on the first touch of a row and O(r_tilde)
    after.
    """

    def __init__(
        self,
        n: int,
        beta: float,
        basis: BasisSketch | None,
        surrogate: SpectralSurrogate | None,
    ):
        if beta < 0:
            raise ValueError(f"beta must be nonnegative, got {beta}")
        self.n = n
        self.beta = float(beta)
        self.basis = basis
        self.surrogate = surrogate
        self.uniform_fallback = basis is None
        if self.uniform_fallback:
            self.r_tilde = 0
            self.eta_mantissa = float(n)
            self.eta_log = 0.0
            self._core = None
        else:
            d = surrogate.d
            self.r_tilde = int(d.shape[0])
            d_min = float(d.min())
            weights = np.exp(-self.beta * (d - d_min))
            self.eta_mantissa = float(weights.sum())
            self.eta_log = -self.beta * d_min
            core = (surrogate.u * weights[np.newaxis, :]) @ surrogate.u.conj().T
            core /= self.eta_mantissa
            self._core = 0.5 * (core + core.conj().T)
        self._v_rows = None
        self._vm_rows = None
        self._filled = None
        self._fro = None

    @classmethod
    def uniform(cls, n: int) -> "GibbsDescription":
        """Maximally mixed fallback I/n."""
        return cls(n=n, beta=0.0, basis=None, surrogate=None)

    @property
    def eta(self) -> float:
        return self.eta_mantissa * float(np.exp(self.eta_log))

    # -- basis row cache ----------------------------------------------

    def _ensure_rows(self, indices: np.ndarray) -> None:
        if self._v_rows is None:
            self._v_rows = np.zeros((self.n, self.r_tilde), dtype=np.complex128)
            self._vm_rows = np.zeros((self.n, self.r_tilde), dtype=np.complex128)
            self._filled = np.zeros(self.n, dtype=bool)
        missing = np.unique(indices)
        missing = missing[~self._filled[missing]]
        for i in missing:
            row = self.basis.row(int(i))
            self._v_rows[i] = row
            self._vm_rows[i] = row @ self._core
            self._filled[i] = True

    def _entry_gibbs(self, i: int, j: int) -> complex:
        self._ensure_rows(np.array([i, j]))
        return complex(np.sum(self._vm_rows[i] * np.conj(self._v_rows[j])))

    # -- queries ------------------------------------------------------

    def query(self, i: int, j: int) -> complex:
        """Candidate entry (i, j); conjugate-symmetric by construction."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"index ({i}, {j}) outside [0, {self.n})")
        if self.uniform_fallback:
            return complex(1.0 / self.n) if i == j else 0j
        if i > j:
            return self._entry_gibbs(j, i).conjugate()
        return self._entry_gibbs(i, j)

    def frobenius_norm(self) -> float:
        """Exact Frobenius norm of the candidate."""
        if self.uniform_fallback:
            return 1.0 / float(np.sqrt(self.n))
        if self._fro is None:
            self._ensure_rows(np.arange(self.n))
            gram = self._v_rows.conj().T @ self._v_rows
            sq = float(
                np.real(np.trace(self._core @ gram @ self._core.conj().T @ gram))
            )
            self._fro = float(np.sqrt(max(sq, 0.0)))
        return self._fro

    def operator(self) -> QueryableOperator:
        """Entry oracle for the trace estimator."""
        if self.uniform_fallback:
            inv_n = 1.0 / self.n

            def bulk_uniform(rows, cols):
                return np.where(rows == cols, inv_n, 0.0).astype(np.complex128)

            return QueryableOperator(
                n=self.n,
                entry=lambda i, j: complex(inv_n) if i == j else 0j,
                fro_bound=1.0 / float(np.sqrt(self.n)),
                hermitian=True,
                bulk_entries=bulk_uniform,
            )

        def bulk_gibbs(rows, cols):
            self._ensure_rows(np.concatenate([rows, cols]))
            return np.einsum(
                "bl,bl->b", self._vm_rows[rows], np.conj(self._v_rows[cols])
            )

        return QueryableOperator(
            n=self.n,
            entry=self.query,
            fro_bound=self.frobenius_norm() * (1.0 + _BOUND_SLACK),
            hermitian=True,
            bulk_entries=bulk_gibbs,
        )


def make_gibbs(v: BasisSketch, s: SpectralSurrogate, beta: float) -> GibbsDescription:
    """Assemble the candidate from a basis and its compressed eigensystem."""
    if s.r_tilde == 0:
        return GibbsDescription.uniform(v.ms.n)
    if s.r_tilde != v.r_tilde:
        raise ShapeError(
            f"eigensystem size {s.r_tilde} does not match basis size {v.r_tilde}"
        )
    return GibbsDescription(n=v.ms.n, beta=beta, basis=v, surrogate=s)


def query_solution_entry(g: GibbsDescription, i: int, j: int) -> complex:
    """Entry (i, j) of the candidate density operator."""
    return g.query(i, j)


def estimate_constraint_trace(
    g: GibbsDescription,
    a,
    eps: float,
    delta: float,
    rng: np.random.Generator,
) -> float:
    """Estimate Tr[A rho] for the candidate rho to additive eps.

    The Monte-Carlo budget targets eps / 5; the remainder of the error
    allowance covers the gap between the candidate and the ideal Gibbs
    state it approximates.  Both operands are Hermitian, so the estimate
    is real.
    """
    cfg = EstimatorConfig(eps=eps / 5.0, delta=delta)
    zeta = estimate_trace_product(a, g.operator(), cfg, rng)
    return float(zeta.real)
