"""Randomized estimation of Tr[A B] from sampling access to A.

One sample draws a position (i, j) of A with probability
|A(i, j)|^2 / ||A||_F^2 and evaluates B(j, i) ||A||_F^2 / conj(A(i, j)),
which is unbiased for Tr[A B] with variance at most ||A||_F^2 ||B||_F^2.
Samples are averaged within batches sized by Chebyshev and the batch means
are combined by a coordinate-wise median (real and imaginary parts
separately) to reach the requested failure probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ShapeError, ZeroMassError

# Samples per vectorized block; fixed so results do not depend on memory.
_CHUNK = 1 << 18


@dataclass(frozen=True)
class QueryableOperator:
    """Entry-oracle view of a matrix for the B side of Tr[A B].

    `fro_bound` must dominate the true Frobenius norm.  `bulk_entries`,
    when given, evaluates entry arrays in one call and must agree with
    `entry` pointwise.  `hermitian` enables the real-result fast path.
    """

    n: int
    entry: Callable[[int, int], complex]
    fro_bound: float
    hermitian: bool = False
    bulk_entries: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def evaluate(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        if self.bulk_entries is not None:
            return np.asarray(self.bulk_entries(rows, cols), dtype=np.complex128)
        return np.array(
            [self.entry(int(i), int(j)) for i, j in zip(rows, cols)],
            dtype=np.complex128,
        )


@dataclass(frozen=True)
class EstimatorConfig:
    """Additive error target and failure probability for one estimate.

    `count_scale` and `size_scale` are the derivation constants for the
    median/mean schedule; the defaults give ceil(18 ln(1/delta)) batches
    of ceil(6 ||A||_F^2 ||B||_F^2 / eps^2) samples.
    """

    eps: float
    delta: float
    count_scale: float = 18.0
    size_scale: float = 6.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.count_scale <= 0 or self.size_scale <= 0:
            raise ValueError("derivation constants must be positive")

    def batch_count(self) -> int:
        return max(1, math.ceil(self.count_scale * math.log(1.0 / self.delta)))

    def batch_size(self, a_fro_sq: float, b_fro_sq: float) -> int:
        return max(1, math.ceil(self.size_scale * a_fro_sq * b_fro_sq / self.eps**2))


def estimate_trace_product(
    a,
    b: QueryableOperator,
    cfg: EstimatorConfig,
    rng: np.random.Generator,
) -> complex:
    """Estimate Tr[A B] to within cfg.eps with probability 1 - cfg.delta.

    `a` is a sampling store (SampledMatrix or a view of one); `b` is an
    entry oracle with a declared norm bound.  Batches use independent
    child streams of `rng`, so the result is a fixed function of the seed
    regardless of evaluation order.
    """
    if a.n != b.n:
        raise ShapeError(f"operand dimensions differ: {a.n} vs {b.n}")
    a_fro = a.frobenius_norm()
    if a_fro == 0.0:
        return 0j
    if b.fro_bound == 0.0:
        raise ZeroMassError("B declares zero Frobenius norm but A has mass")
    a_fro_sq = a_fro * a_fro
    count = cfg.batch_count()
    size = cfg.batch_size(a_fro_sq, b.fro_bound**2)
    means = np.zeros(count, dtype=np.complex128)
    for batch, child in enumerate(rng.spawn(count)):
        acc = 0j
        done = 0
        while done < size:
            step = min(_CHUNK, size - done)
            rows, cols, vals = a.sample_entries(step, child)
            bvals = b.evaluate(cols, rows)
            acc += complex((bvals * (a_fro_sq / np.conj(vals))).sum())
            done += step
        means[batch] = acc / size
    result = complex(np.median(means.real), np.median(means.imag))
    if getattr(a, "hermitian", False) and b.hermitian:
        result = complex(result.real, 0.0)
    return result
