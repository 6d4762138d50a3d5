"""Dense complex linear algebra with fixed ordering conventions.

Thin wrappers over LAPACK that pin down the conventions the rest of the
package relies on: singular values and eigenvalues come back in descending
order, ties keep their input order, and QR is made unique by forcing a
nonnegative real diagonal on the triangular factor.
"""
from __future__ import annotations

import numpy as np

from .errors import HermiticityError, NumericalError

HERMITIAN_CHECK_TOL = 1e-10
MAX_DENSE_DIM = 10_000


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={a.ndim}")
    if max(a.shape, default=0) > MAX_DENSE_DIM:
        raise ValueError(f"{name} exceeds the dense size cap {MAX_DENSE_DIM}")
    return a


def svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD `a = u @ diag(s) @ vh` with `s` descending."""
    a = _as_matrix(a, "svd input")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"svd did not converge: {exc}") from exc
    return u, s, vh


def eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (u, d) with `a = u @ diag(d) @ u.conj().T` and `d` real,
    sorted descending with a stable tie order.
    """
    a = _as_matrix(a, "eigh input")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"eigh input must be square, got shape {a.shape}")
    if a.size:
        defect = float(np.abs(a - a.conj().T).max())
        if defect > HERMITIAN_CHECK_TOL:
            raise HermiticityError(f"eigh input deviates from Hermitian by {defect:.3e}")
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigh did not converge: {exc}") from exc
    order = np.argsort(-vals, kind="stable")
    return vecs[:, order], vals[order]


def qr(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR with the diagonal of R made real and nonnegative."""
    a = _as_matrix(a, "qr input")
    try:
        q, r = np.linalg.qr(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"qr did not converge: {exc}") from exc
    diag = np.diagonal(r).copy()
    phase = np.where(np.abs(diag) > 0, diag / np.where(np.abs(diag) > 0, np.abs(diag), 1.0), 1.0)
    q = q * phase[np.newaxis, :]
    r = r * phase.conj()[:, np.newaxis]
    return q, r
