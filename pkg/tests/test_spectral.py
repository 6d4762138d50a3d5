"""Compressed constraint matrix: estimation accuracy and sign-safe spectra."""

import numpy as np
import pytest

from sdpsketch.errors import HermiticityError, NumericalError
from sdpsketch.instances import random_low_rank, random_matrix_sum
from sdpsketch.oracle import dense_vav
from sdpsketch.rng import substream
from sdpsketch.sketch import BasisSketch, MatrixSum, SketchParams, build_sketch
from sdpsketch.spectral import (
    SpectralSurrogate,
    decompose,
    default_core_precision,
    estimate_vav,
    spectral_approximation,
)


def sketched_sum(n=12, tau=1, rank=2, p=60, seed=40, traceless=False):
    ms = random_matrix_sum(
        n, tau=tau, rank=rank, rng=substream(seed, 1), traceless=traceless
    )
    v = build_sketch(ms, SketchParams(p=p, gamma=1e-6), substream(seed, 2))
    return ms, v


class TestDecompose:
    def test_preserves_signs(self):
        s = decompose(np.diag([1.0, -1.0]).astype(complex))
        assert np.allclose(s.d, [1.0, -1.0])

    def test_descending_and_reconstructs(self):
        rng = substream(41, 1)
        w = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        core = 0.5 * (w + w.conj().T)
        s = decompose(core)
        assert np.all(np.diff(s.d) <= 0)
        assert np.allclose(s.u @ np.diag(s.d) @ s.u.conj().T, core, atol=1e-12)
        assert np.allclose(s.u.conj().T @ s.u, np.eye(4), atol=1e-12)

    def test_empty_core(self):
        s = decompose(np.zeros((0, 0)))
        assert s.r_tilde == 0

    def test_rejects_non_hermitian(self):
        with pytest.raises(HermiticityError):
            decompose(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


class TestSurrogateValidation:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            SpectralSurrogate(u=np.eye(3, dtype=complex), d=np.zeros(2))

    def test_spectrum_bound_uses_summand_count(self):
        _, v = sketched_sum(seed=42)
        # tau = 1 allows |d| up to 1.5; 2.0 must be rejected.
        ok = np.zeros(v.r_tilde)
        ok[0] = 1.4
        SpectralSurrogate(u=np.eye(v.r_tilde, dtype=complex), d=ok, basis=v)
        bad = np.zeros(v.r_tilde)
        bad[0] = 2.0
        with pytest.raises(NumericalError):
            SpectralSurrogate(u=np.eye(v.r_tilde, dtype=complex), d=bad, basis=v)

    def test_unanchored_surrogate_skips_bound(self):
        SpectralSurrogate(u=np.eye(1, dtype=complex), d=np.array([7.0]))


class TestEstimateVav:
    def test_matches_dense_compression(self):
        ms, v = sketched_sum(n=10, tau=1, rank=2, p=60, seed=43)
        r = v.r_tilde
        est = estimate_vav(ms=ms, v=v, eps_s=0.08 * r, delta=0.1,
                           rng=substream(43, 3))
        exact = dense_vav(v, ms)
        assert est.shape == (r, r)
        assert np.abs(est - exact).max() <= 0.15
        assert np.linalg.norm(est - exact) <= 0.2 * r

    def test_result_exactly_hermitian(self):
        ms, v = sketched_sum(n=8, tau=2, rank=1, p=40, seed=44)
        est = estimate_vav(v, ms, eps_s=0.2 * v.r_tilde * ms.tau, delta=0.1,
                           rng=substream(44, 3))
        assert np.array_equal(est, est.conj().T)

    def test_deterministic_per_stream(self):
        ms, v = sketched_sum(n=8, tau=1, rank=2, p=40, seed=45)
        a = estimate_vav(v, ms, eps_s=0.3, delta=0.1, rng=substream(45, 3))
        b = estimate_vav(v, ms, eps_s=0.3, delta=0.1, rng=substream(45, 3))
        assert np.array_equal(a, b)

    def test_empty_basis_gives_empty_core(self):
        ms, v = sketched_sum(n=8, tau=1, rank=2, p=40, seed=46)
        hollow = BasisSketch(
            ms, v.rows, v.row_probs,
            np.zeros(0), np.zeros((v.p, 0), dtype=complex),
        )
        est = estimate_vav(hollow, ms, eps_s=0.1, delta=0.1,
                           rng=substream(46, 3))
        assert est.shape == (0, 0)
        assert decompose(est, basis=hollow).r_tilde == 0


class TestEndToEndSpectrum:
    def test_planted_signs_survive_compression(self):
        # Spectrum exactly {+1, -1}: the compressed matrix must keep one
        # positive and one negative eigenvalue rather than folding signs.
        ms, v = sketched_sum(n=16, tau=1, rank=2, p=200, seed=47,
                             traceless=True)
        assert v.r_tilde == 2
        core = estimate_vav(v, ms, eps_s=0.3, delta=0.05, rng=substream(47, 3))
        s = decompose(core, basis=v)
        assert s.d[0] > 0.5
        assert s.d[1] < -0.5

    def test_worst_case_entry_point_at_toy_scale(self):
        ms, v = sketched_sum(n=6, tau=1, rank=1, p=30, seed=48)
        s = spectral_approximation(ms=ms, v=v, eps=5.0, delta=0.1,
                                   rng=substream(48, 3))
        exact = np.linalg.eigvalsh(dense_vav(v, ms))[::-1]
        assert np.abs(s.d - exact).max() <= 0.05

    def test_default_precision_frozen_value(self):
        assert default_core_precision(0.2, 2) == 0.2 / 1600.0
