"""Spot volatility by Fourier-Fejer inversion of the estimated spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, TuningError
from .spectrum import SpectrumEstimate


@dataclass(frozen=True)
class SpotPath:
    """Spot covariance matrices on the uniform grid ``t_h = hT/B``, ``h = 0..B-1``."""

    T: float
    B: int
    values: np.ndarray
    N: Optional[int] = None
    M: Optional[int] = None
    max_imag: float = 0.0
    conditioned: bool = False

    @property
    def t_grid(self) -> np.ndarray:
        return np.arange(self.B) * (self.T / self.B)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def at_index(self, h):
        """Value at ``t_h`` for any integer ``h`` (the path is ``B``-periodic)."""
        return self.values[np.asarray(h) % self.B]


def default_B(N: int, M: int) -> int:
    """Next power of two >= max(4M, 8 ceil(sqrt N))."""
    target = max(4 * M, 8 * math.ceil(math.sqrt(N)))
    return 1 << (target - 1).bit_length()


def fejer_weights(M: int) -> np.ndarray:
    q = np.arange(-M + 1, M)
    return 1.0 - np.abs(q) / M


def _check_M(spec: SpectrumEstimate, M: int):
    if M < 1:
        raise TuningError(f"M must be >= 1, got {M}")
    limit = min(n // 2 for n in spec.sizes) - spec.N + 1
    if M > limit:
        raise TuningError(f"M={M} exceeds floor(n_min/2) - N + 1 = {limit}")
    if M - 1 > spec.q_max:
        raise TuningError(f"M={M} needs |q| <= {M - 1} but spectrum has q_max={spec.q_max}")


def fejer_inversion(spec: SpectrumEstimate, M: int, B: Optional[int] = None) -> SpotPath:
    """Cesaro-weighted inverse series evaluated on ``B`` equispaced times.

    The ``2M-1`` weighted coefficients are zero-padded symmetrically to
    length ``B`` and transformed with one inverse FFT per matrix entry.
    """
    _check_M(spec, M)
    if B is None:
        B = default_B(spec.N, M)
    if B < 2 * M - 1:
        raise ConfigurationError(f"B={B} < 2M-1={2 * M - 1}: coefficients would alias")
    q = np.arange(-M + 1, M)
    weighted = fejer_weights(M)[:, None, None] * spec.at(q)
    padded = np.zeros((B, spec.d, spec.d), dtype=complex)
    padded[q % B] = weighted
    vals = np.fft.ifft(padded, axis=0) * (B / spec.T)
    max_imag = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    return SpotPath(T=spec.T, B=B, values=vals.real.copy(), N=spec.N, M=M, max_imag=max_imag)


def spot_at(spec: SpectrumEstimate, M: int, t) -> np.ndarray:
    """Direct evaluation of the Fejer series at arbitrary times; shape ``(len(t), d, d)``."""
    _check_M(spec, M)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    q = np.arange(-M + 1, M)
    weighted = fejer_weights(M)[:, None, None] * spec.at(q)
    phase = np.exp(2j * np.pi * np.outer(t, q) / spec.T)
    vals = np.einsum("tq,qjk->tjk", phase, weighted) / spec.T
    return vals.real


def condition_matrices(values: np.ndarray, eps=None) -> np.ndarray:
    """Symmetrise and clamp eigenvalues below at ``eps``.

    ``eps=None`` uses ``1e-8 * trace / d`` per matrix (trace of the positive part). Matrices whose
    symmetric part already has all eigenvalues >= eps are returned as that
    symmetric part untouched, which makes the map idempotent.
    """
    A = np.asarray(values, dtype=float)
    S = 0.5 * (A + np.swapaxes(A, -1, -2))
    d = S.shape[-1]
    w, V = np.linalg.eigh(S)
    if eps is None:
        # trace of the positive part, so the floor is stable under re-conditioning
        floor = 1e-8 * np.maximum(w, 0.0).sum(axis=-1) / d
        floor = np.where(floor > 0, floor, 1e-300)
    else:
        floor = np.broadcast_to(np.asarray(eps, dtype=float), S.shape[:-2])
    # slack keeps already-clamped matrices fixed under a second pass
    bad = w.min(axis=-1) < floor * (1 - 1e-8)
    if np.any(bad):
        wc = np.maximum(w[bad], floor[bad][..., None])
        Vb = V[bad]
        S = S.copy()
        R = np.einsum("...ij,...j,...kj->...ik", Vb, wc, Vb)
        S[bad] = 0.5 * (R + np.swapaxes(R, -1, -2))
    return S


def condition_spot(path: SpotPath, eps=None) -> SpotPath:
    """Project every matrix of the path onto the symmetric PSD cone (floored at ``eps``)."""
    return replace(path, values=condition_matrices(path.values, eps), conditioned=True)
