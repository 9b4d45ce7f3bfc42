"""Volatility spectrum from asynchronous ticks.

Each asset's increments are mapped to the frequency domain by an exact
nonuniform Fourier-Stieltjes sum; the Fourier coefficients of the spot
covariance are then estimated by a scaled (Bohr) convolution of two such
sequences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import ConfigurationError, DataError, TuningError
from .trigkernels import ObservationGrid

# lattice fast path: reject lattices larger than this many cells
_MAX_LATTICE = 1 << 24
# phase recurrence is re-seeded from an exact exponential every this many steps
_RESEED = 128


@dataclass(frozen=True)
class TickSeries:
    """Observed log-prices of one asset, aligned with its observation grid."""

    asset_id: str
    grid: ObservationGrid
    log_prices: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.log_prices, dtype=float)
        if x.shape != self.grid.times.shape:
            raise DataError(
                f"asset {self.asset_id}: {x.size} prices for {self.grid.times.size} times")
        if not np.all(np.isfinite(x)):
            raise DataError(f"asset {self.asset_id}: non-finite log-price")
        object.__setattr__(self, "log_prices", x)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.log_prices)


@dataclass(frozen=True)
class StieltjesTransform:
    """Fourier-Stieltjes transform of one asset's increments for ``|s| <= s_max``.

    ``values[s + s_max]`` holds frequency ``s``.
    """

    asset_id: str
    s_max: int
    values: np.ndarray

    def at(self, s):
        s = np.asarray(s)
        if np.any(np.abs(s) > self.s_max):
            raise TuningError(f"frequency outside computed range |s| <= {self.s_max}")
        return self.values[s + self.s_max]


def _lattice_indices(times, T):
    """Integer lattice positions of ``times`` if they sit on a uniform mesh
    of ``T / L`` with ``L = round(T / min_spacing)``; otherwise ``None``."""
    if times.size < 2:
        return None
    step = np.min(np.diff(times))
    L = int(round(T / step))
    if L < 1 or L > _MAX_LATTICE:
        return None
    k = times * (L / T)
    ki = np.round(k)
    if np.max(np.abs(k - ki)) > 1e-9:
        return None
    return ki.astype(np.int64), L


def _fs_lattice(incr, k, L, s_max):
    buf = np.zeros(L)
    np.add.at(buf, k % L, incr)
    spec = np.fft.fft(buf)
    s = np.arange(s_max + 1)
    return spec[s % L]


def _fs_direct(incr, times, T, s_max):
    """Nonnegative frequencies by phase recurrence, O(n s_max), O(1) trig per tick."""
    omega = -2j * np.pi * times / T
    step = np.exp(omega)
    out = np.empty(s_max + 1, dtype=complex)
    phase = incr.astype(complex)
    for s in range(s_max + 1):
        if s % _RESEED == 0:
            phase = incr * np.exp(omega * s)
        out[s] = phase.sum()
        phase = phase * step
    return out


def fourier_stieltjes(ticks: TickSeries, T: float, s_max: int, method: str = "auto") -> StieltjesTransform:
    """``sum_h delta_h exp(-i 2 pi s tau_h / T)`` for ``|s| <= s_max``.

    ``method`` is ``"auto"`` (fast transform when the timestamps are
    lattice-aligned, phase recurrence otherwise), ``"lattice"``, or
    ``"direct"``. All routes are exact; none grids or interpolates the data.
    """
    if not T > 0:
        raise ConfigurationError(f"T must be positive, got {T}")
    nyq = ticks.n // 2
    if s_max > nyq:
        raise TuningError(
            f"asset {ticks.asset_id}: s_max={s_max} exceeds Nyquist frequency {nyq}")
    if s_max < 0:
        raise TuningError("s_max must be non-negative")
    incr = ticks.increments
    tau = ticks.grid.times[1:]
    lat = None if method == "direct" else _lattice_indices(ticks.grid.times, T)
    if method == "lattice" and lat is None:
        raise ConfigurationError(f"asset {ticks.asset_id}: timestamps are not lattice-aligned")
    if lat is not None:
        k, L = lat
        pos = _fs_lattice(incr, k[1:], L, s_max)
    else:
        pos = _fs_direct(incr, tau, T, s_max)
    values = np.concatenate([np.conj(pos[:0:-1]), pos])
    return StieltjesTransform(ticks.asset_id, s_max, values)


def bohr_convolution(Fj: StieltjesTransform, Fk: StieltjesTransform, N: int, q_max: int) -> np.ndarray:
    """``(2N+1)^-1 sum_{|s|<=N} Fj[q-s] Fk[s]`` for ``q = -q_max..q_max``."""
    if N < 0 or q_max < 0:
        raise TuningError("N and q_max must be non-negative")
    if N > Fk.s_max:
        raise TuningError(f"N={N} exceeds available frequencies {Fk.s_max} of {Fk.asset_id}")
    if q_max + N > Fj.s_max:
        raise TuningError(
            f"q_max + N = {q_max + N} exceeds available frequencies {Fj.s_max} of {Fj.asset_id}")
    reach = q_max + N
    a = Fj.values[Fj.s_max - reach: Fj.s_max + reach + 1]
    b = Fk.values[Fk.s_max - N: Fk.s_max + N + 1]
    full = signal.convolve(a, b, mode="full")
    return full[2 * N: 2 * N + 2 * q_max + 1] / (2 * N + 1)


@dataclass(frozen=True)
class SpectrumEstimate:
    """Estimated Fourier coefficients of the spot covariance matrix.

    ``coeffs[q + q_max]`` is the complex ``d x d`` matrix at frequency ``q``.
    """

    T: float
    N: int
    q_max: int
    coeffs: np.ndarray
    sizes: tuple
    asset_ids: tuple

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]

    def at(self, q):
        q = np.asarray(q)
        if np.any(np.abs(q) > self.q_max):
            raise TuningError(f"frequency outside estimated range |q| <= {self.q_max}")
        return self.coeffs[q + self.q_max]


def _common_window(ticks):
    T = ticks[0].grid.T
    for tk in ticks[1:]:
        if not np.isclose(tk.grid.T, T, rtol=1e-12, atol=0.0):
            raise ConfigurationError(
                f"assets {ticks[0].asset_id} and {tk.asset_id} have different windows")
    return T


def spectrum_matrix(ticks, N: int, q_max=None, method: str = "auto") -> SpectrumEstimate:
    """Assemble the ``d x d`` spectrum estimate for ``|q| <= q_max``.

    ``q_max=None`` uses the largest available range ``min_j floor(n_j/2) - N``.
    """
    ticks = list(ticks)
    if not ticks:
        raise DataError("no tick series given")
    if N < 1:
        raise TuningError(f"N must be >= 1, got {N}")
    T = _common_window(ticks)
    nyq = [tk.n // 2 for tk in ticks]
    if q_max is None:
        q_max = min(nyq) - N
    bad = []
    for j, tj in enumerate(ticks):
        for k, tk in enumerate(ticks):
            if N > nyq[k] or q_max + N > nyq[j]:
                bad.append((tj.asset_id, tk.asset_id))
    if q_max < 0 or bad:
        raise TuningError(
            f"frequency range violated for N={N}, q_max={q_max}; offending pairs: {bad}")
    reach = q_max + N
    fs = [fourier_stieltjes(tk, T, reach, method=method) for tk in ticks]
    d = len(ticks)
    coeffs = np.empty((2 * q_max + 1, d, d), dtype=complex)
    for j in range(d):
        for k in range(d):
            coeffs[:, j, k] = bohr_convolution(fs[j], fs[k], N, q_max)
    return SpectrumEstimate(T=T, N=N, q_max=q_max, coeffs=coeffs,
                            sizes=tuple(tk.n for tk in ticks),
                            asset_ids=tuple(tk.asset_id for tk in ticks))
