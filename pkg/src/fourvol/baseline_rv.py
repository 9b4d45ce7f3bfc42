"""Local realized-variance spot estimator, used as a baseline against the
Fourier method.

Windows look forward: the value at ``tau_h`` averages the squared increments
``v = h+1..h+k_n`` and divides by the window length ``tau_{h+k_n} - tau_h``
(``k_n`` times the mean spacing in the window). No bias correction is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DataError, DomainError, EstimationError
from .functionals import FunctionalSpec
from .spectrum import TickSeries
from .spot import SpotPath


@dataclass(frozen=True)
class RVWindow:
    """Window length ``k_n`` (in observations) for a series with ``n`` increments."""

    k_n: int
    n: int

    def __post_init__(self):
        if self.k_n < 1 or 2 * self.k_n > self.n:
            raise ConfigurationError(f"k_n={self.k_n} must satisfy 1 <= k_n <= n/2 (n={self.n})")

    @classmethod
    def default(cls, n: int, exponent: float = 0.45) -> "RVWindow":
        """``k_n = floor(n^exponent)``, i.e. ``Delta_n^-exponent`` with ``Delta_n = 1/n``."""
        return cls(max(1, math.floor(n ** exponent)), n)


def _window(ticks: TickSeries, k_n) -> RVWindow:
    if isinstance(k_n, RVWindow):
        if k_n.n != ticks.n:
            raise ConfigurationError(f"window built for n={k_n.n}, series has n={ticks.n}")
        return k_n
    return RVWindow(int(k_n), ticks.n)


def rv_window_values(ticks: TickSeries, k_n) -> np.ndarray:
    """``c_RV(tau_h)`` for ``h = 0..n-k_n`` via prefix sums."""
    k = _window(ticks, k_n).k_n
    sq = np.concatenate([[0.0], np.cumsum(ticks.increments**2)])
    tau = ticks.grid.times
    return (sq[k:] - sq[:-k]) / (tau[k:] - tau[:-k])


def rv_spot(ticks: TickSeries, k_n, B: Optional[int] = None) -> SpotPath:
    """Piecewise-constant RV spot path read at ``t_h = hT/B`` (default ``B = n``).

    Between observations the value of the last window start at or before
    ``t`` is carried forward; starts past ``n - k_n`` reuse the last window.
    """
    vals = rv_window_values(ticks, k_n)
    grid = ticks.grid
    if B is None:
        B = grid.n
    if B < 1:
        raise ConfigurationError(f"B must be positive, got {B}")
    t = np.arange(B) * (grid.T / B)
    idx = np.searchsorted(grid.times, t + 1e-9 * grid.spacings.min(), side="right") - 1
    idx = np.clip(idx, 0, vals.size - 1)
    return SpotPath(T=grid.T, B=B, values=vals[idx].reshape(B, 1, 1), conditioned=True)


def rv_plug_in(ticks: TickSeries, g: FunctionalSpec, k_n) -> float:
    """``sum_{h=k_n}^{n-k_n} g(c_RV(tau_h)) (tau_h - tau_{h-1})``."""
    w = _window(ticks, k_n)
    vals = rv_window_values(ticks, w)
    h = np.arange(w.k_n, w.n - w.k_n + 1)
    if h.size == 0:
        raise DataError("empty trimmed range")
    c = vals[h].reshape(-1, 1, 1)
    try:
        gv = np.asarray(g.value(c), dtype=float)
    except DomainError as exc:
        i = getattr(exc, "index", (0,))[0]
        t = float(ticks.grid.times[h[i]])
        raise EstimationError(f"{g.id} undefined at t={t:.6g}: {exc}", time=t) from exc
    dt = ticks.grid.times[h] - ticks.grid.times[h - 1]
    return float(np.sum(gv * dt))
