"""Dirichlet and Fejer kernels, observation-time step functions and the
temporal-spacing statistics built from them.

All kernels are 1-periodic in their argument. Arguments are reduced to
``[-1/2, 1/2)`` before evaluating the closed forms so that the removable
singularity at integers is handled with full relative accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DataError

# |sin(pi x)| below this switches to the limit value at integer x
_INTEGER_GUARD = 1e-8


def _reduce(x):
    x = np.asarray(x, dtype=float)
    return x - np.round(x)


def dirichlet_kernel(q, x):
    """Dirichlet kernel ``D^q(x) = sum_{|s|<=q} exp(i 2 pi s x)``.

    Evaluated through the closed form ``sin(pi(2q+1)x) / sin(pi x)``, with
    value ``2q+1`` at integers. Vectorised over ``x``.
    """
    if q < 0:
        raise ConfigurationError(f"Dirichlet order must be non-negative, got {q}")
    r = _reduce(x)
    den = np.sin(np.pi * r)
    near = np.abs(den) < _INTEGER_GUARD
    safe = np.where(near, 1.0, den)
    out = np.where(near, 2.0 * q + 1.0, np.sin(np.pi * (2 * q + 1) * r) / safe)
    return out if out.ndim else float(out)


def fejer_kernel(M, x):
    """Fejer kernel of order ``M``: ``sin(pi M x)^2 / (M sin(pi x)^2)``, ``M`` at integers."""
    if M < 1:
        raise ConfigurationError(f"Fejer order must be >= 1, got {M}")
    r = _reduce(x)
    den = np.sin(np.pi * r)
    near = np.abs(den) < _INTEGER_GUARD
    safe = np.where(near, 1.0, den)
    out = np.where(near, float(M), np.sin(np.pi * M * r) ** 2 / (M * safe**2))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ObservationGrid:
    """Strictly increasing observation times of one asset on ``[0, T]``."""

    times: np.ndarray
    T: float
    _tol: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise DataError("observation grid must be a non-empty 1-d array")
        if not self.T > 0:
            raise ConfigurationError(f"window length T must be positive, got {self.T}")
        if times[0] < 0 or times[-1] > self.T * (1 + 1e-12):
            raise DataError(f"observation times must lie in [0, {self.T}]")
        gaps = np.diff(times)
        if np.any(gaps <= 0):
            h = int(np.argmax(gaps <= 0)) + 1
            raise DataError(f"observation times not strictly increasing at index {h}")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        # snapping tolerance for theta_bar; far below any spacing
        spacing = gaps.min() if gaps.size else self.T
        object.__setattr__(self, "_tol", 1e-6 * spacing)

    @property
    def n(self) -> int:
        """Number of increments."""
        return self.times.size - 1

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.times)

    def theta_bar(self, t):
        """Smallest observation time ``>= t``, capped at the last time.

        Times within a tiny tolerance of an observation snap onto it, so
        lattice points computed in floating point land on the right step.
        """
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t - self._tol, side="left")
        out = self.times[np.minimum(idx, self.times.size - 1)]
        return out if out.ndim else float(out)


def _check_same_window(*grids):
    T = grids[0].T
    for g in grids[1:]:
        if not np.isclose(g.T, T, rtol=1e-12, atol=0.0):
            raise ConfigurationError(f"grids have mismatched window lengths {T} and {g.T}")
    return T


def scaled_dirichlet(gridJ: ObservationGrid, gridK: ObservationGrid, N: int, t, u):
    """Shifted and scaled Dirichlet kernel
    ``D^N((theta_j(t) - theta_k(u)) / T) / (2N+1)``, bounded in ``[-1, 1]``."""
    T = _check_same_window(gridJ, gridK)
    x = (gridJ.theta_bar(t) - gridK.theta_bar(u)) / T
    return dirichlet_kernel(N, x) / (2 * N + 1)


@dataclass(frozen=True)
class ThetaIntegrals:
    """Cumulative double integrals ``N int_0^t int_0^u d.d dv du`` for the four
    orderings of the kernel arguments (``tilde``: (u,v)(u,v), ``acute``:
    (u,v)(v,u), ``check``: (v,u)(u,v), ``grave``: (v,u)(v,u))."""

    t_grid: np.ndarray
    tilde: np.ndarray
    acute: np.ndarray
    check: np.ndarray
    grave: np.ndarray
    N: int


def _breakpoints(T, grids, extra):
    pts = [np.array([0.0, T])] + [g.times for g in grids] + [np.asarray(extra, float)]
    p = np.unique(np.clip(np.concatenate(pts), 0.0, T))
    # merge points closer than floating noise
    keep = np.concatenate([[True], np.diff(p) > 1e-12 * T])
    return p[keep]


def theta_integrals(gridJ, gridK, gridL, gridM, N: int, quad_step: float, B: int = 64,
                    chunk: int = 256) -> ThetaIntegrals:
    """Evaluate the four theta-integrals at ``t_h = hT/B``, ``h = 0..B``.

    The integrands are step functions of ``(u, v)`` whose breakpoints are the
    union of the four observation grids. Integration runs over the merged
    lattice of those breakpoints, the evaluation times and a uniform mesh of
    width ``quad_step``; on every lattice cell the integrand is constant, so
    the midpoint rule is exact (diagonal cells contribute half their area).
    """
    if not quad_step > 0:
        raise ConfigurationError(f"quad_step must be positive, got {quad_step}")
    T = _check_same_window(gridJ, gridK, gridL, gridM)
    t_grid = np.arange(B + 1) * (T / B)
    mesh = np.arange(0.0, T, quad_step)
    p = _breakpoints(T, (gridJ, gridK, gridL, gridM), np.concatenate([t_grid, mesh]))
    w = np.diff(p)
    right = p[1:]
    th = {name: g.theta_bar(right) for name, g in
          zip("jklm", (gridJ, gridK, gridL, gridM))}

    def D(a, b):
        return dirichlet_kernel(N, (a[:, None] - b[None, :]) / T) / (2 * N + 1)

    ncell = w.size
    rows = {k: np.empty(ncell) for k in ("tilde", "acute", "check", "grave")}
    for lo in range(0, ncell, chunk):
        hi = min(lo + chunk, ncell)
        a = slice(lo, hi)
        # weight of cell pair (a, b): w_a w_b for b < a, w_a^2 / 2 for b == a
        W = w[a, None] * w[None, :]
        idx = np.arange(lo, hi)[:, None]
        col = np.arange(ncell)[None, :]
        W = np.where(col < idx, W, np.where(col == idx, 0.5 * W, 0.0))
        d_jk_uv = D(th["j"][a], th["k"])
        d_lm_uv = D(th["l"][a], th["m"])
        # (v, u) orderings: first argument on the inner variable
        d_jk_vu = _flip(th["j"], th["k"][a], N, T)
        d_lm_vu = _flip(th["l"], th["m"][a], N, T)
        rows["tilde"][a] = np.sum(W * d_jk_uv * d_lm_uv, axis=1)
        rows["acute"][a] = np.sum(W * d_jk_uv * d_lm_vu, axis=1)
        rows["check"][a] = np.sum(W * d_jk_vu * d_lm_uv, axis=1)
        rows["grave"][a] = np.sum(W * d_jk_vu * d_lm_vu, axis=1)

    # cumulative value at the cell whose right end is t_h
    pos = np.searchsorted(right, t_grid - 1e-12 * T, side="left")
    out = {}
    for key, r in rows.items():
        cum = np.concatenate([[0.0], np.cumsum(r)]) * N
        vals = cum[np.minimum(pos, ncell - 1) + 1]
        vals[t_grid <= 0] = 0.0
        out[key] = vals
    return ThetaIntegrals(t_grid=t_grid, N=N, **out)


def _flip(theta_first_inner, theta_second_outer, N, T):
    """``d(v, u)`` block: first argument ``theta(v)`` (columns), second ``theta(u)`` (rows)."""
    x = (theta_first_inner[None, :] - theta_second_outer[:, None]) / T
    return dirichlet_kernel(N, x) / (2 * N + 1)


def cubic_variation(gridJ: ObservationGrid, gridK: ObservationGrid, n_min: int, t):
    """Cubic variation of time ``n_min^2 int_0^t (theta_j(u) - theta_k(u))^2 du``.

    Exact: the integrand is constant between consecutive points of the merged
    grid, so the cumulative integral is piecewise linear with knots there.
    """
    T = _check_same_window(gridJ, gridK)
    p = _breakpoints(T, (gridJ, gridK), ())
    right = p[1:]
    diff2 = (gridJ.theta_bar(right) - gridK.theta_bar(right)) ** 2
    cum = np.concatenate([[0.0], np.cumsum(diff2 * np.diff(p))])
    t = np.clip(np.asarray(t, dtype=float), 0.0, T)
    out = float(n_min) ** 2 * np.interp(t, p, cum)
    return out if out.ndim else float(out)
