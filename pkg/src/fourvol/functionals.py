"""Smooth functionals of covariance matrices and the plug-in Riemann sum.

Every functional acts on the symmetric part of its argument, so gradients
are symmetric matrices: ``grad[j, k]`` is the derivative with respect to
entry ``(j, k)`` with all other entries held fixed. All evaluators accept
stacks of matrices with shape ``(..., d, d)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, EstimationError, TuningError
from .spot import SpotPath, spot_at
from .spectrum import SpectrumEstimate
from .trigkernels import ObservationGrid


def _sym(C):
    C = np.asarray(C, dtype=float)
    return 0.5 * (C + np.swapaxes(C, -1, -2))


def _eig(C):
    return np.linalg.eigh(_sym(C))


def _require_positive(w, name):
    wmin = w.min(axis=-1)
    if np.any(wmin <= 0):
        idx = np.argwhere(np.atleast_1d(wmin) <= 0)[0]
        m = float(np.atleast_1d(wmin)[tuple(idx)])
        err = DomainError(f"{name} needs a positive definite matrix; min eigenvalue {m:.3g}",
                          min_eigenvalue=m)
        err.index = tuple(int(i) for i in idx)
        raise err


def _spectral(f, fprime, name, positive=True):
    """``tr f(C)`` and its gradient ``V f'(w) V^T``."""

    def value(C):
        w, _ = _eig(C)
        if positive:
            _require_positive(w, name)
        return f(w).sum(axis=-1)

    def grad(C):
        w, V = _eig(C)
        if positive:
            _require_positive(w, name)
        return np.einsum("...ij,...j,...kj->...ik", V, fprime(w), V)

    return value, grad


@dataclass(frozen=True)
class FunctionalSpec:
    """A functional ``g`` with value and gradient evaluators.

    ``id`` is the CLI string form, e.g. ``"power:2"`` or ``"entry:1,2"``
    (indices are 1-based there and 0-based in ``params``).
    """

    id: str
    value: Callable
    grad: Callable
    params: tuple = ()
    linear: bool = False
    max_index: int = -1

    def __call__(self, C):
        return self.value(C)

    def check_dimension(self, d: int):
        """Raise if the functional addresses entries beyond a ``d x d`` matrix."""
        if self.max_index >= d:
            raise ConfigurationError(f"functional {self.id} needs dimension >= {self.max_index + 1}, "
                                     f"data has d={d}")


def power(p: float) -> FunctionalSpec:
    """``tr(C^p)``; reduces to ``c^p`` in one dimension."""
    integer = float(p).is_integer()
    if integer:
        p = int(p)

    def f(w):
        return w**p

    def fp(w):
        return p * w ** (p - 1) if p != 0 else np.zeros_like(w)

    positive = not (integer and p >= 0)
    value, grad = _spectral(f, fp, f"power({p})", positive=positive)
    return FunctionalSpec(f"power:{p}", value, grad, (p,), linear=(p == 1))


def inverse() -> FunctionalSpec:
    """``tr(C^-1)``."""
    value, grad = _spectral(lambda w: 1.0 / w, lambda w: -1.0 / w**2, "inverse")
    return FunctionalSpec("inverse", value, grad)


def log() -> FunctionalSpec:
    """``log det C``."""
    value, grad = _spectral(np.log, lambda w: 1.0 / w, "log")
    return FunctionalSpec("log", value, grad)


def trace() -> FunctionalSpec:
    def value(C):
        return np.trace(np.asarray(C, float), axis1=-2, axis2=-1)

    def grad(C):
        C = np.asarray(C, float)
        return np.broadcast_to(np.eye(C.shape[-1]), C.shape).copy()

    return FunctionalSpec("trace", value, grad, linear=True)


def entry(j: int, k: int) -> FunctionalSpec:
    """Entry ``(j, k)`` (0-based) of the symmetrised matrix."""

    def value(C):
        C = np.asarray(C, float)
        return 0.5 * (C[..., j, k] + C[..., k, j])

    def grad(C):
        C = np.asarray(C, float)
        G = np.zeros(C.shape)
        G[..., j, k] += 0.5
        G[..., k, j] += 0.5
        return G

    return FunctionalSpec(f"entry:{j + 1},{k + 1}", value, grad, (j, k), linear=True,
                          max_index=max(j, k))


def eigenvalue(r: int) -> FunctionalSpec:
    """``r``-th largest eigenvalue (0-based ``r``); gradient assumes it is simple."""

    def value(C):
        w, _ = _eig(C)
        return w[..., -1 - r]

    def grad(C):
        w, V = _eig(C)
        v = V[..., :, -1 - r]
        return v[..., :, None] * v[..., None, :]

    return FunctionalSpec(f"eig:{r + 1}", value, grad, (r,), max_index=r)


def beta(j: int, k: int) -> FunctionalSpec:
    """Spot regression coefficient ``c_jk / c_kk`` (0-based indices)."""

    def _den(C):
        den = C[..., k, k]
        if np.any(den <= 0):
            m = float(np.min(den))
            raise DomainError(f"beta needs c_kk > 0; got {m:.3g}", min_eigenvalue=m)
        return den

    def value(C):
        C = _sym(C)
        return C[..., j, k] / _den(C)

    def grad(C):
        C = _sym(C)
        den = _den(C)
        G = np.zeros(C.shape)
        if j == k:
            return G
        G[..., j, k] += 0.5 / den
        G[..., k, j] += 0.5 / den
        G[..., k, k] += -C[..., j, k] / den**2
        return G

    return FunctionalSpec(f"beta:{j + 1}|{k + 1}", value, grad, (j, k), max_index=max(j, k))


def _indices(parts, count):
    idx = [int(a) for a in parts]
    if len(idx) != count or min(idx) < 1:
        raise ValueError(f"expected {count} index(es) >= 1")
    return idx


def get_functional(text: str) -> FunctionalSpec:
    """Parse a CLI functional id such as ``power:2``, ``entry:1,2``, ``eig:1``,
    ``beta:1|2``, ``inverse``, ``log`` or ``trace``."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    try:
        if name == "power":
            return power(float(arg))
        if name in ("inverse", "inv"):
            return inverse()
        if name == "log":
            return log()
        if name == "trace":
            return trace()
        if name == "entry":
            j, k = _indices(arg.split(","), 2)
            return entry(j - 1, k - 1)
        if name in ("eig", "eigenvalue"):
            (r,) = _indices([arg], 1)
            return eigenvalue(r - 1)
        if name == "beta":
            j, k = _indices(arg.split("|"), 2)
            return beta(j - 1, k - 1)
    except ValueError as exc:
        raise ConfigurationError(f"bad functional parameters in {text!r}: {exc}") from None
    raise ConfigurationError(f"unknown functional {text!r}")


def eval_functional(g: FunctionalSpec, c) -> float:
    """Value of ``g`` at one matrix (scalars are treated as 1x1)."""
    C = np.atleast_2d(np.asarray(c, dtype=float))
    return float(g.value(C))


@dataclass
class TuningParams:
    """Tuning of the functional estimator: spectrum width ``N``, Fejer order
    ``M``, plug-in count ``B``, boundary trim ``L`` and the ``kappa`` of the
    ``N = kappa n^(4/5)`` rule."""

    N: int
    M: int
    B: int
    L: int = 0
    kappa: Optional[float] = None

    def validate(self, sizes=None, periodic: bool = True, alpha: Optional[float] = None):
        """Raise on hard violations; return a list of advisory messages."""
        if self.N < 1:
            raise TuningError(f"N must be >= 1, got {self.N}")
        if self.M < 2:
            raise TuningError(f"M must be >= 2, got {self.M}")
        if self.B < 2 * self.M - 1:
            raise TuningError(f"B={self.B} must be >= 2M-1={2 * self.M - 1}")
        if self.L < 0 or 2 * self.L >= self.B:
            raise TuningError(f"L={self.L} must satisfy 0 <= L < B/2")
        notes = []
        if sizes is not None:
            n_min = min(sizes)
            cap = n_min // 2 - self.M + 1
            if self.N > cap:
                raise TuningError(
                    f"N={self.N} exceeds floor(n_min/2) - M + 1 = {cap} (n_min={n_min}); "
                    f"lower N or M")
        if alpha is not None and not self.M > self.N ** (1.0 / (1.0 + 2.0 * alpha)):
            notes.append(f"M={self.M} is not above N^(1/(1+2 alpha))="
                         f"{self.N ** (1 / (1 + 2 * alpha)):.1f}; smoothing bias may dominate")
        if not self.M < math.sqrt(self.N):
            notes.append(f"M={self.M} is not below sqrt(N)={math.sqrt(self.N):.1f}; "
                         f"plug-in bias may dominate")
        if periodic and self.L != 0:
            notes.append("L > 0 although the path is flagged periodic")
        if not periodic:
            target = self.B / self.M
            if self.L == 0 or not 0.25 * target <= self.L <= 4 * target:
                notes.append(f"non-periodic path: L={self.L} should be of order B/M={target:.1f}")
        for msg in notes:
            warnings.warn(msg, stacklevel=2)
        return notes


def default_L(B: int, M: int, periodic: bool) -> int:
    return 0 if periodic else math.ceil(B / M)


def plug_in_values(path: SpotPath, g: FunctionalSpec, L: int = 0):
    """``g`` at ``t_h``, ``h = 1+L..B-L``, together with those indices."""
    if L < 0 or 2 * L >= path.B:
        raise TuningError(f"L={L} must satisfy 0 <= L < B/2")
    h = np.arange(1 + L, path.B - L + 1)
    C = path.at_index(h)
    try:
        vals = g.value(C)
    except DomainError as exc:
        i = getattr(exc, "index", (0,))[0]
        t = float(h[i] * path.T / path.B)
        raise EstimationError(f"{g.id} undefined at t={t:.6g}: {exc}", time=t) from exc
    return np.asarray(vals, dtype=float), h


def plug_in_estimate(path: SpotPath, g: FunctionalSpec, tuning: Optional[TuningParams] = None,
                     L: Optional[int] = None) -> float:
    """Trimmed Riemann sum ``sum_{h=1+L}^{B-L} g(c(hT/B)) T/B``."""
    if L is None:
        L = tuning.L if tuning is not None else 0
    vals, _ = plug_in_values(path, g, L)
    return float(vals.sum() * path.T / path.B)


def plug_in_range(path: SpotPath, L: int):
    """Time span ``[(1+L)T/B, (B-L)T/B]`` covered by the trimmed sum."""
    return ((1 + L) * path.T / path.B, (path.B - L) * path.T / path.B)


def univariate_plug_in(spec: SpectrumEstimate, M: int, grid: ObservationGrid, g: FunctionalSpec,
                       j: int = 0, L: int = 0) -> float:
    """Riemann sum of ``g(c_jj)`` over the native observation times of asset ``j``,
    ``sum_{h=1+L}^{n_j-L} g(c_jj(tau_h)) (tau_h - tau_{h-1})``."""
    n = grid.n
    if L < 0 or 2 * L >= n:
        raise TuningError(f"L={L} must satisfy 0 <= L < n/2")
    h = np.arange(1 + L, n - L + 1)
    tau = grid.times[h]
    c = spot_at(spec, M, tau)[:, j, j].reshape(-1, 1, 1)
    try:
        vals = g.value(c)
    except DomainError as exc:
        i = getattr(exc, "index", (0,))[0]
        raise EstimationError(f"{g.id} undefined at t={tau[i]:.6g}: {exc}",
                              time=float(tau[i])) from exc
    return float(np.sum(vals * (grid.times[h] - grid.times[h - 1])))
