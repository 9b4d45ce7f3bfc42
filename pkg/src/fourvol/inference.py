"""Asymptotic variance, asynchronicity bias, studentisation and intervals
for the plug-in functional estimator."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from statistics import NormalDist
from typing import Optional, Sequence

import numba
import numpy as np

from .errors import DataError, InferenceError
from .functionals import FunctionalSpec
from .spot import SpotPath
from .trigkernels import ObservationGrid, cubic_variation, scaled_dirichlet

DEFAULT_BUDGET = 1e8


@dataclass(frozen=True)
class KernelSums:
    """Inner time sums of products of scaled Dirichlet kernels, one
    ``d^2 x d^2`` block per plug-in time ``t_h = hT/B``, ``h = 1..B``.

    ``same[h, jk, lm]`` pairs the kernels with equal argument order,
    ``cross[h, jk, lm]`` pairs ``(t, v)`` with ``(v, t)``. Both already carry
    the ``N delta(n)`` factor (times the stride, if subsampled).
    """

    same: np.ndarray
    cross: np.ndarray
    delta: float
    stride: int
    N: int
    B: int
    T: float


@numba.njit(cache=True)
def _sums_kernel(sa, ca, s2a, c2a, sb, cb, s2b, c2b, counts, stride, twoN1, same, cross):
    B, d = sa.shape
    dd = d * d
    dtv = np.empty(dd)
    dvt = np.empty(dd)
    for h in range(B):
        last = counts[h]
        if last < 1:
            continue
        n_inner = (last - 1) // stride
        for k in range(n_inner + 1):
            if k < n_inner:
                v = (k + 1) * stride - 1
                w = float(stride)
            else:
                # cell containing t_h: average of its partial length over the cell
                v = last - 1
                w = 0.5
            for j in range(d):
                for kk in range(d):
                    # d_jk(t_h, v): theta_j(t_h) - theta_k(v)
                    den = sa[h, j] * cb[v, kk] - ca[h, j] * sb[v, kk]
                    if abs(den) < 1e-8:
                        dtv[j * d + kk] = 1.0
                    else:
                        num = s2a[h, j] * c2b[v, kk] - c2a[h, j] * s2b[v, kk]
                        dtv[j * d + kk] = num / (twoN1 * den)
                    # d_jk(v, t_h): theta_j(v) - theta_k(t_h)
                    den = sb[v, j] * ca[h, kk] - cb[v, j] * sa[h, kk]
                    if abs(den) < 1e-8:
                        dvt[j * d + kk] = 1.0
                    else:
                        num = s2b[v, j] * c2a[h, kk] - c2b[v, j] * s2a[h, kk]
                        dvt[j * d + kk] = num / (twoN1 * den)
            for p in range(dd):
                for q in range(dd):
                    same[h, p, q] += w * (dtv[p] * dtv[q] + dvt[p] * dvt[q])
                    cross[h, p, q] += w * (dtv[p] * dvt[q] + dvt[p] * dtv[q])


def inner_counts(t, delta):
    """``ceil(t / delta)`` with lattice points snapped: index of the
    ``delta``-cell ``((v-1) delta, v delta]`` containing each ``t``."""
    x = np.asarray(t, dtype=float) / delta
    r = np.rint(x)
    on = np.abs(x - r) <= 1e-9 * np.maximum(1.0, np.abs(x))
    return np.where(on, r, np.ceil(x)).astype(np.int64)


def min_spacing(grids: Sequence[ObservationGrid]) -> float:
    """``delta(n)``: smallest spacing over all assets."""
    gaps = [g.spacings.min() for g in grids if g.n >= 1]
    if not gaps:
        raise DataError("need at least one increment to compute delta(n)")
    delta = float(min(gaps))
    if not delta > 0:
        raise DataError("duplicate timestamps: delta(n) = 0")
    return delta


def kernel_sums(grids: Sequence[ObservationGrid], N: int, B: int,
                budget: float = DEFAULT_BUDGET) -> KernelSums:
    """Inner time sums over ``vartheta_v = v delta(n)`` for each ``t_h = hT/B``.

    The sum runs over the ``delta``-cells up to and including the one that
    contains ``t_h``; that last cell gets weight 1/2, its length averaged
    over positions of ``t_h`` inside it. When ``B * (T/delta) * d^2``
    exceeds ``budget`` the other cells are subsampled every ``stride``-th
    and weighted by ``stride``.
    """
    grids = list(grids)
    d = len(grids)
    T = grids[0].T
    delta = min_spacing(grids)
    t = np.arange(1, B + 1) * (T / B)
    counts = inner_counts(t, delta)
    vmax = int(counts.max())
    stride = max(1, math.ceil(B * vmax * d * d / budget))
    v = np.arange(1, vmax + 1) * delta

    a = np.stack([g.theta_bar(t) for g in grids], axis=1) / T
    b = np.stack([g.theta_bar(v) for g in grids], axis=1) / T
    twoN1 = 2 * N + 1
    same = np.zeros((B, d * d, d * d))
    cross = np.zeros((B, d * d, d * d))
    _sums_kernel(np.sin(np.pi * a), np.cos(np.pi * a),
                 np.sin(np.pi * twoN1 * a), np.cos(np.pi * twoN1 * a),
                 np.sin(np.pi * b), np.cos(np.pi * b),
                 np.sin(np.pi * twoN1 * b), np.cos(np.pi * twoN1 * b),
                 counts, stride, float(twoN1), same, cross)
    scale = N * delta
    return KernelSums(same * scale, cross * scale, delta, stride, N, B, T)


def avar_contributions(path: SpotPath, g: FunctionalSpec, sums: KernelSums) -> np.ndarray:
    """Per-``t_h`` summands of the variance estimator, ``h = 1..B``."""
    if sums.B != path.B:
        raise InferenceError(f"kernel sums built for B={sums.B}, path has B={path.B}")
    d = path.d
    C = path.at_index(np.arange(1, path.B + 1))
    G = np.asarray(g.grad(C), dtype=float)
    same = sums.same.reshape(path.B, d, d, d, d)
    cross = sums.cross.reshape(path.B, d, d, d, d)
    v0 = np.einsum("hjk,hlm,hjl,hkm,hjklm->h", G, G, C, C, same)
    v1 = np.einsum("hjk,hlm,hjm,hkl,hjklm->h", G, G, C, C, cross)
    return (v0 + v1) * (path.T / path.B)


def avar_estimate(path: SpotPath, g: FunctionalSpec, grids: Sequence[ObservationGrid], N: int,
                  B: Optional[int] = None, sums: Optional[KernelSums] = None,
                  budget: float = DEFAULT_BUDGET) -> float:
    """Estimate of the asymptotic variance at the ``N^(1/2)`` rate.

    ``path`` should be conditioned (symmetric PSD). Pass precomputed
    ``sums`` to reuse the kernel work across several functionals.
    """
    if path.N is not None and path.N != N:
        raise InferenceError(f"path was built with N={path.N}, got N={N}")
    if B is not None and B != path.B:
        raise InferenceError(f"B={B} does not match the spot path (B={path.B})")
    if sums is None:
        sums = kernel_sums(grids, N, path.B, budget=budget)
    return float(avar_contributions(path, g, sums).sum())


def async_bias_estimate(path: SpotPath, g: FunctionalSpec, grids: Sequence[ObservationGrid],
                        kappa: float, B: Optional[int] = None) -> float:
    """Second-order asynchronicity bias on the ``N^(1/2)`` scale, for
    ``N = kappa * n_min^(4/5)``. Zero for synchronous grids."""
    if not kappa > 0:
        raise InferenceError(f"kappa must be positive, got {kappa}")
    if B is not None and B != path.B:
        raise InferenceError(f"B={B} does not match the spot path (B={path.B})")
    grids = list(grids)
    d = len(grids)
    T = path.T
    n_min = min(gr.n for gr in grids)
    h = np.arange(0, path.B + 1)
    t = h * (T / path.B)
    C = path.at_index(h[1:])
    G = np.asarray(g.grad(C), dtype=float)
    total = 0.0
    for j in range(d):
        for k in range(d):
            if j == k:
                continue
            dP = np.diff(cubic_variation(grids[j], grids[k], n_min, t))
            total += float(np.sum(G[:, j, k] * C[:, j, k] * dP))
    return -2.0 * math.pi**2 * kappa**2.5 / (3.0 * T**2) * total


def studentize(s_hat: float, v_hat: float, rate_value: float, target: float) -> float:
    """``rate * (s_hat - target) / sqrt(v_hat)``."""
    if not v_hat > 0:
        raise InferenceError(f"non-positive variance estimate {v_hat:.6g}",
                             diagnostics={"v_hat_raw": v_hat})
    return rate_value * (s_hat - target) / math.sqrt(v_hat)


def confidence_interval(s_hat: float, v_hat: float, rate_value: float, alpha: float = 0.05,
                        mu_hat: float = 0.0):
    """Normal band ``s_hat - mu/rate -/+ z_{1-alpha/2} sqrt(v_hat)/rate``."""
    if not v_hat > 0:
        raise InferenceError(f"non-positive variance estimate {v_hat:.6g}",
                             diagnostics={"v_hat_raw": v_hat})
    z = NormalDist().inv_cdf(1.0 - alpha / 2.0)
    centre = s_hat - mu_hat / rate_value
    half = z * math.sqrt(v_hat) / rate_value
    return (centre - half, centre + half)


def shrinkage_target(path: SpotPath, grids: Sequence[ObservationGrid], N: int) -> SpotPath:
    """Entrywise product of ``c(t_h)`` with ``d_jk(t_h, t_h)``; ``path`` holds the true ``c``."""
    grids = list(grids)
    d = len(grids)
    t = path.t_grid
    factor = np.empty((path.B, d, d))
    for j in range(d):
        for k in range(d):
            factor[:, j, k] = 1.0 if j == k else scaled_dirichlet(grids[j], grids[k], N, t, t)
    return replace(path, values=path.values * factor, N=N)


def is_synchronous(grids: Sequence[ObservationGrid]) -> bool:
    first = grids[0].times
    return all(g.times.shape == first.shape and np.array_equal(g.times, first) for g in grids[1:])


def rate_for(mode: str, N: int, grids: Sequence[ObservationGrid]):
    """Convergence normaliser for a regime: ``(name, value)``."""
    if mode == "general":
        return "sqrt(N)", math.sqrt(N)
    if mode == "synchronous-optimal":
        mesh = max(float(g.spacings.max()) for g in grids)
        return "Delta(n)^-1/2", 1.0 / math.sqrt(mesh)
    if mode == "biased-optimal-rate":
        n_min = min(g.n for g in grids)
        return "n_min^(2/5)", n_min ** 0.4
    raise InferenceError(f"unknown inference mode {mode!r}")


@dataclass
class EstimateReport:
    """Point estimate, variance and bias at the reported ``rate`` (so that
    ``rate * (s_hat - target)`` is roughly ``N(mu_hat, v_hat)``), interval
    and diagnostics."""

    functional: str
    s_hat: float
    v_hat: float
    rate_name: str
    rate: float
    ci: tuple
    alpha: float
    mu_hat: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ci"] = list(self.ci)
        return out


def build_report(g: FunctionalSpec, s_hat: float, v_hat_N: float, N: int, mode: str,
                 grids: Sequence[ObservationGrid], alpha: float = 0.05,
                 mu_hat_N: Optional[float] = None, diagnostics: Optional[dict] = None) -> EstimateReport:
    """Express an ``N^(1/2)``-scale variance/bias at the regime's rate and attach the interval.

    A non-positive raw variance is kept in diagnostics and the interval is
    left undefined (NaN) rather than clamped.
    """
    name, rate = rate_for(mode, N, grids)
    conv = rate**2 / N
    v_rate = v_hat_N * conv
    mu_rate = None if mu_hat_N is None else mu_hat_N * rate / math.sqrt(N)
    diag = dict(diagnostics or {})
    diag["v_hat_raw_sqrtN"] = v_hat_N
    diag["v_hat_psd"] = bool(v_hat_N > 0)
    if v_rate > 0:
        ci = confidence_interval(s_hat, v_rate, rate, alpha, mu_rate or 0.0)
    else:
        ci = (float("nan"), float("nan"))
    return EstimateReport(functional=g.id, s_hat=s_hat, v_hat=max(v_rate, 0.0), rate_name=name,
                          rate=rate, ci=ci, alpha=alpha, mu_hat=mu_rate, diagnostics=diag)
