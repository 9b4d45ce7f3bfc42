"""Ground-truth latent paths, exogenous observation schemes and true
functional values for Monte Carlo validation.

Time is in model units; the defaults take one trading day of 23400 one-second
steps with annualised volatility parameters, i.e. ``T = 1/252``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, SamplingError
from .functionals import FunctionalSpec
from .spectrum import TickSeries
from .spot import SpotPath
from .trigkernels import ObservationGrid

DAY = 1.0 / 252.0
SECONDS_PER_DAY = 23400


@dataclass(frozen=True)
class LatentPath:
    """Log-prices ``X`` with shape ``(n_steps+1, d)`` and spot covariances ``c``
    with shape ``(n_steps+1, d, d)`` on the fine mesh ``t_i = i dt``."""

    dt: float
    X: np.ndarray
    c: np.ndarray
    seed: Optional[int]

    @property
    def n_steps(self) -> int:
        return self.X.shape[0] - 1

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def d(self) -> int:
        return self.X.shape[1]


def streams(seed):
    """Independent generators for the path and for the observation times."""
    path_ss, sample_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(path_ss), np.random.default_rng(sample_ss)


def replication_seed(base_seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([base_seed, rep]).generate_state(1)[0])


def _mesh(T, dt, n_steps):
    if not T > 0:
        raise ConfigurationError(f"T must be positive, got {T}")
    if dt is None:
        dt = T / n_steps
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise ConfigurationError(f"T={T} is not a whole number of steps dt={dt}")
    return T / n, n


def _price_loadings(d, price_corr):
    if price_corr is None:
        R = np.eye(d)
    else:
        R = np.asarray(price_corr, dtype=float)
        if np.isscalar(price_corr) or R.ndim == 0:
            R = np.full((d, d), float(price_corr))
            np.fill_diagonal(R, 1.0)
    if R.shape != (d, d):
        raise ConfigurationError(f"price correlation must be {d}x{d}")
    try:
        return np.linalg.cholesky(R), R
    except np.linalg.LinAlgError:
        raise ConfigurationError("price correlation matrix is not positive definite") from None


def _assemble(X0, vol, R, dW, drift, dt):
    """Integrate ``dX_j = drift dt + sqrt(c_j) dW_j`` (left-point) and form ``c_jk = R_jk sqrt(c_j c_k)``."""
    sd = np.sqrt(np.maximum(vol, 0.0))
    dX = drift * dt + sd[:-1] * dW
    X = np.vstack([X0, X0 + np.cumsum(dX, axis=0)])
    c = R[None] * sd[:, :, None] * sd[:, None, :]
    return X, c


def simulate_heston_bridge(mean_rev: float = 6.0, long_run: float = 0.16, volvol: float = 0.5,
                           drift: float = 0.03, corr: float = -0.6, T: float = DAY,
                           dt: Optional[float] = None, seed: Optional[int] = None, d: int = 1,
                           price_corr=None, c0: Optional[float] = None,
                           n_steps: int = SECONDS_PER_DAY) -> LatentPath:
    """Price driven by a CIR variance with a linear bridge correction.

    ``c~`` follows full-truncation Euler for
    ``dc~ = mean_rev (long_run - c~) dt + volvol sqrt(c~) dB``, ``corr(dW_j, dB_j) = corr``;
    the spot variance is ``c(t) = c~(t) - (c~(T) - c~(0)) t/T`` so that ``c(0) = c(T)``.
    With ``d > 1`` each asset has its own CIR factor and the price shocks are
    correlated through ``price_corr`` (scalar or matrix).
    """
    dt, n = _mesh(T, dt, n_steps)
    if not -1.0 <= corr <= 1.0:
        raise ConfigurationError(f"corr must lie in [-1, 1], got {corr}")
    rng, _ = streams(seed)
    Lp, R = _price_loadings(d, price_corr)
    sq = np.sqrt(dt)
    Zw = rng.standard_normal((n, d))
    Zb = rng.standard_normal((n, d))
    dW = (Zw @ Lp.T) * sq
    dB = corr * dW + np.sqrt(1.0 - corr**2) * Zb * sq
    ct = np.empty((n + 1, d))
    ct[0] = long_run if c0 is None else c0
    for i in range(n):
        pos = np.maximum(ct[i], 0.0)
        ct[i + 1] = ct[i] + mean_rev * (long_run - pos) * dt + volvol * np.sqrt(pos) * dB[i]
    frac = np.arange(n + 1)[:, None] / n
    vol = ct - (ct[-1] - ct[0])[None, :] * frac
    vol[-1] = vol[0]
    vol = np.maximum(vol, 0.0)
    X, c = _assemble(np.zeros(d), vol, R, dW, drift, dt)
    return LatentPath(dt=dt, X=X, c=c, seed=seed)


def simulate_constant_vol(cov, T: float = DAY, dt: Optional[float] = None,
                          seed: Optional[int] = None, drift: float = 0.0,
                          n_steps: int = SECONDS_PER_DAY) -> LatentPath:
    """Correlated Brownian log-prices with a constant covariance matrix."""
    dt, n = _mesh(T, dt, n_steps)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = cov.shape[0]
    rng, _ = streams(seed)
    if not np.allclose(cov, cov.T):
        raise ConfigurationError("cov must be symmetric")
    w, V = np.linalg.eigh(cov)
    if w.min() < -1e-12 * max(w.max(), 1.0):
        raise ConfigurationError(f"cov is not positive semidefinite (min eigenvalue {w.min():.3g})")
    # eigen factor so singular (perfectly correlated) covariances are allowed
    L = V * np.sqrt(np.maximum(w, 0.0))
    dX = drift * dt + (rng.standard_normal((n, d)) @ L.T) * np.sqrt(dt)
    X = np.vstack([np.zeros(d), np.cumsum(dX, axis=0)])
    c = np.broadcast_to(cov, (n + 1, d, d)).copy()
    return LatentPath(dt=dt, X=X, c=c, seed=seed)


def _fgn_circulant(n, H, rng):
    """Unit-spacing fractional Gaussian noise by circulant embedding, or
    ``None`` if the embedding has a negative eigenvalue."""
    k = np.arange(n + 1, dtype=float)
    gamma = 0.5 * ((k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        return None
    m = row.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    w = np.fft.fft(np.sqrt(np.maximum(lam, 0.0) / m) * z)
    return w[:n].real


def _fgn_cholesky(n, H, rng):
    k = np.arange(n, dtype=float)
    gamma = 0.5 * ((k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))
    idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return np.linalg.cholesky(gamma[idx]) @ rng.standard_normal(n)


def fbm(n: int, H: float, rng, horizon: float = 1.0) -> np.ndarray:
    """Fractional Brownian motion at ``i horizon / n``, ``i = 0..n`` (starts at 0)."""
    if not 0.0 < H < 1.0:
        raise ConfigurationError(f"Hurst parameter must lie in (0, 1), got {H}")
    noise = _fgn_circulant(n, H, rng)
    if noise is None:
        noise = _fgn_cholesky(n, H, rng)
    return np.concatenate([[0.0], np.cumsum(noise)]) * (horizon / n) ** H


def simulate_fbm_vol(H: float = 0.56, T: float = DAY, dt: Optional[float] = None,
                     seed: Optional[int] = None, level: float = 0.16, scale: float = 0.5,
                     drift: float = 0.0, n_steps: int = SECONDS_PER_DAY) -> LatentPath:
    """Univariate price with ``c(t) = exp(a + b B_H(t/T))``, ``a = log(level)``, ``b = scale``.

    ``B_H`` runs on normalised time ``[0, 1]`` so the roughness of ``c`` is the
    same for any window length.
    """
    if not 0.0 < H < 1.0:
        raise ConfigurationError(f"Hurst parameter must lie in (0, 1), got {H}")
    dt, n = _mesh(T, dt, n_steps)
    rng, _ = streams(seed)
    bh = fbm(n, H, rng)
    vol = np.exp(np.log(level) + scale * bh)[:, None]
    dW = rng.standard_normal((n, 1)) * np.sqrt(dt)
    X, c = _assemble(np.zeros(1), vol, np.eye(1), dW, drift, dt)
    return LatentPath(dt=dt, X=X, c=c, seed=seed)


@dataclass(frozen=True)
class SamplingScheme:
    """Observation scheme on the fine mesh. ``mesh`` and ``offset`` count
    fine steps; ``keep_prob`` applies to ``poisson-thinning``, whose grids are
    redrawn until ``max spacing / min spacing <= max_ratio``."""

    kind: str = "regular"
    mesh: int = 1
    offset: int = 0
    keep_prob: float = 0.5
    max_ratio: float = 50.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("regular", "poisson-thinning", "offset-regular"):
            raise ConfigurationError(f"unknown sampling kind {self.kind!r}")
        if self.mesh < 1 or self.offset < 0:
            raise ConfigurationError("mesh must be >= 1 and offset >= 0 fine steps")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ConfigurationError(f"keep_prob must lie in (0, 1], got {self.keep_prob}")


def grid_indices(scheme: SamplingScheme, n_steps: int, rng) -> np.ndarray:
    if scheme.kind == "regular":
        return np.arange(0, n_steps + 1, scheme.mesh)
    if scheme.kind == "offset-regular":
        return np.arange(scheme.offset, n_steps + 1, scheme.mesh)
    for _ in range(1000):
        idx = np.flatnonzero(rng.random(n_steps + 1) < scheme.keep_prob)
        if idx.size >= 2:
            gaps = np.diff(idx)
            if gaps.max() / gaps.min() <= scheme.max_ratio:
                return idx
    raise SamplingError("could not draw a grid satisfying the spacing-ratio cap")


def sample_asynchronous(path: LatentPath, schemes: Sequence[SamplingScheme]):
    """Read each asset's log-price at its own exogenous grid (snapped to the fine mesh)."""
    schemes = list(schemes)
    if len(schemes) == 1 and path.d > 1:
        schemes = schemes * path.d
    if len(schemes) != path.d:
        raise ConfigurationError(f"need {path.d} sampling schemes, got {len(schemes)}")
    _, default_rng = streams(path.seed)
    out = []
    for j, sch in enumerate(schemes):
        rng = default_rng if sch.seed is None else np.random.default_rng(sch.seed)
        idx = grid_indices(sch, path.n_steps, rng)
        if idx.size < 2:
            raise SamplingError(f"asset {j}: sampling produced fewer than two observations")
        grid = ObservationGrid(idx * path.dt, path.T)
        out.append(TickSeries(str(j + 1), grid, path.X[idx, j]))
    return out


def true_functional(path: LatentPath, g: FunctionalSpec) -> float:
    """Left Riemann sum of ``g(c(t))`` over the fine mesh."""
    try:
        vals = g.value(path.c[:-1])
    except DomainError as exc:
        raise DomainError(f"true functional {g.id}: {exc}", exc.min_eigenvalue) from exc
    return float(np.sum(vals) * path.dt)


def true_spot_path(path: LatentPath, B: int) -> SpotPath:
    """True ``c`` read at ``t_h = hT/B`` (nearest fine-mesh point), as a SpotPath."""
    idx = np.rint(np.arange(B) * path.n_steps / B).astype(int)
    return SpotPath(T=path.T, B=B, values=path.c[idx].copy())
