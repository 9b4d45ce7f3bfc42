"""Naive direct-sum versions of the optimised estimators.

Slow by design: every exponential and kernel is evaluated from scratch with
no recurrences, transforms or caching. Used as oracles in the test suite.
"""

import numpy as np

from .trigkernels import scaled_dirichlet


def fourier_stieltjes_naive(times, log_prices, T, s_max):
    incr = np.diff(log_prices)
    tau = np.asarray(times)[1:]
    s = np.arange(-s_max, s_max + 1)
    return np.array([np.sum(incr * np.exp(-2j * np.pi * si * tau / T)) for si in s])


def bohr_convolution_naive(Fj, sj_max, Fk, sk_max, N, q_max):
    out = np.zeros(2 * q_max + 1, dtype=complex)
    for iq, q in enumerate(range(-q_max, q_max + 1)):
        acc = 0j
        for s in range(-N, N + 1):
            acc += Fj[q - s + sj_max] * Fk[s + sk_max]
        out[iq] = acc / (2 * N + 1)
    return out


def fejer_series_naive(coeffs, q_max, M, T, t):
    """``(1/T) sum_{|q|<M} (1-|q|/M) F_q exp(i 2 pi q t / T)`` at each ``t``."""
    t = np.atleast_1d(t)
    out = np.zeros((t.size,) + coeffs.shape[1:], dtype=complex)
    for q in range(-M + 1, M):
        w = 1.0 - abs(q) / M
        out += w * coeffs[q + q_max][None] * np.exp(2j * np.pi * q * t / T)[:, None, None]
    return out / T


def avar_naive(values_h, grad_h, grids, N, T, B):
    """Variance estimator with every kernel product recomputed per quadruple.

    ``values_h`` and ``grad_h`` hold the spot matrix and gradient at
    ``t_h = hT/B`` for ``h = 1..B``.
    """
    d = len(grids)
    delta = min(float(g.spacings.min()) for g in grids)
    total = 0.0
    for h in range(1, B + 1):
        t = h * T / B
        x = t / delta
        V = int(round(x)) if abs(x - round(x)) <= 1e-9 * max(1.0, x) else int(np.ceil(x))
        theta = np.arange(1, V + 1) * delta
        wts = np.ones(V)
        wts[-1] = 0.5
        C = values_h[h - 1]
        G = grad_h[h - 1]
        acc = 0.0
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    for m in range(d):
                        a = scaled_dirichlet(grids[j], grids[k], N, t, theta)
                        b = scaled_dirichlet(grids[l], grids[m], N, t, theta)
                        a2 = scaled_dirichlet(grids[j], grids[k], N, theta, t)
                        b2 = scaled_dirichlet(grids[l], grids[m], N, theta, t)
                        w = G[j, k] * G[l, m]
                        acc += w * C[j, l] * C[k, m] * np.sum(wts * (a * b + a2 * b2))
                        acc += w * C[j, m] * C[k, l] * np.sum(wts * (a * b2 + a2 * b))
        total += T / B * N * delta * acc
    return total
