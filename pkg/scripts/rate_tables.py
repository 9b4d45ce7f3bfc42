"""Empirical error tables for the spectrum and the spot estimator.

Constant volatility, synchronous regular sampling. The first table gives the
RMSE of the zero-frequency coefficient (divided by T) against N; the second
the interior mean squared error of the spot path against N for fixed M, and
the median sup error against n with the default N = n^0.75, M = n^0.3 rules.

    python3 scripts/rate_tables.py --reps 200
"""

import argparse
import math

import numpy as np

from fourvol.simulate import SamplingScheme, sample_asynchronous, simulate_constant_vol
from fourvol.spectrum import bohr_convolution, fourier_stieltjes, spectrum_matrix
from fourvol.spot import fejer_inversion


def slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--sigma2", type=float, default=0.16)
    args = p.parse_args()
    c, n = args.sigma2, 23400

    Ns = [16, 64, 256, 1024, 4096]
    sq = np.zeros(len(Ns))
    M, B = 8, 64
    mse = np.zeros(len(Ns))
    for r in range(args.reps):
        path = simulate_constant_vol([[c]], T=1.0, n_steps=n, seed=r)
        ts = sample_asynchronous(path, [SamplingScheme()])
        F = fourier_stieltjes(ts[0], 1.0, max(Ns))
        for i, N in enumerate(Ns):
            sq[i] += (bohr_convolution(F, F, N, 0)[0].real - c) ** 2
            spot = fejer_inversion(spectrum_matrix(ts, N, q_max=M - 1), M, B)
            mse[i] += np.mean((spot.values[B // 4:3 * B // 4, 0, 0] - c) ** 2)
    rmse = np.sqrt(sq / args.reps)
    mse /= args.reps
    print("spectrum: RMSE of F(c)_0 / T")
    for N, e in zip(Ns, rmse):
        print(f"  N={N:5d}  {e:.3e}  (x sqrt(N)/c = {e * math.sqrt(N) / c:.3f})")
    print(f"  log-log slope {slope(Ns, rmse):.3f}")
    print(f"spot: interior MSE, M={M}")
    for N, e in zip(Ns, mse):
        print(f"  N={N:5d}  {e:.3e}")
    print(f"  log-log slope {slope(Ns, mse):.3f}")

    print("spot: median sup error, N = n^0.75, M = n^0.3")
    for n_obs in (1170, 4680, 23400, 93600):
        errs = []
        for r in range(max(args.reps // 4, 10)):
            path = simulate_constant_vol([[c]], T=1.0, n_steps=n_obs, seed=10_000 + r)
            ts = sample_asynchronous(path, [SamplingScheme()])
            N, M = int(n_obs**0.75), int(n_obs**0.3)
            spot = fejer_inversion(spectrum_matrix(ts, N, q_max=M - 1), M)
            errs.append(np.abs(spot.values[:, 0, 0] - c).max())
        print(f"  n={n_obs:6d}  N={N:5d}  M={M:3d}  {np.median(errs):.3e}")


if __name__ == "__main__":
    main()
