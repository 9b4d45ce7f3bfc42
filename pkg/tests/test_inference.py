import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourvol.errors import InferenceError
from fourvol.functionals import get_functional, plug_in_estimate
from fourvol.inference import (
    async_bias_estimate,
    avar_estimate,
    build_report,
    confidence_interval,
    inner_counts,
    is_synchronous,
    kernel_sums,
    rate_for,
    shrinkage_target,
    studentize,
)
from fourvol.reference import avar_naive
from fourvol.spectrum import spectrum_matrix
from fourvol.spot import SpotPath, condition_spot, fejer_inversion
from fourvol.trigkernels import ObservationGrid, cubic_variation

from conftest import brownian_ticks, random_grid, regular_grid


def random_spd_path(rng, d, B, T=1.0):
    A = rng.standard_normal((B, d, d))
    vals = A @ np.swapaxes(A, 1, 2) + 0.2 * np.eye(d)
    return SpotPath(T=T, B=B, values=vals, conditioned=True)


def offset_grids(n, T=1.0, frac=0.5):
    D = T / n
    a = ObservationGrid(np.arange(n + 1) * D, T)
    b = ObservationGrid(np.concatenate([[0.0], frac * D + np.arange(n) * D, [T]])[:-1], T)
    return a, b


def test_inner_counts_snaps_lattice_points():
    np.testing.assert_array_equal(inner_counts(np.array([0.3, 0.5, 0.50000000001, 0.7]), 0.1),
                                  [3, 5, 5, 7])
    np.testing.assert_array_equal(inner_counts(np.array([0.25, 0.31]), 0.1), [3, 4])


@pytest.mark.parametrize("fid", ["trace", "power:2", "entry:1,2", "log"])
def test_avar_matches_naive(rng, fid):
    grids = [random_grid(rng, 40, lattice=200), random_grid(rng, 50, lattice=200)]
    B, N = 8, 7
    path = random_spd_path(rng, 2, B)
    g = get_functional(fid)
    C = path.at_index(np.arange(1, B + 1))
    ref = avar_naive(C, g.grad(C), grids, N, 1.0, B)
    assert avar_estimate(path, g, grids, N) == pytest.approx(ref, rel=1e-9)


def test_avar_naive_off_lattice(rng):
    grids = [random_grid(rng, 30), random_grid(rng, 30)]
    B, N = 6, 5
    path = random_spd_path(rng, 2, B)
    g = get_functional("power:2")
    C = path.at_index(np.arange(1, B + 1))
    ref = avar_naive(C, g.grad(C), grids, N, 1.0, B)
    assert avar_estimate(path, g, grids, N) == pytest.approx(ref, rel=1e-9)


def test_zero_gradient_gives_zero(rng):
    grids = [random_grid(rng, 40), random_grid(rng, 40)]
    path = random_spd_path(rng, 2, 8)
    # beta:2|2 is identically one
    assert avar_estimate(path, get_functional("beta:2|2"), grids, 5) == 0.0


def test_avar_non_negative_and_permutation_invariant(rng):
    grids = [random_grid(rng, 60, lattice=600), random_grid(rng, 45, lattice=600)]
    path = random_spd_path(rng, 2, 16)
    g = get_functional("log")
    v = avar_estimate(path, g, grids, 9)
    assert v > 0
    perm = SpotPath(T=1.0, B=16, values=path.values[:, ::-1, ::-1].copy(), conditioned=True)
    assert avar_estimate(perm, g, grids[::-1], 9) == pytest.approx(v, rel=1e-10)


def test_stride_subsampling_is_close(rng):
    grids = [regular_grid(2000)]
    full = kernel_sums(grids, 200, 16)
    sub = kernel_sums(grids, 200, 16, budget=4000)
    assert full.stride == 1 and sub.stride > 1
    np.testing.assert_allclose(sub.same.sum(), full.same.sum(), rtol=0.05)


def test_avar_guards(rng):
    grids = [random_grid(rng, 40)]
    path = random_spd_path(rng, 1, 8)
    with pytest.raises(InferenceError):
        avar_estimate(path, get_functional("trace"), grids, 5, B=16)
    sums = kernel_sums(grids, 5, 16)
    with pytest.raises(InferenceError):
        avar_estimate(path, get_functional("trace"), grids, 5, sums=sums)


def test_avar_constant_vol_identity():
    # g = c, synchronous constant c: N^(1/2)-scale variance ~ T int c^2 = T^2 c^2
    rng = np.random.default_rng(7)
    n, c, T = 23400, 0.16, 1.0
    ts = brownian_ticks(rng, regular_grid(n, T), sigma2=c)
    N, M = int(n**0.75), int(n**0.3)
    path = condition_spot(fejer_inversion(spectrum_matrix([ts], N, q_max=M - 1), M))
    v = avar_estimate(path, get_functional("trace"), [ts.grid], N)
    assert v / (T**2 * c**2) == pytest.approx(1.0, abs=0.1)


def test_avar_nyquist_matches_synchronous_limit():
    # at N = n/2 - M + 1, V/(N Delta) ~ 2 int c^2
    rng = np.random.default_rng(8)
    n, c = 4680, 0.16
    ts = brownian_ticks(rng, regular_grid(n), sigma2=c)
    M = int(n**0.3)
    N = n // 2 - M + 1
    path = condition_spot(fejer_inversion(spectrum_matrix([ts], N, q_max=M - 1), M))
    v = avar_estimate(path, get_functional("trace"), [ts.grid], N)
    assert v / (N / n) / (2 * c**2) == pytest.approx(1.0, rel=0.1)


def test_mu_zero_for_synchronous_and_univariate(rng):
    g = regular_grid(100)
    path = random_spd_path(rng, 2, 16)
    assert async_bias_estimate(path, get_functional("entry:1,2"), [g, g], 1.0) == 0.0
    path1 = random_spd_path(rng, 1, 16)
    assert async_bias_estimate(path1, get_functional("power:2"), [g], 1.0) == 0.0


def test_mu_kappa_scaling(rng):
    grids = list(offset_grids(100, frac=0.3))
    path = random_spd_path(rng, 2, 16)
    g = get_functional("power:2")
    a = async_bias_estimate(path, g, grids, 1.0)
    b = async_bias_estimate(path, g, grids, 2.0)
    assert a != 0
    assert b / a == pytest.approx(2**2.5, rel=1e-12)
    with pytest.raises(InferenceError):
        async_bias_estimate(path, g, grids, 0.0)


@pytest.mark.parametrize("frac", [0.5, 0.25])
def test_offset_cubic_variation_closed_form(frac):
    n, T = 200, 1.0
    D = T / n
    delta = frac * D
    a, b = offset_grids(n, T, frac)
    m = np.arange(2, n - 1)
    P = cubic_variation(a, b, n, m * D) - cubic_variation(a, b, n, D)
    np.testing.assert_allclose(P, n**2 * delta * (D - delta) * (m - 1) * D, rtol=1e-8)


def test_mu_offset_constant_closed_form():
    n, T, c12, kappa = 200, 1.0, 0.05, 1.3
    D = T / n
    a, b = offset_grids(n, T, 0.5)
    B = n
    vals = np.broadcast_to(np.array([[0.16, c12], [c12, 0.16]]), (B, 2, 2)).copy()
    path = SpotPath(T=T, B=B, values=vals)
    mu = async_bias_estimate(path, get_functional("entry:1,2"), [a, b], kappa)
    P = cubic_variation(a, b, n, T)
    expect = -2 * math.pi**2 * kappa**2.5 / (3 * T**2) * c12 * P
    assert mu == pytest.approx(expect, rel=1e-8)
    # away from the window edges P grows like n^2 delta^2 t
    inner = cubic_variation(a, b, n, T - D) - cubic_variation(a, b, n, D)
    assert inner == pytest.approx(n**2 * (D / 2) ** 2 * (T - 2 * D), rel=1e-8)


def test_studentize_and_interval_examples():
    assert studentize(1.1, 4.0, 10.0, 1.0) == pytest.approx(0.5)
    lo, hi = confidence_interval(1.0, 1.0, 1.0, alpha=0.32)
    assert (hi - lo) / 2 == pytest.approx(0.9945, abs=1e-4)
    lo, hi = confidence_interval(1.0, 4.0, 2.0, alpha=0.05, mu_hat=0.4)
    assert (lo + hi) / 2 == pytest.approx(0.8)
    assert (hi - lo) / 2 == pytest.approx(1.959964, abs=1e-6)
    for bad in (0.0, -1.0):
        with pytest.raises(InferenceError):
            studentize(1.0, bad, 1.0, 1.0)
        with pytest.raises(InferenceError):
            confidence_interval(1.0, bad, 1.0)


@given(s=st.floats(-10, 10), v=st.floats(1e-3, 10), rate=st.floats(0.1, 100),
       alpha=st.floats(0.01, 0.5))
def test_interval_contains_point_and_matches_studentized(s, v, rate, alpha):
    lo, hi = confidence_interval(s, v, rate, alpha)
    assert lo <= s <= hi
    z = studentize(s, v, rate, hi)
    assert z == pytest.approx(-(hi - lo) / 2 * rate / math.sqrt(v), rel=1e-9)


def test_shrinkage_target(rng):
    a, b = offset_grids(500, frac=0.5)
    path = random_spd_path(rng, 2, 32)
    N = 100
    S = shrinkage_target(path, [a, b], N)
    np.testing.assert_array_equal(S.values[:, 0, 0], path.values[:, 0, 0])
    np.testing.assert_array_equal(S.values[:, 1, 1], path.values[:, 1, 1])
    fac = S.values[:, 0, 1] / path.values[:, 0, 1]
    # both grids start at 0; elsewhere the lag is half a mesh
    assert fac[0] == pytest.approx(1.0)
    x = 0.5 / 500
    expect = math.sin(math.pi * (2 * N + 1) * x) / ((2 * N + 1) * math.sin(math.pi * x))
    np.testing.assert_allclose(fac[1:], expect, rtol=1e-10)
    np.testing.assert_allclose(S.values[:, 0, 1], S.values[:, 1, 0])
    same = shrinkage_target(path, [a, a], N)
    np.testing.assert_allclose(same.values, path.values, rtol=1e-12)


def test_rates_and_synchrony():
    g = regular_grid(100)
    a, b = offset_grids(100)
    assert is_synchronous([g, g]) and not is_synchronous([a, b])
    assert rate_for("general", 25, [g]) == ("sqrt(N)", 5.0)
    assert rate_for("synchronous-optimal", 25, [g])[1] == pytest.approx(10.0)
    assert rate_for("biased-optimal-rate", 25, [g])[1] == pytest.approx(100**0.4)
    with pytest.raises(InferenceError):
        rate_for("other", 25, [g])


def test_report_invariants():
    g = regular_grid(400)
    rep = build_report(get_functional("power:2"), 0.02, 0.01, 100, "synchronous-optimal", [g],
                       alpha=0.05, mu_hat_N=0.5)
    assert rep.rate == pytest.approx(20.0)
    assert rep.v_hat == pytest.approx(0.01 * 400 / 100)
    assert rep.mu_hat == pytest.approx(0.5 * 20 / 10)
    lo, hi = rep.ci
    assert lo < rep.s_hat - rep.mu_hat / rep.rate < hi
    assert rep.to_dict()["ci"] == [lo, hi]
    bad = build_report(get_functional("power:2"), 0.02, -0.01, 100, "general", [g])
    assert bad.v_hat == 0.0 and math.isnan(bad.ci[0])
    assert bad.diagnostics["v_hat_raw_sqrtN"] == -0.01 and not bad.diagnostics["v_hat_psd"]


@pytest.mark.slow
def test_synchronous_variance_scale():
    # empirical variance of n^(1/2)(S_hat - S) near 2 T int c^2 at N = n/2 - M + 1
    n, c, T = 2000, 0.16, 1.0
    M = int(n**0.3)
    N = n // 2 - M + 1
    g = get_functional("trace")
    errs = []
    for r in range(300):
        rng = np.random.default_rng(r)
        ts = brownian_ticks(rng, regular_grid(n, T), sigma2=c)
        path = fejer_inversion(spectrum_matrix([ts], N, q_max=M - 1), M)
        errs.append(math.sqrt(n) * (plug_in_estimate(path, g) - c * T))
    assert np.var(errs) == pytest.approx(2 * T * c**2 * T, rel=0.25)
