import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourvol.baseline_rv import RVWindow, rv_plug_in, rv_spot, rv_window_values
from fourvol.errors import ConfigurationError, EstimationError
from fourvol.functionals import get_functional
from fourvol.spectrum import TickSeries
from fourvol.trigkernels import ObservationGrid

from conftest import brownian_ticks, random_grid, regular_grid


def deterministic_ticks(n=10, T=1.0):
    # increments of +-0.1 on a regular grid: every window gives 0.01 / (1/n)
    g = regular_grid(n, T)
    x = np.concatenate([[0.0], np.cumsum(0.1 * (-1.0) ** np.arange(n))])
    return TickSeries("a", g, x)


def test_window_validation():
    assert RVWindow.default(23400).k_n == int(23400**0.45)
    with pytest.raises(ConfigurationError):
        RVWindow(0, 10)
    with pytest.raises(ConfigurationError):
        RVWindow(6, 10)
    ts = deterministic_ticks()
    with pytest.raises(ConfigurationError):
        rv_window_values(ts, RVWindow(2, 11))


def test_deterministic_increments():
    ts = deterministic_ticks(10)
    vals = rv_window_values(ts, 3)
    assert vals.size == 8
    np.testing.assert_allclose(vals, 0.01 * 10, rtol=1e-12)


def test_window_formula_irregular(rng):
    ts = brownian_ticks(rng, random_grid(rng, 40))
    k = 4
    vals = rv_window_values(ts, k)
    tau = ts.grid.times
    for h in (0, 7, 36):
        expect = np.sum(ts.increments[h:h + k] ** 2) / (tau[h + k] - tau[h])
        assert vals[h] == pytest.approx(expect)


def test_constant_vol_mean(rng):
    vals = []
    for _ in range(200):
        ts = brownian_ticks(rng, regular_grid(500), sigma2=0.16)
        vals.append(rv_window_values(ts, 20).mean())
    assert np.mean(vals) == pytest.approx(0.16, rel=0.01)


def test_variance_decreases_with_window(rng):
    ts = brownian_ticks(rng, regular_grid(20000), sigma2=0.16)
    v = [rv_window_values(ts, k).var() for k in (5, 20, 80)]
    assert v[0] > v[1] > v[2]
    # relative variance ~ 2/k for Gaussian increments
    assert v[1] / 0.16**2 == pytest.approx(2 / 20, rel=0.2)


def test_rv_spot_piecewise_constant():
    ts = deterministic_ticks(10)
    sp = rv_spot(ts, 2)
    assert sp.B == 10 and sp.conditioned
    np.testing.assert_allclose(sp.values[:, 0, 0], 0.1)
    with pytest.raises(ConfigurationError):
        rv_spot(ts, 2, B=0)


def test_rv_spot_carries_last_start(rng):
    g = ObservationGrid(np.array([0.0, 0.1, 0.5, 0.6, 1.0]), 1.0)
    ts = TickSeries("a", g, np.array([0.0, 0.1, 0.3, 0.2, 0.4]))
    vals = rv_window_values(ts, 1)
    sp = rv_spot(ts, 1, B=10)
    # t = 0.0 -> window 0; t = 0.1..0.4 -> window 1; t >= 0.5 -> 2; t >= 0.6 -> 3
    idx = [0, 1, 1, 1, 1, 2, 3, 3, 3, 3]
    np.testing.assert_allclose(sp.values[:, 0, 0], vals[idx])


def test_plug_in_constant():
    ts = deterministic_ticks(20)
    k = 3
    out = rv_plug_in(ts, get_functional("power:2"), k)
    assert out == pytest.approx((0.2) ** 2 * (20 - 2 * k + 1) / 20)


def test_plug_in_matches_direct_sum(rng):
    ts = brownian_ticks(rng, random_grid(rng, 100))
    k = 6
    g = get_functional("log")
    vals = rv_window_values(ts, k)
    tau = ts.grid.times
    h = np.arange(k, 100 - k + 1)
    expect = np.sum(np.log(vals[h]) * (tau[h] - tau[h - 1]))
    assert rv_plug_in(ts, g, k) == pytest.approx(expect)


def test_plug_in_domain_error_reports_time():
    g = regular_grid(10)
    x = np.zeros(11)
    x[6:] = 0.5  # only increment 6 is non-zero; single-tick windows elsewhere are zero
    ts = TickSeries("a", g, x)
    with pytest.raises(EstimationError) as info:
        rv_plug_in(ts, get_functional("log"), 1)
    assert info.value.time == pytest.approx(0.1)


@given(seed=st.integers(0, 10_000), k=st.integers(1, 10))
def test_window_values_positive_and_consistent(seed, k):
    rng = np.random.default_rng(seed)
    ts = brownian_ticks(rng, random_grid(rng, 50))
    vals = rv_window_values(ts, k)
    assert vals.size == 50 - k + 1 and np.all(vals > 0)
