import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from fourvol.errors import ConfigurationError, DomainError, SamplingError
from fourvol.functionals import get_functional
from fourvol.simulate import (
    DAY,
    LatentPath,
    SamplingScheme,
    fbm,
    grid_indices,
    replication_seed,
    sample_asynchronous,
    simulate_constant_vol,
    simulate_fbm_vol,
    simulate_heston_bridge,
    true_functional,
    true_spot_path,
)
from fourvol.trigkernels import cubic_variation


def test_heston_bridge_endpoint_and_shapes():
    p = simulate_heston_bridge(seed=3)
    assert p.n_steps == 23400 and p.T == pytest.approx(DAY)
    assert p.c[0, 0, 0] == p.c[-1, 0, 0]
    assert np.all(p.c >= 0)
    assert p.X.shape == (23401, 1)


def test_heston_zero_volvol_is_constant():
    p = simulate_heston_bridge(volvol=0.0, seed=1, n_steps=1000)
    np.testing.assert_allclose(p.c[:, 0, 0], 0.16, rtol=1e-12)


def test_heston_reproducible_and_seed_sensitive():
    a = simulate_heston_bridge(seed=11, n_steps=500)
    b = simulate_heston_bridge(seed=11, n_steps=500)
    c = simulate_heston_bridge(seed=12, n_steps=500)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.c, b.c)
    assert not np.array_equal(a.X, c.X)


def test_heston_multivariate_covariance():
    p = simulate_heston_bridge(seed=2, d=2, price_corr=0.5, n_steps=200)
    c = p.c
    np.testing.assert_allclose(c[:, 0, 1], 0.5 * np.sqrt(c[:, 0, 0] * c[:, 1, 1]))
    assert np.all(np.linalg.eigvalsh(c) >= -1e-15)
    with pytest.raises(ConfigurationError):
        simulate_heston_bridge(d=2, price_corr=np.eye(3))
    with pytest.raises(ConfigurationError):
        simulate_heston_bridge(corr=1.5)


def test_mesh_validation():
    with pytest.raises(ConfigurationError):
        simulate_constant_vol([[0.1]], T=1.0, dt=0.3)
    with pytest.raises(ConfigurationError):
        simulate_constant_vol([[0.1]], T=-1.0)
    p = simulate_constant_vol([[0.1]], T=1.0, dt=0.25)
    assert p.n_steps == 4


def test_constant_vol_increments():
    p = simulate_constant_vol([[0.16, 0.08], [0.08, 0.16]], T=1.0, n_steps=20000, seed=5)
    dX = np.diff(p.X, axis=0)
    cov = dX.T @ dX
    np.testing.assert_allclose(cov, [[0.16, 0.08], [0.08, 0.16]], atol=0.01)


def test_fbm_standard_brownian_increments():
    rng = np.random.default_rng(0)
    n = 4096
    B = fbm(n, 0.5, rng)
    dB = np.diff(B)
    assert dB.var() * n == pytest.approx(1.0, rel=0.1)
    r = np.corrcoef(dB[:-1], dB[1:])[0, 1]
    assert abs(r) < 4 / np.sqrt(n)


def test_fbm_hurst_scaling():
    # log E|B(t+s) - B(t)|^2 against log s has slope 2H
    rng = np.random.default_rng(1)
    H, n = 0.56, 2**14
    lags = np.array([1, 2, 4, 8, 16, 32, 64])
    msd = np.zeros(lags.size)
    reps = 20
    for _ in range(reps):
        B = fbm(n, H, rng)
        msd += [np.mean((B[k:] - B[:-k]) ** 2) for k in lags]
    slope = np.polyfit(np.log(lags), np.log(msd / reps), 1)[0]
    assert slope == pytest.approx(2 * H, abs=0.04)


def test_fbm_errors():
    with pytest.raises(ConfigurationError):
        fbm(10, 1.0, np.random.default_rng())
    with pytest.raises(ConfigurationError):
        simulate_fbm_vol(H=0.0)


def test_fbm_vol_level():
    p = simulate_fbm_vol(seed=4, n_steps=2000)
    assert p.c[0, 0, 0] == pytest.approx(0.16)
    assert np.all(p.c > 0)


def test_sampling_scheme_validation():
    with pytest.raises(ConfigurationError):
        SamplingScheme(kind="random")
    with pytest.raises(ConfigurationError):
        SamplingScheme(mesh=0)
    with pytest.raises(ConfigurationError):
        SamplingScheme(kind="poisson-thinning", keep_prob=0.0)


def test_regular_and_offset_indices():
    rng = np.random.default_rng()
    np.testing.assert_array_equal(grid_indices(SamplingScheme(mesh=3), 10, rng), [0, 3, 6, 9])
    np.testing.assert_array_equal(
        grid_indices(SamplingScheme("offset-regular", mesh=3, offset=1), 10, rng), [1, 4, 7, 10])


def test_poisson_thinning_count_and_ratio():
    counts = []
    for s in range(20):
        idx = grid_indices(SamplingScheme("poisson-thinning", keep_prob=0.5, max_ratio=50),
                           23400, np.random.default_rng(s))
        gaps = np.diff(idx)
        assert gaps.max() / gaps.min() <= 50
        counts.append(idx.size)
    assert np.mean(counts) == pytest.approx(11700, rel=0.01)


def test_thinning_cap_unreachable():
    with pytest.raises(SamplingError):
        grid_indices(SamplingScheme("poisson-thinning", keep_prob=0.5, max_ratio=1.0), 1000,
                     np.random.default_rng(0))


def test_sample_asynchronous_reads_latent_path():
    p = simulate_constant_vol(np.eye(2) * 0.1, T=1.0, n_steps=100, seed=9)
    ts = sample_asynchronous(p, [SamplingScheme(mesh=2), SamplingScheme("offset-regular", mesh=2, offset=1)])
    assert [t.asset_id for t in ts] == ["1", "2"]
    np.testing.assert_array_equal(ts[0].log_prices, p.X[::2, 0])
    np.testing.assert_array_equal(ts[1].log_prices, p.X[1::2, 1])
    P = cubic_variation(ts[0].grid, ts[1].grid, ts[1].grid.n, 0.5)
    assert P > 0
    with pytest.raises(ConfigurationError):
        sample_asynchronous(p, [SamplingScheme()] * 3)


def test_sampling_reproducible():
    p = simulate_constant_vol([[0.1]], T=1.0, n_steps=1000, seed=21)
    sch = [SamplingScheme("poisson-thinning")]
    a = sample_asynchronous(p, sch)[0].grid.times
    b = sample_asynchronous(p, sch)[0].grid.times
    np.testing.assert_array_equal(a, b)


@given(base=st.integers(0, 2**31), rep=st.integers(0, 10_000))
def test_replication_seeds_distinct(base, rep):
    assert replication_seed(base, rep) != replication_seed(base, rep + 1)
    assert replication_seed(base, rep) == replication_seed(base, rep)


def test_true_functional_examples():
    p = simulate_constant_vol([[0.16]], T=2.0, n_steps=100, seed=0)
    assert true_functional(p, get_functional("power:2")) == pytest.approx(0.0256 * 2.0)
    assert true_functional(p, get_functional("trace")) == pytest.approx(0.32)
    c = np.linspace(0.1, 0.2, 5).reshape(-1, 1, 1)
    lp = LatentPath(dt=0.25, X=np.zeros((5, 1)), c=c, seed=None)
    assert true_functional(lp, get_functional("trace")) == pytest.approx(0.25 * (0.1 + 0.125 + 0.15 + 0.175))
    bad = LatentPath(dt=1.0, X=np.zeros((2, 1)), c=np.zeros((2, 1, 1)), seed=None)
    with pytest.raises(DomainError):
        true_functional(bad, get_functional("log"))


def test_true_spot_path():
    c = np.arange(9.0).reshape(-1, 1, 1)
    lp = LatentPath(dt=0.125, X=np.zeros((9, 1)), c=c, seed=None)
    sp = true_spot_path(lp, 4)
    np.testing.assert_array_equal(sp.values[:, 0, 0], [0, 2, 4, 6])


def test_heston_mean_level():
    # stationary mean of the CIR factor
    means = [simulate_heston_bridge(seed=s, T=1.0, n_steps=2000).c[:, 0, 0].mean() for s in range(30)]
    t = stats.ttest_1samp(means, 0.16)
    assert t.pvalue > 0.001
