import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigstop.paths import build_grid
from sigstop.simulate import (FbmParams, GbmParams, derive_seed, fbm_covariance, fbm_factor,
                              geometric_put, path_stream, sample_fbm, sample_gbm)

GRID = build_grid(0, 1, 10)


def test_gbm_zero_vol_is_deterministic_growth():
    e = sample_gbm(GbmParams(3, s0=[100, 50, 10], r=0.05, sigma=0.0), GRID, 4, 1)
    expect = np.array([100, 50, 10])[None, :] * np.exp(0.05 * GRID.points)[:, None]
    for i in range(4):
        np.testing.assert_allclose(e.values[i], expect, rtol=1e-14)


def test_gbm_same_seed_identical():
    p = GbmParams(2, sigma=0.3)
    a, b = sample_gbm(p, GRID, 20, 5), sample_gbm(p, GRID, 20, 5)
    assert a.values.tobytes() == b.values.tobytes()
    assert not np.array_equal(a.values, sample_gbm(p, GRID, 20, 6).values)


def test_gbm_prefix_property():
    p = GbmParams(2, sigma=0.3)
    big, small = sample_gbm(p, GRID, 200, 9), sample_gbm(p, GRID, 100, 9)
    np.testing.assert_array_equal(big.values[:100], small.values)


def test_gbm_martingale_moment():
    p = GbmParams(1, sigma=0.3, r=0.02)
    ST = sample_gbm(p, build_grid(0, 1, 1), 50_000, 3).values[:, -1, 0]
    se = ST.std(ddof=1) / np.sqrt(ST.size)
    assert abs(ST.mean() - 100 * np.exp(0.02)) <= 3 * se


def test_gbm_increments_uncorrelated_across_paths_and_dates():
    e = sample_gbm(GbmParams(1, sigma=0.2), build_grid(0, 1, 2), 10_000, 4)
    lr = np.diff(np.log(e.values[:, :, 0]), axis=1)
    assert abs(np.corrcoef(lr[:, 0], lr[:, 1])[0, 1]) < 0.05
    assert abs(np.corrcoef(lr[::2, 0], lr[1::2, 0])[0, 1]) < 0.05


def test_gbm_params_validation():
    with pytest.raises(ValueError):
        GbmParams(0)
    with pytest.raises(ValueError):
        GbmParams(2, s0=[1.0, -1.0])
    with pytest.raises(ValueError):
        GbmParams(1, sigma=-0.1)
    with pytest.raises(ValueError):
        sample_gbm(GbmParams(1), GRID, 0, 1)


def test_streams_and_seed_derivation():
    a = path_stream(3, 7).standard_normal(5)
    np.testing.assert_array_equal(a, path_stream(3, 7).standard_normal(5))
    assert not np.array_equal(a, path_stream(3, 8).standard_normal(5))
    assert derive_seed(1, 2) == derive_seed(1, 2) != derive_seed(1, 3)
    with pytest.raises(ValueError):
        path_stream(-1, 0)


def test_fbm_brownian_covariance():
    t = GRID.points
    np.testing.assert_allclose(fbm_covariance(t, 0.5), np.minimum.outer(t, t), atol=1e-12)


def test_fbm_starts_at_zero_and_is_reproducible():
    p = FbmParams(0.3, GRID)
    a = sample_fbm(p, 30, 2)
    assert a.augmented
    np.testing.assert_array_equal(a.values[:, 0, 1], 0.0)
    np.testing.assert_array_equal(a.values[:, :, 0], np.broadcast_to(GRID.points, (30, 11)))
    b = sample_fbm(p, 30, 2)
    assert a.values.tobytes() == b.values.tobytes()
    raw = sample_fbm(p, 30, 2, augment=False)
    np.testing.assert_array_equal(raw.values[:, :, 0], a.values[:, :, 1])


def test_fbm_variance_moment():
    n = 50_000
    x = sample_fbm(FbmParams(0.7, GRID), n, 11, augment=False).values[:, 1:, 0]
    t = GRID.points[1:]
    var = x.var(axis=0, ddof=1)
    # standard error of a Gaussian sample variance
    se = t**1.4 * np.sqrt(2.0 / (n - 1))
    assert np.all(np.abs(var - t**1.4) <= 3 * se)


def test_fbm_hurst_one_is_linear():
    x = sample_fbm(FbmParams(1.0, GRID), 5, 1, augment=False).values[:, :, 0]
    slope = x[:, -1:]
    np.testing.assert_allclose(x, slope * GRID.points[None, :], atol=1e-5)


def test_fbm_validation():
    with pytest.raises(ValueError):
        FbmParams(0.0, GRID)
    with pytest.raises(ValueError):
        FbmParams(1.2, GRID)
    with pytest.raises(ValueError):
        sample_fbm(FbmParams(0.5, build_grid(1, 2, 3)), 4, 0)
    L = fbm_factor(GRID.points[1:], 0.2)
    np.testing.assert_allclose(L @ L.T, fbm_covariance(GRID.points[1:], 0.2), atol=1e-12)


def test_geometric_put_examples():
    assert geometric_put([100.0, 100.0], 100) == 0.0
    assert geometric_put([80.0], 100) == pytest.approx(20.0)
    assert geometric_put([100.0, 64.0], 100) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        geometric_put([1.0, 0.0], 100)


@settings(max_examples=60)
@given(st.lists(st.floats(1.0, 200.0), min_size=1, max_size=5), st.integers(0, 4),
       st.floats(0.0, 50.0))
def test_geometric_put_monotone(prices, idx, bump):
    x = np.array(prices)
    idx = idx % x.size
    y = x.copy()
    y[idx] += bump
    assert geometric_put(y, 100.0) <= geometric_put(x, 100.0) + 1e-12
