import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from sigstop.paths import (Ensemble, Path, TimeGrid, augment_ensemble, augment_time, build_grid,
                           double_difference, increment_matrix, prepare, read_csv, restrict,
                           scale_values, strip_time, write_csv)


# ---------------------------------------------------------------- grids

def test_build_grid_ten_steps():
    g = build_grid(0, 1, 10)
    assert len(g) == 11
    np.testing.assert_allclose(g.points, np.arange(11) / 10, atol=1e-15)


def test_build_grid_minimal_and_arithmetic():
    np.testing.assert_array_equal(build_grid(0, 1, 1).points, [0.0, 1.0])
    np.testing.assert_array_equal(build_grid(0, 2, 4).points, [0.0, 0.5, 1.0, 1.5, 2.0])


@pytest.mark.parametrize("args", [(1, 0, 3), (0, 0, 2), (0, np.inf, 2), (np.nan, 1, 2),
                                  (0, 1, 0), (0, 1, 1.5)])
def test_build_grid_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        build_grid(*args)


@pytest.mark.parametrize("pts", [[0.0], [0.0, 0.0], [0.0, 2.0, 1.0], [-1.0, 0.0], [0.0, np.nan]])
def test_timegrid_invariants(pts):
    with pytest.raises(ValueError):
        TimeGrid(pts)


def test_timegrid_index_of():
    g = build_grid(0, 1, 10)
    assert g.index_of(0.5) == 5
    assert g.index_of(0.30000000000000004) == 3
    with pytest.raises(ValueError):
        g.index_of(0.55)


# ---------------------------------------------------------------- augmentation / restriction

def test_augment_constant_path():
    p = augment_time(Path(build_grid(0, 1, 1), np.zeros((2, 1))))
    np.testing.assert_array_equal(p.values, [[0, 0], [1, 0]])
    assert p.augmented


def test_augment_keeps_values():
    p = augment_time(Path(TimeGrid([0, 0.5]), [[0.0], [3.0]]))
    np.testing.assert_array_equal(p.values, [[0, 0], [0.5, 3]])


def test_augment_strip_round_trip():
    rng = np.random.default_rng(0)
    p = Path(build_grid(0, 1, 5), rng.normal(size=(6, 3)))
    q = strip_time(augment_time(p))
    np.testing.assert_array_equal(q.values, p.values)
    assert not q.augmented


def test_double_augmentation_rejected():
    p = augment_time(Path(build_grid(0, 1, 2), np.zeros((3, 1))))
    with pytest.raises(ValueError):
        augment_time(p)


def test_path_invariants():
    g = build_grid(0, 1, 2)
    with pytest.raises(ValueError):
        Path(g, np.zeros((4, 1)))
    with pytest.raises(ValueError):
        Path(g, [[0.0], [np.inf], [1.0]])
    with pytest.raises(ValueError):
        Path(g, [[0.0, 0.0], [0.4, 0.0], [1.0, 0.0]], augmented=True)


def test_restrict_counts():
    rng = np.random.default_rng(1)
    p = Path(build_grid(0, 1, 10), rng.normal(size=(11, 2)))
    full = restrict(p, 1.0)
    np.testing.assert_array_equal(full.values, p.values)
    first = restrict(p, 0.0)
    assert len(first) == 1
    mid = restrict(p, p.times[5])
    assert len(mid) == 6
    np.testing.assert_array_equal(mid.values, p.values[:6])
    with pytest.raises(ValueError):
        restrict(p, 0.55)


@given(st.integers(0, 10), st.integers(0, 10))
def test_restrict_composes(a, b):
    s, t = sorted((a, b))
    p = Path(build_grid(0, 1, 10), np.arange(22.0).reshape(11, 2))
    times = p.times
    lhs = restrict(restrict(p, times[t]), times[s])
    np.testing.assert_array_equal(lhs.values, restrict(p, times[s]).values)


# ---------------------------------------------------------------- increment matrices

def test_increment_matrix_constant_augmented_paths():
    g = build_grid(0, 1, 2)
    x = augment_time(Path(g, np.full((3, 1), 4.0)))
    y = augment_time(Path(g, np.full((3, 1), -1.0)))
    np.testing.assert_allclose(increment_matrix(x, y), np.full((2, 2), 0.25))


def test_increment_matrix_single_segment():
    g = build_grid(0, 1, 1)
    a, b = np.array([1.0, 2.0, -1.0]), np.array([0.5, -3.0, 2.0])
    x = Path(g, np.stack([np.zeros(3), a]))
    y = Path(g, np.stack([np.ones(3), np.ones(3) + b]))
    np.testing.assert_allclose(increment_matrix(x, y), [[a @ b]])


def test_double_difference_matches_direct_increments():
    rng = np.random.default_rng(2)
    g = build_grid(0, 1, 3)
    for _ in range(20):
        x = Path(g, rng.normal(size=(4, 2)))
        y = Path(g, rng.normal(size=(4, 2)))
        direct = np.array([[np.dot(x.values[p + 1] - x.values[p], y.values[q + 1] - y.values[q])
                            for q in range(3)] for p in range(3)])
        np.testing.assert_allclose(increment_matrix(x, y, "double_difference"), direct,
                                   rtol=0, atol=1e-12)
        np.testing.assert_allclose(increment_matrix(x, y), direct, rtol=0, atol=1e-12)


def test_increment_matrix_dimension_mismatch():
    g = build_grid(0, 1, 2)
    with pytest.raises(ValueError):
        increment_matrix(Path(g, np.zeros((3, 1))), Path(g, np.zeros((3, 2))))


paths_2d = hnp.arrays(np.float64, (5, 2), elements=st.floats(-10, 10, allow_nan=False))


@settings(max_examples=50)
@given(paths_2d, paths_2d)
def test_increment_matrix_transpose_and_telescoping(xv, yv):
    g = build_grid(0, 1, 4)
    x, y = Path(g, xv), Path(g, yv)
    M = increment_matrix(x, y)
    np.testing.assert_allclose(increment_matrix(y, x), M.T, atol=1e-12)
    rows = (xv[1:] - xv[:-1]) @ (yv[-1] - yv[0])
    np.testing.assert_allclose(M.sum(axis=1), rows, atol=1e-9)


def test_double_difference_shape():
    a = np.arange(2 * 4 * 5.0).reshape(2, 4, 5)
    assert double_difference(a).shape == (2, 3, 4)


# ---------------------------------------------------------------- ensembles and CSV

def _ens(n=3, steps=4, d=2, seed=0):
    rng = np.random.default_rng(seed)
    return Ensemble(build_grid(0, 1, steps), rng.normal(size=(n, steps + 1, d)), seed=seed)


def test_ensemble_invariants():
    g = build_grid(0, 1, 2)
    with pytest.raises(ValueError):
        Ensemble(g, np.zeros((0, 3, 1)))
    with pytest.raises(ValueError):
        Ensemble(g, np.zeros((2, 4, 1)))
    with pytest.raises(ValueError):
        Ensemble.from_paths([Path(g, np.zeros((3, 1))), Path(g, np.zeros((3, 2)))])


def test_ensemble_from_paths_round_trip():
    e = _ens()
    again = Ensemble.from_paths(e.paths)
    np.testing.assert_array_equal(again.values, e.values)


def test_ensemble_augment_and_scale():
    e = _ens()
    a = augment_ensemble(e)
    assert a.dim == e.dim + 1
    np.testing.assert_array_equal(a.values[:, :, 0], np.broadcast_to(e.grid.points, (3, 5)))
    s = scale_values(a, 0.5)
    np.testing.assert_array_equal(s.values[:, :, 0], a.values[:, :, 0])
    np.testing.assert_allclose(s.values[:, :, 1:], 0.5 * e.values)
    p = prepare(e, 2.0)
    assert p.augmented
    np.testing.assert_allclose(p.values[:, :, 1:], 2.0 * e.values)
    with pytest.raises(ValueError):
        scale_values(e, 0.0)


def test_csv_round_trip(tmp_path):
    e = _ens()
    f = tmp_path / "paths.csv"
    write_csv(e, f)
    header = f.read_text().splitlines()[0]
    assert header == "path_id,t,x1,x2"
    back = read_csv(f)
    np.testing.assert_array_equal(back.values, e.values)
    np.testing.assert_array_equal(back.grid.points, e.grid.points)


def test_csv_rejects_ragged_grid(tmp_path):
    f = tmp_path / "ragged.csv"
    f.write_text("path_id,t,x1\n0,0,1\n0,1,2\n1,0,1\n1,0.5,2\n")
    with pytest.raises(ValueError):
        read_csv(f)
    f.write_text("path_id,t,x1\n0,0,1\n0,1,2\n1,0,1\n")
    with pytest.raises(ValueError):
        read_csv(f)
