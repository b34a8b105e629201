import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.distance import cdist

from wcmatrix.kernel import (GROUPINGS, IndexSampling, MultiKernel, SampledKernel, build_kernel,
                             regroup, sup_distance, transpose)


def test_grid_sampling_basics():
    s = IndexSampling.grid(0, 1, 5)
    assert s.ids == (0, 1, 2, 3, 4)
    np.testing.assert_allclose(s.coords[:, 0], np.linspace(0, 1, 5))
    assert s.is_grid and s.dim == 1 and len(s) == 5
    assert s.index(3) == 3
    with pytest.raises(KeyError):
        s.index(9)


def test_pairwise_distances_match_cdist(rng):
    pts = rng.uniform(-1, 1, size=(12, 3))
    s = IndexSampling.from_points(pts)
    np.testing.assert_allclose(s.pairwise_distances(), cdist(pts, pts, "chebyshev"))
    e = IndexSampling.from_points(pts, metric="euclidean")
    np.testing.assert_allclose(e.pairwise_distances(), cdist(pts, pts), atol=1e-15)


def test_refinement_relation():
    coarse = IndexSampling.grid(0, 1, 5)
    fine = IndexSampling.grid(0, 1, 9)
    assert fine.refines(coarse)
    assert not coarse.refines(fine)


def test_build_kernel_sources_agree():
    rows = IndexSampling.grid(0, 1, 6)
    cols = IndexSampling.grid(0, 2, 4)
    a = build_kernel("sin(x*y)", rows, cols)
    b = build_kernel(lambda x, y: np.sin(x * y), rows, cols)
    x, y = rows.coords[:, 0][:, None], cols.coords[:, 0][None, :]
    c = build_kernel(np.sin(x * y), rows, cols)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.values, c.values)
    assert a.bound == pytest.approx(np.abs(a.values).max())


def test_multidimensional_expression():
    rows = IndexSampling.from_points([[0, 1], [1, 2]])
    cols = IndexSampling.grid(0, 1, 3)
    k = build_kernel("x0 + x1*y", rows, cols)
    np.testing.assert_allclose(k.values, [[0, 0.5, 1], [1, 2, 3]])


def test_bound_is_validated():
    rows = cols = IndexSampling.grid(0, 1, 3)
    with pytest.raises(ValueError, match="bound"):
        build_kernel("x + y", rows, cols, bound=1.0)
    with pytest.raises(ValueError, match="shape"):
        build_kernel(np.zeros((2, 2)), rows, cols)
    with pytest.raises(ValueError, match="finite"):
        build_kernel("1/x", rows, cols)


def test_values_are_read_only():
    k = build_kernel("x", IndexSampling.grid(0, 1, 3), IndexSampling.grid(0, 1, 3))
    with pytest.raises(ValueError):
        k.values[0, 0] = 5


def test_transpose_and_rows():
    k = build_kernel("x - 2*y", IndexSampling.grid(0, 1, 3), IndexSampling.grid(0, 1, 4))
    t = transpose(k)
    np.testing.assert_array_equal(t.values, k.values.T)
    np.testing.assert_array_equal(k.row(1), k.values[1])
    np.testing.assert_array_equal(k.col(2), t.row(2))


def test_regroup_places_single_axis_on_rows():
    axes = [IndexSampling.grid(0, 1, n) for n in (2, 3, 4)]
    vals = np.arange(24, dtype=float).reshape(2, 3, 4)
    m = MultiKernel(axes, vals)
    for g in GROUPINGS:
        k = regroup(m, g)
        single = "IJL".index(g[0])
        rest = [a for a in range(3) if a != single]
        assert k.shape == (vals.shape[single], vals.shape[rest[0]] * vals.shape[rest[1]])
        # spot-check one entry through the product ids
        i, (a, b) = k.rows.ids[1], k.cols.ids[-1]
        idx = [0, 0, 0]
        idx[single], idx[rest[0]], idx[rest[1]] = i, a, b
        assert k.values[1, -1] == vals[tuple(idx)]


vec = arrays(np.float64, 6, elements=st.floats(-10, 10))


@given(vec, vec, vec)
def test_sup_distance_is_a_metric(u, v, w):
    assert sup_distance(u, u) == 0
    assert sup_distance(u, v) == sup_distance(v, u) >= 0
    assert sup_distance(u, w) <= sup_distance(u, v) + sup_distance(v, w) + 1e-12


@given(arrays(np.float64, (5, 2), elements=st.floats(-5, 5)))
def test_sampling_distances_are_metric(pts):
    d = IndexSampling.from_points(pts).pairwise_distances()
    assert np.all(np.diag(d) == 0)
    np.testing.assert_array_equal(d, d.T)
    assert np.all(d[:, :, None] <= d[:, None, :] + d.T[None, :, :] + 1e-12)
