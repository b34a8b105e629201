import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.distance import cdist

from wcmatrix.covering import (box_bound, check_coverage, classify_counts, compactness_profile,
                               covering_count, greedy_net, joint_continuity_modulus, sum_net,
                               transfer_net)
from wcmatrix.kernel import IndexSampling, build_kernel


def brute_min_cover(mat, eps):
    """Smallest subset of the family whose eps-balls cover it."""
    d = cdist(mat, mat, "chebyshev")
    n = len(mat)
    for size in range(1, n + 1):
        for centers in itertools.combinations(range(n), size):
            if np.all(d[:, centers].min(axis=1) <= eps):
                return size
    return n


def independent_cover_ok(net, mat):
    d = cdist(mat, net.members, "chebyshev")
    return bool(np.all(d.min(axis=1) <= net.radius + 1e-12 * max(np.abs(mat).max(), 0)))


families = arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 4)),
                  elements=st.floats(-1, 1, width=32))


@given(families, st.sampled_from([0.0, 0.05, 0.2, 0.5, 1.0]))
def test_greedy_net_covers_and_is_separated(mat, eps):
    net = greedy_net(mat, eps)
    assert net.verified
    assert independent_cover_ok(net, mat)
    d = cdist(net.members, net.members, "chebyshev")
    np.fill_diagonal(d, np.inf)
    assert np.all(d > eps)
    assert net.member_ids[0] == 0


@given(families, st.sampled_from([0.05, 0.2, 0.5]))
def test_greedy_is_within_packing_bound_of_optimum(mat, eps):
    # eps-separated centres cannot share an (eps/2)-ball
    assert brute_min_cover(mat, eps) <= covering_count(mat, eps) <= brute_min_cover(mat, eps / 2)


@given(families)
def test_count_is_monotone_in_epsilon(mat):
    counts = [covering_count(mat, e) for e in (0.0, 0.1, 0.3, 0.6, 2.5)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[-1] == 1
    assert counts[0] == len(np.unique(mat, axis=0))


def test_ties_go_to_lowest_index():
    mat = np.array([[0.0], [1.0], [-1.0]])
    assert greedy_net(mat, 0.5).member_ids == [0, 1, 2]


def test_empty_family_and_bad_epsilon():
    net = greedy_net(np.zeros((0, 3)), 0.1)
    assert net.empty and net.verified and len(net) == 0
    with pytest.raises(ValueError):
        greedy_net(np.zeros((2, 2)), -0.1)
    with pytest.raises(ValueError):
        greedy_net(np.array([[np.nan]]), 0.1)


def test_check_coverage_detects_a_broken_net():
    mat = np.array([[0.0, 0.0], [1.0, 1.0]])
    net = greedy_net(mat, 0.1)
    assert check_coverage(net, mat)
    assert not check_coverage(net, mat + np.array([[0.0, 0.0], [0.5, 0.0]]))


def test_dict_family_keeps_ids():
    net = greedy_net({"a": [0.0], "b": [0.05], "c": [1.0]}, 0.1)
    assert net.member_ids == ["a", "c"]
    assert net.assignment == {"a": "a", "b": "a", "c": "c"}


def _kernel(expr, n=24):
    g = IndexSampling.grid(0, 1, n)
    return build_kernel(expr, g, g)


@pytest.mark.parametrize("expr", ["sin(3*x*y)", "cos(x+y)", "indicator(y <= x)", "x*y"])
def test_transfer_net_is_a_column_net(expr):
    k = _kernel(expr)
    row_net = greedy_net(k.values, 0.2, ids=k.rows.ids, bound=k.bound)
    col_net = transfer_net(k, row_net, 0.1)
    assert col_net.radius == pytest.approx(0.5)
    assert col_net.verified
    assert independent_cover_ok(col_net, k.values.T)
    assert len(col_net) <= box_bound(k.bound, 0.1, len(row_net))


def test_transfer_net_rejects_unverified_input():
    k = _kernel("x*y")
    row_net = greedy_net(k.values, 0.2)
    row_net.verified = False
    with pytest.raises(ValueError):
        transfer_net(k, row_net, 0.1)


def test_sum_net_covers_the_sum():
    f, g = _kernel("sin(x*y)"), _kernel("cos(x+y)")
    nf = greedy_net(f.values, 0.1, ids=f.rows.ids)
    ng = greedy_net(g.values, 0.1, ids=g.rows.ids)
    s = sum_net(f, g, nf, ng)
    assert s.verified and s.radius == pytest.approx(0.2)
    assert independent_cover_ok(s, (f + g).values)
    assert len(s) <= len(nf) * len(ng)


@pytest.mark.parametrize("counts, label", [
    ([[5, 5, 5]], "bounded"),
    ([[2, 4, 8]], "growing"),
    ([[2, 3, 4]], "inconclusive"),
    ([[2, 4]], "inconclusive"),
    ([[3, 3, 3], [4, 8, 16]], "growing"),
    ([[3, 3, 3], [4, 8, 8]], "bounded"),
])
def test_classify_counts(counts, label):
    assert classify_counts(counts) == label


def test_profiles_of_trivial_kernels():
    const = [_kernel("1", n) for n in (16, 32, 64)]
    ident = [_kernel("indicator(x == y)", n) for n in (16, 32, 64)]
    pc = compactness_profile(const, [0.5, 0.1])
    assert np.all(pc.counts == 1) and pc.classification == "bounded"
    for o in ("rows", "cols"):
        pi = compactness_profile(ident, [0.5], orientation=o)
        assert pi.counts.tolist() == [[16, 32, 64]]
        assert pi.classification == "growing"
        assert pi.count(0.5, 32) == 32


def test_sinxy_counts_stabilise_at_moderate_radii():
    # at eps = 0.1 the greedy counts still move at 16/32/64 (7/6/8) and only
    # settle from 128 on; coarser radii are stable from the start
    fam = [_kernel("sin(x*y)", n) for n in (16, 32, 64)]
    for eps in (0.5, 0.3, 0.15):
        assert compactness_profile(fam, [eps]).classification == "bounded"
    fine = [_kernel("sin(x*y)", n) for n in (128, 256, 512)]
    prof = compactness_profile(fine, [0.1], orientation="rows")
    assert prof.classification == "bounded"


def test_profile_rejects_bad_epsilons():
    fam = [_kernel("x", n) for n in (4, 8, 16)]
    with pytest.raises(ValueError):
        compactness_profile(fam, [0.1, 0.5])
    with pytest.raises(ValueError):
        compactness_profile(fam, [0.5], orientation="diagonal")


def test_joint_continuity_modulus():
    k = _kernel("x + y", 11)
    assert joint_continuity_modulus(k, 0.0) == 0.0
    assert joint_continuity_modulus(k, 0.1) == pytest.approx(0.2)
    pts = IndexSampling.from_points([[0.0], [0.3], [0.35]])
    with pytest.raises(ValueError):
        joint_continuity_modulus(build_kernel("x", pts, pts), 0.1)
