import numpy as np
import pytest

from wcmatrix.almost_periodic import (ap_kernel, ap_profile, triple_grouping_check,
                                      triple_kernel, window_sampling)
from wcmatrix.kernel import IndexSampling


def test_window_sampling():
    s = window_sampling(8, 4)
    assert len(s) == 33 and s.coords[-1, 0] == 8.0
    si = window_sampling(8, 1, "int")
    assert np.array_equal(si.coords, np.round(si.coords))


def test_ap_kernel_values():
    x = IndexSampling.grid(0, 1, 3)
    k = ap_kernel("cos(x)", x, x)
    np.testing.assert_allclose(k.values, np.cos(x.coords + x.coords.T))
    c = ap_kernel("x", x, x, group_op="circle")
    assert np.all(c.values < 2 * np.pi)
    with pytest.raises(ValueError):
        ap_kernel("x*y", x, x)
    with pytest.raises(ValueError):
        ap_kernel("x", x, x, group_op="mul")
    with pytest.raises(ValueError, match="integer"):
        ap_kernel("x", x, x, group_op="int")


def test_callable_function_accepted():
    p = ap_profile(np.cos, windows=(4, 8, 16), density=4)
    assert p.classification == "almost-periodic-consistent"


@pytest.mark.parametrize("f, label", [
    ("cos(x)", "almost-periodic-consistent"),
    ("sin(x*x)", "not-almost-periodic"),
    ("3", "almost-periodic-consistent"),
])
def test_profiles(f, label):
    assert ap_profile(f).classification == label


def test_quasi_periodic_needs_wider_windows():
    # counts of a quasi-periodic hull saturate far beyond width 32 at eps 0.5,
    # so short windows misread it; a coarse radius already sees the bound
    assert ap_profile("sin(x) + cos(sqrt(2)*x)").classification == "not-almost-periodic"
    coarse = ap_profile("sin(x) + cos(sqrt(2)*x)", epsilons=(2.0,))
    assert coarse.classification == "almost-periodic-consistent"


def test_constant_counts_are_one():
    p = ap_profile("3")
    assert np.all(p.profile.counts == 1)


def test_window_validation():
    with pytest.raises(ValueError):
        ap_profile("cos(x)", windows=(8, 16))
    with pytest.raises(ValueError):
        ap_profile("cos(x)", windows=(16, 8, 32))


def test_triple_kernel_is_symmetric_for_abelian_op():
    s = window_sampling(2, 2)
    m = triple_kernel("sin(x)", s, s, s)
    np.testing.assert_allclose(m.values, np.transpose(m.values, (1, 0, 2)))
    np.testing.assert_allclose(m.values, np.transpose(m.values, (2, 1, 0)))


def test_triple_groupings_agree_on_cos():
    sets = [(s, s, s) for s in (window_sampling(w, 2) for w in (8, 16, 32))]
    out = triple_grouping_check("cos(x)", sets)
    assert {p.classification for p in out.values()} == {"almost-periodic-consistent"}
