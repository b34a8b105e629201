from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wcmatrix.expm import expm, expm_times
from wcmatrix.semigroup import (SampledSemigroup, SemigroupDefectError, _window_max, as_time,
                                extend_operator, orbit_function, probe_vectors, renormalize,
                                shift_convergence_check, verify_extension, weak_identity_check)

ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])
DIAG = np.diag([-1.0, -2.0])


def laplacian(d):
    return np.diag(-2.0 * np.ones(d)) + np.diag(np.ones(d - 1), 1) + np.diag(np.ones(d - 1), -1)


@given(arrays(np.float64, (4, 4), elements=st.floats(-3, 3)))
def test_expm_matches_scipy(a):
    np.testing.assert_allclose(expm(a), scipy.linalg.expm(a), rtol=1e-12, atol=1e-12)


def test_expm_closed_forms():
    t = np.array([0.0, 0.3, 1.7])
    rot = expm_times(ROTATION, t)
    for k, s in enumerate(t):
        np.testing.assert_allclose(rot[k], [[np.cos(s), -np.sin(s)], [np.sin(s), np.cos(s)]],
                                   atol=1e-15)
    np.testing.assert_allclose(expm(np.zeros((3, 3))), np.eye(3))


def test_as_time():
    assert as_time("1/3") == Fraction(1, 3)
    assert as_time(0.5) == Fraction(1, 2)
    assert as_time(Fraction(3, 4)) == Fraction(3, 4)
    assert abs(float(as_time("sqrt(2)")) - 2 ** 0.5) < 1e-15


@pytest.fixture(scope="module")
def heat():
    return SampledSemigroup.from_generator(laplacian(4), t_max=2, depth=10)


def test_construction_records_bound_and_defect(heat):
    assert heat.n_samples == 2 * 2 ** 10
    assert heat.defect <= 1e-12
    np.testing.assert_allclose(heat.op(Fraction(1, 2)), scipy.linalg.expm(0.5 * laplacian(4)),
                               atol=1e-13)
    assert heat.index_of(Fraction(1, 3)) is None


def test_perturbed_semigroup_is_rejected():
    def provider(s):
        out = expm_times(DIAG, s)
        out[np.asarray(s) == 0.5, 0, 0] += 0.1
        return out
    with pytest.raises(SemigroupDefectError, match="defect"):
        SampledSemigroup(provider, 2, 2, 10)


def test_identity_semigroup_extends_exactly():
    g = SampledSemigroup.identity(3, depth=8)
    assert g.defect == 0.0
    r = extend_operator(g, Fraction(1, 3))
    assert r.ok
    np.testing.assert_array_equal(r.matrix, np.eye(3))
    assert r.max_entry_gap == 0.0 and r.semigroup_defect_after == 0.0


def test_from_entries_matches_generator():
    g = SampledSemigroup.from_entries([["exp(-s)", "0"], ["0", "exp(-2*s)"]], depth=8)
    ref = SampledSemigroup.from_generator(DIAG, depth=8)
    np.testing.assert_allclose(g.ops, ref.ops, atol=1e-15)


def test_window_max_against_brute_force(rng):
    for n in (1, 4, 5, 8):
        vals = rng.standard_normal((2 * n, 3))
        expected = np.array([vals[i:i + n + 1].max(axis=0) for i in range(n)])
        np.testing.assert_array_equal(_window_max(vals, n), expected)


def test_probe_vectors_dedupe_sign_pairs():
    p = probe_vectors(3, n_random=0)
    assert len(p) == 3 + 4
    signs = p[3:]
    assert not any(np.array_equal(a, -b) for a in signs for b in signs)


@pytest.mark.parametrize("gen, d", [(ROTATION, 2), (DIAG, 2), (laplacian(4), 4)])
def test_renormalized_operators_are_contractions(gen, d):
    # the grid sup undershoots the continuum sup by about h**2 / 8
    g = SampledSemigroup.from_generator(gen, depth=10)
    r = renormalize(g)
    assert r.contractive
    assert r.op_norms.max() <= 1 + 1e-6
    x = np.arange(1, d + 1, dtype=float)
    assert r.renorm(x) >= np.max(np.abs(x))


def test_weak_identity_check(heat):
    assert weak_identity_check(heat).passed
    # a constant idempotent family is a semigroup but not continuous at 0
    p = np.diag([1.0, 0.0])
    proj = SampledSemigroup(lambda s: np.broadcast_to(p, (np.size(s), 2, 2)).copy(), 2, 2, 8)
    check = weak_identity_check(proj)
    assert not check.passed
    with pytest.raises(ValueError, match="identity"):
        extend_operator(proj, Fraction(1, 3))


def test_orbit_function_and_shifts(heat):
    f = orbit_function(heat, np.eye(4)[0], np.eye(4)[0])
    np.testing.assert_allclose(f.values, heat.ops[:, 0, 0])
    rep = shift_convergence_check(f)
    assert rep.passed


@pytest.mark.parametrize("t", ["1/3", "1/7"])
def test_extension_matches_oracle(heat, t):
    r = extend_operator(heat, t)
    assert r.ok
    np.testing.assert_allclose(r.matrix, scipy.linalg.expm(float(Fraction(t)) * laplacian(4)),
                               atol=1e-6)


def test_extension_reproduces_samples(heat):
    t = Fraction(37, 2 ** 10)
    r = extend_operator(heat, t)
    np.testing.assert_allclose(r.matrix, heat.op(t), atol=5e-7)


def test_extension_rejects_out_of_range(heat):
    with pytest.raises(ValueError):
        extend_operator(heat, 3)
    with pytest.raises(ValueError):
        extend_operator(heat, 0)


def test_verify_extension(heat):
    rs = [extend_operator(heat, t) for t in ("1/3", "1/6")]
    report = verify_extension(heat, rs, pair_budget=6)
    assert report["passed"]
    assert len(report["pairs"]) == 6
    assert report["max_defect"] <= 1e-6
    with pytest.raises(ValueError):
        verify_extension(heat, rs[:1])
