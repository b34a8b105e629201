import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from wcmatrix.envelopes import (GridFunction, default_radii, envelope, extend_function,
                                is_dyadic, lower_envelope, upper_envelope)


def test_is_dyadic():
    assert is_dyadic(0.375) and is_dyadic(3)
    assert not is_dyadic(Fraction(1, 3))
    # a binary float is always dyadic, just very deep
    assert is_dyadic(1 / 3) and not is_dyadic(1 / 3, depth=40)
    assert not is_dyadic(0.375, depth=2)


def test_dyadic_grid_function():
    f = GridFunction.dyadic("s*s", (0, 1), 4)
    assert f.sample_points[0] == 1 / 16 and f.sample_points[-1] == 1.0
    assert f.contains(0.5) and not f.contains(0.0) and not f.contains(1 / 3)
    assert f.value_at(0.5) == 0.25
    pts, vals = f.sample(0.2, 0.4, depth=6)
    np.testing.assert_array_equal(vals, pts ** 2)
    assert pts.min() >= 0.2 and pts.max() <= 0.4


def test_exclusion_and_bounds():
    f = GridFunction.dyadic("indicator(s > 1)", (0, 2), 6, exclude=[1.0])
    assert not f.contains(1.0)
    with pytest.raises(ValueError, match="bound"):
        GridFunction.dyadic("2*s", (0, 1), 4, bound=1.0)
    with pytest.raises(ValueError):
        GridFunction((0, 1), [0.5, 0.25], [1, 2])


def test_square_extends_at_one_third():
    f = GridFunction.dyadic("s*s", (0, 1), 16)
    [p] = extend_function(f, [1 / 3])
    assert p.ok
    assert p.value == pytest.approx(1 / 9, abs=1e-6)


def test_oscillation_at_zero():
    f = GridFunction.dyadic("sin(1/s)", (0, 1), 16)
    ev = envelope(f, 0.0)
    assert ev.upper >= 0.999 and ev.lower <= -0.999
    assert ev.converged
    [p] = extend_function(f, [0.0])
    assert p.flag == "gap" and math.isnan(p.value)


def test_step_has_unit_gap_at_the_jump():
    f = GridFunction.dyadic("indicator(s > 1)", (0, 2), 16, exclude=[1.0])
    ev = envelope(f, 1.0)
    assert abs(ev.gap - 1.0) <= 1e-12
    assert upper_envelope(f, 1.0).estimate == 1.0
    assert lower_envelope(f, 1.0).estimate == 0.0


def test_sample_point_is_inside_the_bracket():
    f = GridFunction.dyadic("indicator(s >= 0.5)", (0, 1), 10)
    ev = envelope(f, 0.5)
    assert ev.lower <= f.value_at(0.5) <= ev.upper
    assert ev.gap == pytest.approx(1.0)


def test_radii_validation():
    f = GridFunction.dyadic("s", (0, 1), 8)
    with pytest.raises(ValueError):
        envelope(f, 0.5, radii=[0.1, 0.2])
    with pytest.raises(ValueError, match="outside"):
        envelope(f, 2.0)
    assert default_radii(f)[0] == 0.25


def _tabulated(values, n):
    pts = np.arange(1, n + 1) / n
    return GridFunction((0, 1), pts, values, closed=(False, True))


RADII = 0.25 * 0.5 ** np.arange(4)
N = 64


@given(arrays(np.float64, N, elements=st.floats(-1, 1)), st.integers(16, 48))
def test_envelopes_bracket_sample_values(vals, i):
    f = _tabulated(vals, N)
    t = f.sample_points[i]
    ev = envelope(f, t, radii=RADII)
    assert ev.lower <= f.value_at(t) <= ev.upper
    assert ev.lower <= ev.upper


@given(arrays(np.float64, N, elements=st.floats(-1, 1)),
       arrays(np.float64, N, elements=st.floats(0, 1)), st.integers(16, 48))
def test_envelopes_are_monotone(vals, bump, i):
    f, g = _tabulated(vals, N), _tabulated(vals + bump, N)
    t = f.sample_points[i] + 0.001
    a, b = envelope(f, t, radii=RADII), envelope(g, t, radii=RADII)
    # raw ball extremes are ordered pointwise; the estimates then follow
    assert np.all(np.asarray(a.upper_sequence) <= np.asarray(b.upper_sequence))
    assert np.all(np.asarray(a.lower_sequence) <= np.asarray(b.lower_sequence))


@given(arrays(np.float64, N, elements=st.floats(-1, 1)),
       arrays(np.float64, N, elements=st.floats(-5, 5)), st.integers(24, 40))
def test_envelopes_are_local(vals, noise, i):
    f = _tabulated(vals, N)
    t = f.sample_points[i]
    far = np.abs(f.sample_points - t) > RADII[0]
    g = _tabulated(np.where(far, noise, vals), N)
    a, b = envelope(f, t, radii=RADII), envelope(g, t, radii=RADII)
    assert (a.upper, a.lower) == (b.upper, b.lower)


@pytest.mark.parametrize("expr, t", [("sin(3*s)", 1 / 3), ("exp(-s)", 0.7), ("s*s*s", 1 / 7)])
def test_refinement_consistency(expr, t):
    coarse = extend_function(GridFunction.dyadic(expr, (0, 1), 10), [t])[0]
    fine = extend_function(GridFunction.dyadic(expr, (0, 1), 16), [t])[0]
    assert coarse.ok and fine.ok
    assert coarse.value == pytest.approx(fine.value, abs=1e-6)
