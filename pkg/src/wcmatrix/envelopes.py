"""Upper/lower semicontinuous envelopes of functions known on a dense sample.

The dense set S is the dyadic rationals of the domain.  A ``GridFunction``
stores f on the dyadics of a base depth and, when it carries a ``source``
callable, can evaluate f on deeper dyadics; envelope balls are sampled one
level deeper per halving of the radius so every ball holds about the same
number of points.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .expr import compile_expr
from .limits import cauchy_limit, richardson

__all__ = [
    "GridFunction",
    "EnvelopeValue",
    "ExtendedPoint",
    "default_radii",
    "envelope",
    "upper_envelope",
    "lower_envelope",
    "extend_function",
    "is_dyadic",
]

CAUCHY_TOL = 1e-6
RADIUS_DEPTH = 20
MAX_DEPTH = 50


def is_dyadic(t, depth=None):
    """True when ``t`` is k / 2**q with q <= depth (any q if depth is None)."""
    frac = Fraction(t)
    den = frac.denominator
    if den & (den - 1):
        return False
    return depth is None or den.bit_length() - 1 <= depth


class GridFunction:
    """Bounded real function tabulated on a dense sample of an interval.

    Parameters
    ----------
    domain : (a, b)
    sample_points, values : arrays
        The sample S at the current depth and f on it.
    closed : (bool, bool)
        Whether each end point belongs to the domain.
    bound : float, optional
        Declared bound B; defaults to max |values|.
    depth : int, optional
        Dyadic depth of the sample when it consists of the dyadics k / 2**depth.
    source : callable, optional
        Vectorized f, used to sample deeper dyadics.  Must return arrays of
        shape ``(n,)`` or ``(n, m)`` for ``m`` functions evaluated together.
    exclude : iterable of float
        Points removed from S at every depth.
    """

    def __init__(self, domain, sample_points, values, closed=(False, False), bound=None,
                 depth=None, source=None, exclude=()):
        a, b = (float(v) for v in domain)
        if not a < b:
            raise ValueError("domain needs a < b")
        pts = np.asarray(sample_points, dtype=float)
        vals = np.asarray(values, dtype=float)
        if pts.ndim != 1 or vals.shape[:1] != pts.shape:
            raise ValueError("sample_points and values must align")
        if pts.size and np.any(np.diff(pts) <= 0):
            raise ValueError("sample points must be strictly increasing")
        lo_ok = pts >= a if closed[0] else pts > a
        hi_ok = pts <= b if closed[1] else pts < b
        if not np.all(lo_ok & hi_ok):
            raise ValueError("sample points must lie in the domain")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        top = float(np.max(np.abs(vals))) if vals.size else 0.0
        self.bound_declared = bound is not None
        if bound is None:
            bound = top
        elif top > bound:
            raise ValueError(f"|values| reaches {top}, above the declared bound {bound}")
        self.domain = (a, b)
        self.closed = (bool(closed[0]), bool(closed[1]))
        self.sample_points = pts
        self.values = vals
        self.bound = float(bound)
        self.depth = depth
        self.source = source
        self.exclude = tuple(float(e) for e in exclude)

    @classmethod
    def dyadic(cls, func, domain, depth, closed=(False, True), exclude=(), bound=None):
        """f on the dyadics of ``domain`` at ``depth``; ``func`` may be an expression in ``s``."""
        if isinstance(func, str):
            expr = compile_expr(func)
            var = expr.variables[0] if expr.variables else "s"
            if len(expr.variables) > 1:
                raise ValueError(f"function expression must use one variable, got {expr.variables}")
            func = _expr_source(expr, var)
        gf = cls(domain, [], [], closed=closed, bound=bound, depth=depth, source=func,
                 exclude=exclude)
        pts = gf.dyadic_points(domain[0], domain[1], depth)
        vals = gf._evaluate(pts)
        return cls(domain, pts, vals, closed=closed, bound=bound, depth=depth, source=func,
                   exclude=exclude)

    def __repr__(self):
        return (f"GridFunction(domain={self.domain}, n={self.sample_points.size}, "
                f"depth={self.depth})")

    @property
    def width(self):
        return self.domain[1] - self.domain[0]

    def in_closure(self, t):
        return self.domain[0] <= t <= self.domain[1]

    def _evaluate(self, pts):
        with np.errstate(all="ignore"):
            vals = np.asarray(self.source(pts), dtype=float)
        if vals.shape[:1] != pts.shape:
            vals = np.broadcast_to(vals, pts.shape).copy()
        if not np.all(np.isfinite(vals)):
            raise ValueError("function produced non-finite values on the sample")
        if self.bound_declared and np.max(np.abs(vals), initial=0.0) > self.bound * (1 + 1e-12):
            raise ValueError("function exceeds its declared bound on the sample")
        return vals

    def dyadic_points(self, lo, hi, depth):
        """Dyadics k / 2**depth in ``[lo, hi]`` that belong to the domain and to S."""
        a, b = self.domain
        scale = 2.0 ** depth
        k0 = math.ceil(max(lo, a) * scale)
        k1 = math.floor(min(hi, b) * scale)
        if k1 < k0:
            return np.zeros(0)
        pts = np.arange(k0, k1 + 1, dtype=float) / scale
        keep = (pts >= a if self.closed[0] else pts > a) & (pts <= b if self.closed[1] else pts < b)
        for e in self.exclude:
            keep &= pts != e
        return pts[keep]

    def contains(self, t):
        """Is ``t`` a point of the base sample S?"""
        i = np.searchsorted(self.sample_points, t)
        return i < self.sample_points.size and self.sample_points[i] == t

    def value_at(self, t):
        i = np.searchsorted(self.sample_points, t)
        if not (i < self.sample_points.size and self.sample_points[i] == t):
            raise KeyError(t)
        return self.values[i]

    def sample(self, lo, hi, depth=None):
        """Points and values of S in ``[lo, hi]``, at ``depth`` when f has a source."""
        if self.source is None or depth is None:
            i0 = np.searchsorted(self.sample_points, lo, side="left")
            i1 = np.searchsorted(self.sample_points, hi, side="right")
            return self.sample_points[i0:i1], self.values[i0:i1]
        pts = self.dyadic_points(lo, hi, depth)
        if not pts.size:
            return pts, self.values[:0]
        return pts, self._evaluate(pts)


def _expr_source(expr, var):
    def source(s):
        return expr(**{var: s}) if expr.variables else expr(s=s)
    return source


def default_radii(f, depth=RADIUS_DEPTH):
    r0 = f.width / 4.0
    return r0 * 0.5 ** np.arange(depth)


@dataclass
class OneSided:
    estimate: float
    converged: bool
    sequence: np.ndarray = field(repr=False)
    accelerated: np.ndarray = field(repr=False)


@dataclass
class EnvelopeValue:
    point: float
    upper: float
    lower: float
    gap: float
    radii_used: list = field(repr=False)
    converged: bool
    upper_converged: bool = True
    lower_converged: bool = True
    upper_sequence: np.ndarray = field(repr=False, default=None)
    lower_sequence: np.ndarray = field(repr=False, default=None)
    stopped_early: bool = False


def _ball_extremes(f, t, radii, max_ball_points=None):
    """Nested sup/inf of f over S near ``t`` for each radius.

    Ball k is sampled at dyadic depth ``base + k`` (capped so a ball holds at
    most ``max_ball_points`` points, never below what the data holds) and the
    running max/min is taken from the smallest ball outward, so the sets are
    nested and the sup sequence is nonincreasing by construction.
    """
    base = f.depth
    center = None
    if f.contains(t):
        center = f.value_at(t)
    sups, infs, used = [], [], []
    for k, r in enumerate(radii):
        depth = None
        if f.source is not None and base is not None:
            depth = min(base + k, MAX_DEPTH)
            if max_ball_points:
                cap = int(math.floor(math.log2(max(max_ball_points / (2.0 * r), 1.0))))
                depth = min(depth, cap)
        _, vals = f.sample(t - r, t + r, depth)
        if center is not None:
            vals = np.concatenate([vals, np.asarray(center)[None, ...]]) if vals.size else \
                np.asarray(center)[None, ...]
        if vals.shape[0] == 0:
            break
        sups.append(vals.max(axis=0))
        infs.append(vals.min(axis=0))
        used.append(float(r))
    if not used:
        raise ValueError(f"no sample point within {radii[0]} of {t}")
    sups = np.maximum.accumulate(np.array(sups)[::-1], axis=0)[::-1]
    infs = np.minimum.accumulate(np.array(infs)[::-1], axis=0)[::-1]
    return sups, infs, used, center


def _envelope_arrays(f, t, radii, tol, max_ball_points):
    sups, infs, used, center = _ball_extremes(f, t, radii, max_ball_points)
    shape = sups.shape[1:]
    sups2 = sups.reshape(len(used), -1)
    infs2 = infs.reshape(len(used), -1)
    up_acc, lo_acc = richardson(sups2), richardson(infs2)
    m = sups2.shape[1]
    up_conv = np.zeros(m, dtype=bool)
    lo_conv = np.zeros(m, dtype=bool)
    upper = sups2[-1].copy()
    lower = infs2[-1].copy()
    for j in range(m):
        if len(used) >= 2:
            up_conv[j], upper[j], _ = cauchy_limit(up_acc[:, j], tol)
            lo_conv[j], lower[j], _ = cauchy_limit(lo_acc[:, j], tol)
    # the true limits sit below every sup and above every inf
    upper = np.minimum(upper, sups2[-1])
    lower = np.maximum(lower, infs2[-1])
    if center is not None:
        c = np.asarray(center, dtype=float).reshape(-1)
        upper = np.maximum(upper, c)
        lower = np.minimum(lower, c)
    # accelerated limits may cross by rounding; meet in the middle
    crossed = upper < lower
    upper[crossed] = lower[crossed] = 0.5 * (upper[crossed] + lower[crossed])
    stopped = len(used) < len(radii)
    if stopped:
        up_conv[:] = False
        lo_conv[:] = False
    return (upper.reshape(shape), lower.reshape(shape), up_conv.reshape(shape),
            lo_conv.reshape(shape), sups, infs, used, stopped)


def envelope(f, t, radii=None, tol=CAUCHY_TOL, max_ball_points=None):
    """Both envelopes of ``f`` at ``t`` as an :class:`EnvelopeValue`.

    Each envelope is the limit of the nested sup (inf) sequence as the
    radius halves.  The limit is read from the Richardson-accelerated
    sequence by a Cauchy test on its last quarter, then clipped to the
    bounds any limit must satisfy (below every sup, above f(t) when t is a
    sample point).
    """
    t = float(t)
    if not f.in_closure(t):
        raise ValueError(f"{t} is outside the closure of the domain {f.domain}")
    radii = default_radii(f) if radii is None else np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) >= 0) or np.any(radii <= 0):
        raise ValueError("radii must be positive and strictly decreasing")
    up, lo, uc, lc, sups, infs, used, stopped = _envelope_arrays(f, t, radii, tol, max_ball_points)
    if np.ndim(up):
        raise ValueError("envelope() handles scalar functions; use envelope_many")
    up, lo = float(up), float(lo)
    return EnvelopeValue(t, up, lo, up - lo, used, bool(uc and lc), bool(uc), bool(lc),
                         sups, infs, stopped)


def envelope_many(f, t, radii=None, tol=CAUCHY_TOL, max_ball_points=None):
    """Envelopes of a vector-valued GridFunction, componentwise.

    Returns ``(upper, lower, upper_converged, lower_converged, stopped_early)``
    arrays shaped like one function value.
    """
    radii = default_radii(f) if radii is None else np.asarray(radii, dtype=float)
    up, lo, uc, lc, _, _, _, stopped = _envelope_arrays(f, float(t), radii, tol, max_ball_points)
    return up, lo, uc, lc, stopped


def upper_envelope(f, t, radii=None, tol=CAUCHY_TOL):
    ev = envelope(f, t, radii, tol)
    return OneSided(ev.upper, ev.upper_converged, ev.upper_sequence,
                    richardson(ev.upper_sequence))


def lower_envelope(f, t, radii=None, tol=CAUCHY_TOL):
    ev = envelope(f, t, radii, tol)
    return OneSided(ev.lower, ev.lower_converged, ev.lower_sequence,
                    richardson(ev.lower_sequence))


@dataclass
class ExtendedPoint:
    t: float
    value: float
    flag: str
    envelope: EnvelopeValue = field(repr=False)

    @property
    def ok(self):
        return self.flag is None


def extend_function(f, targets, tol=CAUCHY_TOL, radii=None, cauchy_tol=CAUCHY_TOL):
    """Continuous extension of ``f`` at each target, or a per-point flag.

    The value is the midpoint of the envelope bracket when both envelopes
    converged and the gap is at most ``tol``.  Flags: ``"gap"`` for a
    converged bracket wider than ``tol`` (f does not extend continuously
    there) and ``"nonconverged"`` when the limits could not be read off.
    """
    out = []
    for t in targets:
        ev = envelope(f, t, radii, cauchy_tol)
        if not ev.converged:
            out.append(ExtendedPoint(float(t), math.nan, "nonconverged", ev))
        elif ev.gap > tol:
            out.append(ExtendedPoint(float(t), math.nan, "gap", ev))
        else:
            out.append(ExtendedPoint(float(t), 0.5 * (ev.upper + ev.lower), None, ev))
    return out
