"""Extending a semigroup of matrices from dyadic times to all of (0, T_max].

Input: operators T_s for s in the dyadic sample S, given by a provider that
is a pure function of time.  Every matrix entry s -> (T_s)_{ji} is an orbit
function; the operator at a new time t is assembled from the continuous
extensions of these orbits, i.e. from their envelopes at t.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .envelopes import CAUCHY_TOL, GridFunction, envelope_many, default_radii
from .expm import expm_times
from .expr import compile_expr
from .limits import cauchy_limit, romberg

__all__ = [
    "SemigroupDefectError",
    "SampledSemigroup",
    "ExtensionResult",
    "IdentityCheck",
    "ShiftReport",
    "as_time",
    "renormalize",
    "probe_vectors",
    "weak_identity_check",
    "orbit_function",
    "shift_convergence_check",
    "extend_operator",
    "verify_extension",
]

DEFECT_TOL = 1e-10
EXTENSION_TOL = 1e-6
BALL_POINTS = 2048


class SemigroupDefectError(ValueError):
    """The sampled family violates T_s T_s' = T_{s+s'} on S."""


def as_time(t):
    """Exact rational time from a Fraction, an int, a float or a string like ``"1/3"``."""
    if isinstance(t, Fraction):
        return t
    if isinstance(t, str):
        text = t.strip()
        if text.startswith("sqrt(") and text.endswith(")"):
            return Fraction(math.sqrt(float(Fraction(text[5:-1]))))
        return Fraction(text)
    if isinstance(t, (int, np.integer)):
        return Fraction(int(t))
    return Fraction(float(t)).limit_denominator(2 ** 60)


def _vector_norm(x, kind, axis=-1):
    if kind == "sup":
        return np.max(np.abs(x), axis=axis)
    return np.sqrt(np.sum(x * x, axis=axis))


def _dual_norm(x, kind):
    if kind == "sup":
        return float(np.sum(np.abs(x)))
    return float(np.sqrt(np.dot(x, x)))


def _operator_norm(m, kind):
    m = np.asarray(m, dtype=float)
    if kind == "sup":
        return np.max(np.sum(np.abs(m), axis=-1), axis=-1)
    return np.linalg.norm(m, ord=2, axis=(-2, -1))


class SampledSemigroup:
    """Uniformly bounded matrices T_s on dyadic times s = k / 2**depth in (0, t_max].

    Construction evaluates the provider on S, records the bound M and the
    semigroup defect, and raises :class:`SemigroupDefectError` when the
    defect exceeds ``defect_tol * max(1, M**2)``.
    """

    def __init__(self, provider, dimension, t_max=2, depth=14, norm_kind="sup", bound=None,
                 defect_tol=DEFECT_TOL, seed=0, ops=None):
        if norm_kind not in ("sup", "euclidean"):
            raise ValueError("norm_kind must be 'sup' or 'euclidean'")
        self.dimension = int(dimension)
        self.t_max = as_time(t_max)
        self.depth = int(depth)
        n = self.t_max * 2 ** self.depth
        if n.denominator != 1 or n < 1:
            raise ValueError("t_max must be a positive multiple of 2**-depth")
        self.n_samples = int(n)
        self.numerators = np.arange(1, self.n_samples + 1)
        self.sample_times = self.numerators / 2.0 ** self.depth
        self.provider = provider
        self.norm_kind = norm_kind
        self.seed = seed
        self.ops = self._call(self.sample_times) if ops is None else np.asarray(ops, dtype=float)
        if self.ops.shape != (self.n_samples, self.dimension, self.dimension):
            raise ValueError(f"operators have shape {self.ops.shape}, expected "
                             f"({self.n_samples}, {self.dimension}, {self.dimension})")
        if not np.all(np.isfinite(self.ops)):
            raise ValueError("operators contain non-finite entries")
        self.norms = _operator_norm(self.ops, norm_kind)
        top = float(self.norms.max())
        if bound is not None and top > bound * (1 + 1e-12):
            raise ValueError(f"sampled operator norm {top} exceeds the declared bound {bound}")
        self.bound = top if bound is None else float(bound)
        self.defect, self.defect_pair = self._defect(seed)
        self.defect_tol = defect_tol * max(1.0, self.bound ** 2)
        if self.defect > self.defect_tol:
            s, s2 = self.defect_pair
            raise SemigroupDefectError(
                f"semigroup defect invariant violated: |T_s T_s' - T_(s+s')| = "
                f"{self.defect:.3e} > {self.defect_tol:.1e} at s={s}, s'={s2}")
        self.op_norms = self.norms
        self.renorm = None
        self._identity_check = None

    # constructors ---------------------------------------------------------

    @classmethod
    def from_generator(cls, generator, t_max=2, depth=14, **kw):
        """exp(s A) sampled on S, evaluated with the scaling-and-squaring oracle."""
        a = np.asarray(generator, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("generator must be a square matrix")
        g = cls(lambda s: expm_times(a, s), a.shape[0], t_max, depth, **kw)
        g.generator = a
        return g

    @classmethod
    def from_entries(cls, entries, t_max=2, depth=14, **kw):
        """Per-entry closed forms in ``s``: a d x d nested list of expression strings."""
        exprs = [[compile_expr(str(e)) for e in row] for row in entries]
        d = len(exprs)
        if any(len(row) != d for row in exprs):
            raise ValueError("entries_expr must be a square nested list")

        def provider(s):
            s = np.asarray(s, dtype=float)
            out = np.empty((s.size, d, d))
            for i in range(d):
                for j in range(d):
                    e = exprs[i][j]
                    env = {v: s for v in e.variables}
                    out[:, i, j] = np.broadcast_to(e(**env), s.shape) if env else e()
            return out

        return cls(provider, d, t_max, depth, **kw)

    @classmethod
    def identity(cls, dimension, t_max=2, depth=14, **kw):
        eye = np.eye(dimension)
        return cls(lambda s: np.broadcast_to(eye, (np.size(s), dimension, dimension)).copy(),
                   dimension, t_max, depth, **kw)

    @classmethod
    def from_samples(cls, ops, t_max=2, depth=14, **kw):
        """Stored operators only; extension can use nothing beyond S."""
        ops = np.asarray(ops, dtype=float)
        return cls(None, ops.shape[1], t_max, depth, ops=ops, **kw)

    # evaluation -----------------------------------------------------------

    def _call(self, times):
        if self.provider is None:
            raise ValueError("this semigroup has no operator provider")
        out = np.asarray(self.provider(np.asarray(times, dtype=float)), dtype=float)
        return out.reshape(np.size(times), self.dimension, self.dimension)

    def __repr__(self):
        return (f"SampledSemigroup(d={self.dimension}, t_max={self.t_max}, depth={self.depth}, "
                f"M={self.bound:.6g}, defect={self.defect:.2e})")

    def index_of(self, t):
        """Position of ``t`` in S, or None when t is not a sample time."""
        t = as_time(t)
        k = t * 2 ** self.depth
        if k.denominator != 1 or not 1 <= k <= self.n_samples:
            return None
        return int(k) - 1

    def op(self, t):
        i = self.index_of(t)
        if i is None:
            raise KeyError(f"{t} is not a sample time")
        return self.ops[i]

    def evaluate(self, times):
        """Operators at dyadic times, possibly deeper than S; stored ones when available."""
        return self._call(times)

    def vector_norm(self, x):
        if self.renorm is not None:
            return self.renorm(x)
        return _vector_norm(np.asarray(x, dtype=float), self.norm_kind)

    def operator_norm(self, m):
        return _operator_norm(m, self.norm_kind)

    def _defect(self, seed):
        ops, n = self.ops, self.n_samples
        worst, pair = 0.0, (None, None)
        # every sample time meets its neighbour: T_s T_h vs T_{s+h}, h = 2**-depth
        if n >= 2:
            d = _operator_norm(ops[:-1] @ ops[0] - ops[1:], self.norm_kind)
            i = int(np.argmax(d))
            worst, pair = float(d[i]), (Fraction(i + 1, 2 ** self.depth), Fraction(1, 2 ** self.depth))
        # doubling pairs and seeded random pairs
        half = np.arange(1, n // 2 + 1)
        rng = np.random.default_rng(seed)
        a = rng.integers(1, n, size=64) if n > 1 else np.zeros(0, dtype=int)
        b = np.array([rng.integers(1, n - x + 1) for x in a], dtype=int) if a.size else a
        left = np.concatenate([half, a])
        right = np.concatenate([half, b])
        if left.size:
            d = _operator_norm(ops[left - 1] @ ops[right - 1] - ops[left + right - 1], self.norm_kind)
            i = int(np.argmax(d))
            if d[i] > worst:
                worst = float(d[i])
                pair = (Fraction(int(left[i]), 2 ** self.depth), Fraction(int(right[i]), 2 ** self.depth))
        return worst, pair

    def _copy(self):
        new = object.__new__(SampledSemigroup)
        new.__dict__.update(self.__dict__)
        return new


def probe_vectors(d, kind="sup", n_random=64, seed=0):
    """Basis vectors, sign vectors (d <= 8, one of each +/- pair), seeded random unit vectors."""
    vecs = [np.eye(d)[i] for i in range(d)]
    if d <= 8:
        for bits in range(2 ** (d - 1)):
            signs = np.array([1.0] + [(-1.0) ** ((bits >> k) & 1) for k in range(d - 1)])
            vecs.append(signs)
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        v = rng.standard_normal(d)
        vecs.append(v / _vector_norm(v, kind))
    return np.array(vecs)


def renormalize(g, n_random=64, seed=0, tol=1e-6, chunk=16):
    """Switch to the norm N1(x) = max(|x|, sup_s |T_s x|), making every T_s a contraction.

    N1(T_s x) needs |T_u x| for u in [s, s + t_max]; the orbit beyond t_max
    is continued with T_{t_max} T_{u - t_max}.  Operator norms in the new
    norm are estimated as max N1(T_s x) / N1(x) over the probe set.
    """
    d, n, kind = g.dimension, g.n_samples, g.norm_kind
    top = g.ops[-1]
    ext = np.concatenate([g.ops, top @ g.ops], axis=0)  # times 1/2^p .. 2 t_max

    def n1(x):
        x = np.asarray(x, dtype=float)
        orbit = _vector_norm(np.einsum("tij,j->ti", g.ops, x), kind)
        return float(max(_vector_norm(x, kind), orbit.max()))

    probes = probe_vectors(d, kind, n_random, seed)
    ratios = np.zeros(n)
    for start in range(0, len(probes), chunk):
        p = probes[start:start + chunk].T  # (d, c)
        norms = _vector_norm(ext @ p, kind, axis=1)  # (2n, c)
        base = _vector_norm(p, kind, axis=0)
        n1x = np.maximum(base, norms[:n].max(axis=0))
        n1_ts = _window_max(norms, n)
        ratios = np.maximum(ratios, (n1_ts / n1x).max(axis=1))
    new = g._copy()
    new.norm_kind_base = kind
    new.norm_kind = "renormalized"
    new.renorm = n1
    new.op_norms = ratios
    new.contractive = bool(ratios.max() <= 1 + tol)
    new.probes = probes
    return new


def _window_max(values, n):
    """max(values[i : i + n + 1]) for i < n, along axis 0 of a length-2n array.

    Every such window contains index n, so it splits into a suffix max of
    values[i..n] and a prefix max of values[n..i+n].
    """
    left = np.maximum.accumulate(values[: n + 1][::-1], axis=0)[::-1]
    right = np.maximum.accumulate(values[n:], axis=0)
    return np.maximum(left[:n], right[:n])


@dataclass
class IdentityCheck:
    passed: bool
    inconclusive: bool
    worst_deviation: float
    worst_probe: tuple
    limits: np.ndarray = field(repr=False)
    deviations_at_min: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    note: str = "pointwise check along the smallest sample times"


def _small_times(g):
    limit = g.t_max / 16
    js = [j for j in range(0, g.depth + 1) if Fraction(1, 2 ** j) <= limit]
    return np.array([2.0 ** -j for j in js])


def weak_identity_check(g, probes=None, tol=1e-6):
    """Check rho(T_s x) -> rho(x) as s -> 0+ along s = 2**-j in S.

    ``probes`` is a list of ``(x, rho)`` pairs (default: all basis pairs).
    The limit is read from two Romberg levels of the sequence; a probe
    passes when it converges to within ``tol`` of rho(x).
    """
    d = g.dimension
    times = _small_times(g)
    if times.size < 4:
        return IdentityCheck(False, True, math.nan, None, np.zeros(0), np.zeros(0), times,
                             "fewer than 4 sample times below t_max/16")
    ops = g.evaluate(times) if g.provider is not None else g.ops[(times * 2 ** g.depth).astype(int) - 1]
    if probes is None:
        probes = [(np.eye(d)[i], np.eye(d)[j]) for i in range(d) for j in range(d)]
    limits, devs_min = [], []
    worst, worst_probe = -1.0, None
    ok = True
    for k, (x, rho) in enumerate(probes):
        x = np.asarray(x, dtype=float)
        rho = np.asarray(rho, dtype=float)
        seq = ops @ x @ rho
        target = float(rho @ x)
        conv, est, _ = cauchy_limit(romberg(seq), CAUCHY_TOL)
        dev = abs(est - target)
        limits.append(est)
        devs_min.append(abs(seq[-1] - target))
        bad = (not conv) or dev > tol
        ok &= not bad
        score = dev if conv else math.inf
        if score > worst:
            worst, worst_probe = score, (k, float(times[-1]))
    return IdentityCheck(bool(ok), False, float(worst), worst_probe, np.array(limits),
                         np.array(devs_min), times)


def orbit_function(g, x, rho):
    """s -> rho(T_s x) on S, refinable through the provider."""
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if x.shape != (g.dimension,) or rho.shape != (g.dimension,):
        raise ValueError(f"x and rho must have length {g.dimension}")
    base_kind = getattr(g, "norm_kind_base", g.norm_kind)
    bound = g.bound * float(_vector_norm(x, base_kind)) * _dual_norm(rho, base_kind)
    values = g.ops @ x @ rho
    source = None
    if g.provider is not None:
        def source(s):
            return g.evaluate(s) @ x @ rho
    return GridFunction((0.0, float(g.t_max)), g.sample_times, values, closed=(False, True),
                        bound=bound * (1 + 1e-12) + 1e-300, depth=g.depth, source=source)


@dataclass
class ShiftReport:
    shifts: np.ndarray
    deviations: np.ndarray
    limit: float
    converged: bool
    passed: bool
    note: str = "necessary, not sufficient: pointwise shift convergence plus boundedness"


def shift_convergence_check(f, shifts=None, tol=1e-6):
    """Does max_s' |f(s' + s) - f(s')| tend to 0 as the dyadic shift s -> 0+?

    ``f`` must be sampled on k / 2**depth.  Shifts default to 2**-j from
    width/16 down to the sample spacing.
    """
    if f.depth is None:
        raise ValueError("shift checks need a dyadic GridFunction")
    scale = 2 ** f.depth
    num = np.rint(f.sample_points * scale).astype(np.int64)
    if not np.allclose(num / scale, f.sample_points, rtol=0, atol=0):
        raise ValueError("sample points are not dyadic at the stated depth")
    if shifts is None:
        js = [j for j in range(0, f.depth + 1) if 2.0 ** -j <= f.width / 16]
        shifts = [2.0 ** -j for j in js]
    shifts = np.asarray(sorted(shifts, reverse=True), dtype=float)
    if shifts.size < 4:
        raise ValueError("need at least 4 shifts for a convergence check")
    pos = {int(k): i for i, k in enumerate(num)}
    devs = []
    for s in shifts:
        m = s * scale
        if m != int(m) or m <= 0:
            raise ValueError(f"shift {s} is not a positive multiple of the sample spacing")
        m = int(m)
        idx = np.array([pos.get(int(k) + m, -1) for k in num])
        have = idx >= 0
        if not np.any(have):
            raise ValueError(f"shift {s} leaves no sample pairs inside the domain")
        devs.append(float(np.max(np.abs(f.values[idx[have]] - f.values[have]))))
    devs = np.array(devs)
    conv, limit, _ = cauchy_limit(romberg(devs), CAUCHY_TOL)
    limit = max(limit, 0.0)
    return ShiftReport(shifts, devs, limit, conv, bool(conv and limit <= tol))


@dataclass
class ExtensionResult:
    time: Fraction
    matrix: np.ndarray
    max_entry_gap: float
    semigroup_defect_after: float
    weak_continuity_modulus: dict
    ok: bool
    converged: bool = True
    worst_entry: tuple = None
    message: str = ""

    def to_dict(self):
        return {
            "time": str(self.time),
            "time_float": float(self.time),
            "matrix": self.matrix.tolist(),
            "max_entry_gap": self.max_entry_gap,
            "semigroup_defect_after": _json_float(self.semigroup_defect_after),
            "weak_continuity_modulus": {str(k): v for k, v in self.weak_continuity_modulus.items()},
            "ok": self.ok,
            "converged": self.converged,
            "worst_entry": list(self.worst_entry) if self.worst_entry else None,
            "message": self.message,
        }


def _json_float(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _matrix_function(g):
    return GridFunction((0.0, float(g.t_max)), g.sample_times, g.ops, closed=(False, True),
                        depth=g.depth, source=g.evaluate if g.provider is not None else None)


def _envelope_matrix(g, t, tol, radii, ball_points):
    f = _matrix_function(g)
    up, lo, uc, lc, stopped = envelope_many(f, float(t), radii, CAUCHY_TOL, ball_points)
    gaps = up - lo
    conv = uc & lc
    return 0.5 * (up + lo), gaps, conv


DEFECT_SHIFTS = (Fraction(1, 4), Fraction(1, 16), Fraction(1, 64))
MODULUS_OFFSETS = (Fraction(1, 16), Fraction(1, 256), Fraction(1, 4096))


def extend_operator(g, t, tol=EXTENSION_TOL, radii=None, ball_points=BALL_POINTS,
                    check_defect=True, require_identity=True):
    """T_t for t in (0, t_max] from the envelopes of all d*d orbit functions.

    Entry (j, i) extends s -> e_j*(T_s e_i).  The result is ``ok`` only if
    every entry's envelopes converged with gap <= ``tol``; otherwise the
    worst entry is reported and ``ok`` is false.
    """
    t = as_time(t)
    if t <= 0 or t > g.t_max:
        raise ValueError(f"t = {t} is outside (0, {g.t_max}]")
    if require_identity:
        if g._identity_check is None:
            g._identity_check = weak_identity_check(g)
        if not g._identity_check.passed:
            raise ValueError("weak identity check failed; refusing to extend")
    matrix, gaps, conv = _envelope_matrix(g, t, tol, radii, ball_points)
    worst = np.unravel_index(int(np.argmax(np.where(conv, gaps, np.inf))), gaps.shape)
    max_gap = float(gaps.max())
    converged = bool(conv.all())
    ok = converged and max_gap <= tol
    if not converged:
        message = f"envelopes did not converge at entry {tuple(int(v) for v in worst)}"
    elif not ok:
        message = f"entry {tuple(int(v) for v in worst)} has envelope gap {gaps[worst]:.3e} > {tol}"
    else:
        message = ""
    modulus = {}
    for h in MODULUS_OFFSETS:
        i = g.index_of(h)
        if i is not None:
            modulus[h] = float(np.max(np.abs(g.ops[i] @ matrix - matrix)))
    defect = math.nan
    if check_defect and ok:
        vals = []
        for s in DEFECT_SHIFTS:
            i = g.index_of(s)
            if i is None or t + s > g.t_max:
                continue
            j = g.index_of(t + s)
            other = g.ops[j] if j is not None else _envelope_matrix(g, t + s, tol, radii, ball_points)[0]
            vals.append(float(g.operator_norm(matrix @ g.ops[i] - other)))
        defect = max(vals) if vals else math.nan
    return ExtensionResult(t, matrix, max_gap, defect, modulus, ok, converged,
                           tuple(int(v) for v in worst), message)


def verify_extension(g, extended, pair_budget=20, tol=EXTENSION_TOL, radii=None,
                     ball_points=BALL_POINTS):
    """Semigroup identity and weak continuity across extended and sampled times.

    Pairs (t, t') with t + t' <= t_max are taken from the extended times
    first, then extended times against a few sample times; T_{t+t'} comes
    from S, from the given results, or from a fresh extension.
    """
    extended = list(extended)
    if len(extended) < 2:
        raise ValueError("verify_extension needs at least two extension results")
    known = {r.time: r.matrix for r in extended}
    pool_sampled = [Fraction(k, 2 ** min(g.depth, 6)) for k in (1, 3, 5, 7, 11)]
    pool_sampled = [s for s in pool_sampled if g.index_of(s) is not None]

    def matrix_at(t):
        i = g.index_of(t)
        if i is not None:
            return g.ops[i]
        if t not in known:
            known[t] = _envelope_matrix(g, t, tol, radii, ball_points)[0]
        return known[t]

    times = [r.time for r in extended]
    pairs = []
    for a in range(len(times)):
        for b in range(a, len(times)):
            pairs.append((times[a], times[b]))
    for t in times:
        for s in pool_sampled:
            pairs.append((t, s))
    pairs = [p for p in pairs if p[0] + p[1] <= g.t_max][:pair_budget]
    rows = []
    for a, b in pairs:
        d = float(g.operator_norm(matrix_at(a) @ matrix_at(b) - matrix_at(a + b)))
        rows.append({"t": str(a), "t2": str(b), "defect": d})
    max_defect = max((r["defect"] for r in rows), default=0.0)
    modulus = {str(r.time): {str(h): v for h, v in r.weak_continuity_modulus.items()}
               for r in extended}
    return {
        "pairs": rows,
        "max_defect": max_defect,
        "weak_continuity_modulus": modulus,
        "passed": bool(max_defect <= tol and all(r.ok for r in extended)),
    }
