"""Discrete means, iterated integrals and sequential double-limit probes.

Finite matrices always satisfy Fubini, so the interesting object here is
the double-limit gap: a nonzero gap between the two iterated limits along
row/column sequences is a finite witness that the rows are not weakly
relatively compact.  A zero gap proves nothing.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from .kernel import IndexSampling, MultiKernel, SampledKernel, regroup, transpose
from .limits import cauchy_limit, tail_length

__all__ = [
    "DiscreteMean",
    "DoubleLimitReport",
    "iterated_integral",
    "double_limit_gap",
    "gap_search",
    "default_generator",
    "remark2_gallery",
]

WEIGHT_TOL = 1e-12


class DiscreteMean:
    """Finitely supported probability weights over sample ids."""

    def __init__(self, weights):
        weights = {k: float(v) for k, v in dict(weights).items()}
        if not weights:
            raise ValueError("a mean needs nonempty support")
        vals = np.array(list(weights.values()))
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("mean weights must be finite and nonnegative")
        if abs(vals.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"mean weights sum to {vals.sum()!r}, not 1")
        self.weights = weights

    @classmethod
    def point(cls, id_):
        return cls({id_: 1.0})

    @classmethod
    def uniform(cls, ids):
        ids = list(ids)
        return cls({i: 1.0 / len(ids) for i in ids})

    @classmethod
    def from_array(cls, ids, w):
        w = np.asarray(w, dtype=float)
        return cls(dict(zip(ids, w / w.sum())))

    def __repr__(self):
        return f"DiscreteMean({len(self.weights)} atoms)"

    def dense(self, sampling):
        out = np.zeros(len(sampling))
        for id_, w in self.weights.items():
            try:
                out[sampling.index(id_)] += w
            except KeyError:
                raise ValueError(f"mean support {id_!r} is not in the sampling") from None
        return out


def iterated_integral(k, row_mean, col_mean, order="rows-first"):
    """Weighted double sum of ``k``, integrating rows or columns first."""
    m = row_mean.dense(k.rows)
    n = col_mean.dense(k.cols)
    if order == "rows-first":
        # integrate the row variable for every column, then the columns
        return float(np.dot(m @ k.values, n))
    if order == "cols-first":
        return float(np.dot(m, k.values @ n))
    raise ValueError("order must be 'rows-first' or 'cols-first'")


@dataclass
class DoubleLimitReport:
    row_sequence: list
    col_sequence: list
    inner_tail: int
    outer_tail: int
    limit_row_first: float
    limit_col_first: float
    gap: float
    converged: bool
    row_first_converged: bool = True
    col_first_converged: bool = True

    def to_dict(self):
        out = asdict(self)
        out["row_sequence"] = [_jsonable(v) for v in self.row_sequence]
        out["col_sequence"] = [_jsonable(v) for v in self.col_sequence]
        for key in ("limit_row_first", "limit_col_first", "gap"):
            if not math.isfinite(out[key]):
                out[key] = None
        return out


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _iterated(A, tol):
    """lim over the outer axis (rows of A) of lim over the inner axis.

    The inner limit of row m is read off the last ceil(n/4) columns; only
    rows before that tail's share of the outer sequence take part, so the
    inner index always runs ahead of the outer one.
    """
    n_out, n_in = A.shape
    inner_tail = tail_length(n_in)
    prefix = n_out - tail_length(n_out)
    ok = True
    inner = np.empty(prefix)
    for m in range(prefix):
        conv, est, _ = cauchy_limit(A[m], tol, inner_tail)
        ok &= conv
        inner[m] = est
    outer_tail = tail_length(prefix)
    conv, limit, _ = cauchy_limit(inner, tol, outer_tail)
    return bool(ok and conv), limit, inner_tail, outer_tail


def double_limit_gap(k, row_sequence, col_sequence, tol=1e-6):
    """Compare lim_m lim_n k(i_m, j_n) with lim_n lim_m k(i_m, j_n).

    ``k`` is a SampledKernel (sequences are ids) or a callable ``k(m, n)``
    evaluated at the given sequence entries.
    """
    row_sequence = list(row_sequence)
    col_sequence = list(col_sequence)
    if len(row_sequence) < 8 or len(col_sequence) < 8:
        raise ValueError("double-limit sequences need length >= 8")
    if isinstance(k, SampledKernel):
        A = k.values[np.ix_(k.rows.indices(row_sequence), k.cols.indices(col_sequence))]
    else:
        A = np.array([[float(k(m, n)) for n in col_sequence] for m in row_sequence])
    conv_r, lim_r, inner_tail, outer_tail = _iterated(A, tol)
    conv_c, lim_c, _, _ = _iterated(A.T, tol)
    converged = conv_r and conv_c
    gap = abs(lim_r - lim_c) if converged else math.nan
    return DoubleLimitReport(row_sequence, col_sequence, inner_tail, outer_tail,
                             lim_r, lim_c, gap, converged, conv_r, conv_c)


def _toward(sampling, target):
    # ids sorted so the coordinates approach ``target`` (farthest first)
    d = np.max(np.abs(sampling.coords - target), axis=1)
    order = np.lexsort((np.arange(len(sampling)), -d))
    return [sampling.ids[i] for i in order]


def default_generator(k, seed=0, length=16, max_random=None):
    """Yield (row_sequence, col_sequence) candidates for ``gap_search``.

    Monotone sequences in sampling order, reversed order and toward every
    coordinate-wise extreme point come first, followed by seeded uniformly
    random increasing subsequences of the sampling order.
    """
    rng = np.random.default_rng(seed)

    def monotone(s):
        seqs = [list(s.ids), list(s.ids)[::-1]]
        for axis in range(s.dim):
            for pick in (np.argmin, np.argmax):
                seqs.append(_toward(s, s.coords[pick(s.coords[:, axis])]))
        return [q for q in seqs if len(q) >= 8]

    rows, cols = monotone(k.rows), monotone(k.cols)
    for r in rows:
        for c in cols:
            yield r, c
    count = 0
    while max_random is None or count < max_random:
        seqs = []
        for s in (k.rows, k.cols):
            n = min(length, len(s))
            pos = np.sort(rng.choice(len(s), size=n, replace=False))
            seqs.append([s.ids[p] for p in pos])
        yield seqs[0], seqs[1]
        count += 1


def gap_search(k, generator=None, budget=100, tol=1e-6, seed=0):
    """Best converged double-limit report among ``budget`` candidate pairs.

    Largest gap wins, ties go to the earliest candidate.  When no candidate
    converges the first report is returned (``converged`` false).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    gen = default_generator(k, seed=seed) if generator is None else iter(generator)
    best = first = None
    for _, (r, c) in zip(range(budget), gen):
        rep = double_limit_gap(k, r, c, tol)
        if first is None:
            first = rep
        if rep.converged and (best is None or rep.gap > best.gap):
            best = rep
    return best if best is not None else first


def remark2_gallery(d=8, tol=1e-6, budget=100, seed=0):
    """The three groupings of <A x, y> over basis vectors and truncations.

    x, y range over the standard basis e_1..e_d and A over the projections
    P_k onto the first k coordinates, so <P_k e_n, e_m> = [n == m <= k].
    Returns the grouped kernels keyed by grouping, the canonical gap
    report for (x, y)|A and a ``gap_search`` report for the other two.
    """
    if d < 4:
        raise ValueError("remark2_gallery needs d >= 4")
    basis = IndexSampling(tuple(f"e{i}" for i in range(1, d + 1)), np.eye(d))
    projs = IndexSampling(tuple(f"P{k}" for k in range(1, d + 1)),
                          np.tril(np.ones((d, d))))  # row k-1 = diag of P_k
    n = np.arange(1, d + 1)
    # values[x=n, y=m, A=k]
    vals = ((n[:, None, None] == n[None, :, None])
            & (n[:, None, None] <= n[None, None, :])).astype(float)
    m = MultiKernel((basis, basis, projs), vals)
    # grouping names in the x, y, A vocabulary
    # regroup puts the single axis on the rows; transpose to put pairs there
    kernels = {
        "(x,y)|A": transpose(regroup(m, "L|IJ")),
        "(x,A)|y": transpose(regroup(m, "J|IL")),
        "(y,A)|x": transpose(regroup(m, "I|JL")),
    }
    diag_rows = [(f"e{i}", f"e{i}") for i in range(1, d + 1)]
    proj_cols = [f"P{k}" for k in range(1, d + 1)]
    witness = double_limit_gap(kernels["(x,y)|A"], diag_rows, proj_cols, tol)
    others = {}
    for name in ("(x,A)|y", "(y,A)|x"):
        ker = kernels[name]
        same = [(f"e{i}", f"P{i}") for i in range(1, d + 1)]
        basis_seq = [f"e{i}" for i in range(1, d + 1)]
        candidates = _chain([(same, basis_seq)], default_generator(ker, seed=seed, length=d))
        others[name] = gap_search(ker, candidates, budget, tol)
    return kernels, witness, others


def _chain(first, rest):
    yield from first
    yield from rest

