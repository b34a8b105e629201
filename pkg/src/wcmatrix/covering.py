"""Epsilon-nets, covering counts and the row-to-column net transfer."""
import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import SampledKernel

__all__ = [
    "NetResult",
    "CompactnessProfile",
    "greedy_net",
    "covering_count",
    "check_coverage",
    "transfer_net",
    "sum_net",
    "compactness_profile",
    "classify_counts",
    "box_bound",
    "joint_continuity_modulus",
]

SLACK = 1e-12


@dataclass
class NetResult:
    """An epsilon-net over an indexed family of vectors.

    ``member_ids`` name the net members.  For nets picked out of the family
    they are family ids; ``sum_net`` members are ``(f_id, g_id)`` pairs
    whose vectors are sums and do not belong to the family.  ``members``
    holds the member vectors either way.
    """

    member_ids: list
    radius: float
    verified: bool
    assignment: dict
    members: np.ndarray = field(repr=False, default=None)
    ids: tuple = field(repr=False, default=())
    empty: bool = False

    def __len__(self):
        return len(self.member_ids)


def _as_family(vectors, ids=None):
    if isinstance(vectors, dict):
        ids = tuple(vectors)
        mat = np.array([np.asarray(vectors[k], dtype=float) for k in ids])
    else:
        mat = np.asarray(vectors, dtype=float)
        if mat.ndim == 1 and mat.size == 0:
            mat = mat.reshape(0, 0)
        ids = tuple(range(mat.shape[0])) if ids is None else tuple(ids)
    if mat.ndim != 2:
        raise ValueError("vectors must form a 2-D array (one vector per row)")
    if len(ids) != mat.shape[0]:
        raise ValueError("ids and vectors differ in length")
    if not np.all(np.isfinite(mat)):
        raise ValueError("vectors contain non-finite entries")
    return mat, ids


def _dist_to(mat, v):
    if mat.shape[1] == 0:
        return np.zeros(mat.shape[0])
    return np.max(np.abs(mat - v), axis=1)


def _slack(mat, bound=None):
    scale = bound if bound is not None else (float(np.max(np.abs(mat))) if mat.size else 0.0)
    return SLACK * scale


def check_coverage(net, vectors, ids=None, bound=None):
    """Recheck a net against a family: each vector within radius of its member."""
    mat, ids = _as_family(vectors, ids)
    lookup = {m: i for i, m in enumerate(net.member_ids)}
    assign_idx = np.array([lookup[net.assignment[i]] for i in ids], dtype=int)
    return _verify(mat, ids, net.members, assign_idx, net.radius, bound)


def _verify(mat, ids, members, assign_idx, radius, bound=None):
    # assign_idx[i] is the index into ``members`` covering vector i
    if mat.shape[0] == 0:
        return True
    d = np.max(np.abs(mat - members[assign_idx]), axis=1) if mat.shape[1] else np.zeros(len(mat))
    return bool(np.all(d <= radius + _slack(mat, bound)))


def greedy_net(vectors, epsilon, ids=None, bound=None):
    """Farthest-point greedy epsilon-net under the sup distance.

    Starts from the first (lowest-id) vector and keeps adding the vector
    farthest from the current net while that distance exceeds ``epsilon``;
    ties go to the lowest position.  The returned net is checked
    exhaustively before ``verified`` is set.
    """
    if epsilon < 0 or not math.isfinite(epsilon):
        raise ValueError("epsilon must be a finite nonnegative number")
    mat, ids = _as_family(vectors, ids)
    n = mat.shape[0]
    if n == 0:
        return NetResult([], float(epsilon), True, {}, np.zeros((0, mat.shape[1])), ids, empty=True)
    chosen = [0]
    dist = _dist_to(mat, mat[0])
    nearest = np.zeros(n, dtype=int)
    while True:
        far = int(np.argmax(dist))
        if dist[far] <= epsilon:
            break
        new = _dist_to(mat, mat[far])
        closer = new < dist
        nearest[closer] = len(chosen)
        dist = np.where(closer, new, dist)
        chosen.append(far)
    members = mat[chosen]
    verified = _verify(mat, ids, members, nearest, epsilon, bound)
    member_ids = [ids[c] for c in chosen]
    assignment = {ids[i]: member_ids[nearest[i]] for i in range(n)}
    return NetResult(member_ids, float(epsilon), verified, assignment, members, ids)


def covering_count(vectors, epsilon, ids=None):
    """Size of the greedy net: an upper bound on the minimal covering number."""
    return len(greedy_net(vectors, epsilon, ids).member_ids)


def _member_index(net):
    return {m: i for i, m in enumerate(net.member_ids)}


def transfer_net(k, row_net, delta):
    """Turn a verified row epsilon-net into a column (delta + 2 epsilon)-net.

    Columns are compared only on the net rows F; a greedy delta-net of these
    restrictions is then a net for the full columns at the larger radius.
    """
    if not row_net.verified:
        raise ValueError("row net is not verified")
    if delta <= 0:
        raise ValueError("delta must be positive")
    f_idx = k.rows.indices(row_net.member_ids)
    restricted = k.values[f_idx, :].T
    inner = greedy_net(restricted, delta, ids=k.cols.ids, bound=k.bound)
    cols = k.values.T
    member_pos = k.cols.indices(inner.member_ids)
    members = cols[member_pos]
    radius = float(delta + 2 * row_net.radius)
    lookup = _member_index(inner)
    assign_idx = np.array([lookup[inner.assignment[c]] for c in k.cols.ids], dtype=int)
    verified = _verify(cols, k.cols.ids, members, assign_idx, radius, k.bound)
    return NetResult(list(inner.member_ids), radius, verified, dict(inner.assignment),
                     members, k.cols.ids)


def box_bound(bound, delta, n_rows):
    """Box-counting upper bound on a delta-net of vectors in [-B, B]^n_rows."""
    return (math.ceil(2 * bound / delta) + 1) ** n_rows


def sum_net(f, g, net_f, net_g):
    """Net for the rows of ``f + g`` built from nets for ``f`` and ``g``.

    Row i of ``f + g`` is covered by the sum of the members covering row i
    of ``f`` and of ``g``; only pairs that actually occur become members.
    """
    if not isinstance(f, SampledKernel) or not isinstance(g, SampledKernel):
        raise TypeError("sum_net expects SampledKernels")
    if f.rows.ids != g.rows.ids or f.cols.ids != g.cols.ids:
        raise ValueError("f and g are defined on different samplings")
    if not (net_f.verified and net_g.verified):
        raise ValueError("both input nets must be verified")
    total = f + g
    pairs = []
    index = {}
    assign_idx = np.empty(len(f.rows), dtype=int)
    assignment = {}
    for pos, id_ in enumerate(f.rows.ids):
        pair = (net_f.assignment[id_], net_g.assignment[id_])
        if pair not in index:
            index[pair] = len(pairs)
            pairs.append(pair)
        assign_idx[pos] = index[pair]
        assignment[id_] = pair
    members = np.array([f.row(a) + g.row(b) for a, b in pairs]).reshape(len(pairs), len(f.cols))
    radius = float(net_f.radius + net_g.radius)
    verified = _verify(total.values, f.rows.ids, members, assign_idx, radius, total.bound)
    return NetResult(pairs, radius, verified, assignment, members, f.rows.ids)


@dataclass
class CompactnessProfile:
    epsilons: list
    levels: list
    counts: np.ndarray
    classification: str
    orientation: str = "rows"

    def count(self, epsilon, level):
        return int(self.counts[self.epsilons.index(epsilon), self.levels.index(level)])


def classify_counts(counts):
    """Classify a counts table ``[epsilon, level]`` as bounded/growing/inconclusive.

    bounded: the finest level repeats the previous level's count for every
    epsilon.  growing: for some epsilon the count rises by a factor >= 1.5
    across two consecutive level steps.  Fewer than three levels is always
    inconclusive.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2 or counts.shape[1] < 3:
        return "inconclusive"
    if np.all(counts[:, -1] == counts[:, -2]):
        return "bounded"
    ratios = counts[:, 1:] / counts[:, :-1]
    big = ratios >= 1.5
    if np.any(big[:, 1:] & big[:, :-1]):
        return "growing"
    return "inconclusive"


def compactness_profile(kernels, epsilons, orientation="rows", levels=None):
    """Greedy covering counts of rows (or columns) across a refinement family."""
    if orientation not in ("rows", "cols"):
        raise ValueError("orientation must be 'rows' or 'cols'")
    epsilons = [float(e) for e in epsilons]
    if not epsilons:
        raise ValueError("need at least one epsilon")
    if any(a <= b for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    kernels = list(kernels)
    if levels is None:
        levels = [len(k.rows if orientation == "rows" else k.cols) for k in kernels]
    levels = list(levels)
    if len(levels) != len(kernels):
        raise ValueError("one level label per kernel")
    counts = np.zeros((len(epsilons), len(kernels)), dtype=int)
    for j, k in enumerate(kernels):
        mat = k.values if orientation == "rows" else k.values.T
        for i, eps in enumerate(epsilons):
            counts[i, j] = covering_count(mat, eps)
    cls = classify_counts(counts) if len(kernels) >= 3 else "inconclusive"
    return CompactnessProfile(epsilons, levels, counts, cls, orientation)


def joint_continuity_modulus(k, h):
    """Largest change of ``k`` between grid points at product distance <= h."""
    if not (k.rows.is_grid and k.cols.is_grid):
        raise ValueError("joint_continuity_modulus needs grid samplings on both axes")
    if h < 0:
        raise ValueError("h must be nonnegative")
    tol = 1e-12 * max(1.0, h)
    near_r = k.rows.pairwise_distances() <= h + tol
    near_c = k.cols.pairwise_distances() <= h + tol
    vals = k.values
    best = 0.0
    for i, j in zip(*np.nonzero(np.triu(near_r))):
        diff = np.abs(vals[i][:, None] - vals[j][None, :])
        best = max(best, float(diff[near_c].max()))
    return best
