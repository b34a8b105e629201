"""Bounded kernels ("matrices") tabulated on finite samples of index sets."""
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .expr import compile_expr

__all__ = [
    "IndexSampling",
    "SampledKernel",
    "MultiKernel",
    "build_kernel",
    "sup_distance",
    "transpose",
    "regroup",
    "GROUPINGS",
]

METRICS = ("sup", "euclidean")
GROUPINGS = ("L|IJ", "J|IL", "I|JL")


def _block_distance(a, b, metric):
    diff = np.abs(a - b)
    if metric == "sup":
        return diff.max(axis=-1) if diff.shape[-1] else np.zeros(diff.shape[:-1])
    return np.sqrt((diff ** 2).sum(axis=-1))


@dataclass(frozen=True, eq=False)
class IndexSampling:
    """Finite tagged point set standing in for an (infinite) index set.

    ``blocks`` splits the coordinate vector into factors, each with its own
    metric; the distance is the max over factors.  A plain sampling has one
    block.  ``step`` is set only for uniform 1-D grids.
    """

    ids: tuple
    coords: np.ndarray
    metric: str = "sup"
    level: int = 0
    step: float = None
    blocks: tuple = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2:
            raise ValueError("coords must be a (n, dim) array")
        ids = tuple(self.ids)
        if len(ids) != coords.shape[0]:
            raise ValueError(f"{len(ids)} ids for {coords.shape[0]} points")
        if len(set(ids)) != len(ids):
            raise ValueError("sample ids must be unique")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        blocks = self.blocks or ((coords.shape[1], self.metric),)
        if sum(d for d, _ in blocks) != coords.shape[1]:
            raise ValueError("block dimensions do not add up to the coordinate dimension")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def grid(cls, start, stop, n, level=0, metric="sup"):
        """Uniform grid of ``n`` points on ``[start, stop]``; ids are 0..n-1."""
        if n < 1:
            raise ValueError("a grid needs at least one point")
        pts = np.linspace(start, stop, n)
        step = (stop - start) / (n - 1) if n > 1 else 0.0
        return cls(tuple(range(n)), pts, metric=metric, level=level, step=step)

    @classmethod
    def from_points(cls, points, ids=None, level=0, metric="sup"):
        coords = np.asarray(points, dtype=float)
        n = coords.shape[0]
        return cls(tuple(range(n)) if ids is None else tuple(ids), coords,
                   metric=metric, level=level)

    def __len__(self):
        return len(self.ids)

    @property
    def dim(self):
        return self.coords.shape[1]

    @property
    def is_grid(self):
        return self.step is not None

    def index(self, id_):
        try:
            return self._lookup[id_]
        except AttributeError:
            object.__setattr__(self, "_lookup", {k: i for i, k in enumerate(self.ids)})
            return self._lookup[id_]

    def indices(self, ids):
        return np.array([self.index(i) for i in ids], dtype=int)

    def pairwise_distances(self):
        out = np.zeros((len(self), len(self)))
        start = 0
        for dim, metric in self.blocks:
            c = self.coords[:, start:start + dim]
            out = np.maximum(out, _block_distance(c[:, None, :], c[None, :, :], metric))
            start += dim
        return out

    def refines(self, coarser):
        """True when every point of ``coarser`` is also a point here (ids may differ)."""
        if coarser.dim != self.dim:
            return False
        mine = {tuple(c) for c in self.coords.tolist()}
        return all(tuple(c) in mine for c in coarser.coords.tolist())


def _check_values(values, bound):
    if not np.all(np.isfinite(values)):
        raise ValueError("kernel values must be finite")
    top = float(np.max(np.abs(values))) if values.size else 0.0
    if bound is None:
        return top
    bound = float(bound)
    if bound < top:
        raise ValueError(f"declared bound {bound} is below max |value| {top}")
    return bound


@dataclass(frozen=True, eq=False)
class SampledKernel:
    rows: IndexSampling
    cols: IndexSampling
    values: np.ndarray
    bound: float = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.rows), len(self.cols)):
            raise ValueError(
                f"values shape {values.shape} does not match samplings "
                f"({len(self.rows)}, {len(self.cols)})")
        bound = _check_values(values, self.bound)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bound", bound)

    @property
    def shape(self):
        return self.values.shape

    def row(self, id_):
        return self.values[self.rows.index(id_)]

    def col(self, id_):
        return self.values[:, self.cols.index(id_)]

    def __add__(self, other):
        _same_samplings(self, other)
        return SampledKernel(self.rows, self.cols, self.values + other.values)

    def scaled(self, factor):
        return SampledKernel(self.rows, self.cols, factor * self.values)


def _same_samplings(a, b):
    if a.rows.ids != b.rows.ids or a.cols.ids != b.cols.ids:
        raise ValueError("kernels are defined on different samplings")


@dataclass(frozen=True, eq=False)
class MultiKernel:
    """Bounded function on I x J x L."""

    axes: tuple
    values: np.ndarray
    bound: float = None

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) != 3:
            raise ValueError("a MultiKernel has exactly three axes")
        values = np.array(self.values, dtype=float)
        if values.shape != tuple(len(a) for a in axes):
            raise ValueError(f"values shape {values.shape} does not match axes")
        bound = _check_values(values, self.bound)
        values.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bound", bound)


def _coord_env(sampling, prefix, extra_axes, position):
    """Coordinate arrays broadcast for evaluation; ``x`` aliases ``x0`` in 1-D."""
    env = {}
    for k in range(sampling.dim):
        shape = [1] * extra_axes
        shape[position] = len(sampling)
        env[f"{prefix}{k}"] = sampling.coords[:, k].reshape(shape)
    if sampling.dim == 1:
        env[prefix] = env[f"{prefix}0"]
    return env


def build_kernel(source, rows, cols, bound=None):
    """Tabulate a kernel from an expression string, a callable or a literal.

    Expressions see the row coordinate as ``x`` and the column coordinate
    as ``y`` (``x0, x1, ...`` / ``y0, ...`` for multi-dimensional points).
    A callable receives the broadcast coordinate arrays ``(x, y)``.
    """
    if callable(source) and not isinstance(source, str):
        x = rows.coords[:, 0][:, None] if rows.dim == 1 else rows.coords[:, None, :]
        y = cols.coords[:, 0][None, :] if cols.dim == 1 else cols.coords[None, :, :]
        with np.errstate(all="ignore"):
            values = np.broadcast_to(np.asarray(source(x, y), dtype=float),
                                     (len(rows), len(cols)))
    elif isinstance(source, str) or hasattr(source, "variables"):
        expr = compile_expr(source)
        env = _coord_env(rows, "x", 2, 0)
        env.update(_coord_env(cols, "y", 2, 1))
        values = _eval_on(expr, env, (len(rows), len(cols)))
    else:
        values = np.asarray(source, dtype=float)
        if values.shape != (len(rows), len(cols)):
            raise ValueError(
                f"matrix literal has shape {values.shape}, samplings need "
                f"({len(rows)}, {len(cols)})")
    if not np.all(np.isfinite(values)):
        raise ValueError("kernel expression produced non-finite values")
    return SampledKernel(rows, cols, values, bound)


def _eval_on(expr, env, shape):
    used = {k: v for k, v in env.items() if k in expr.variables}
    unknown = set(expr.variables) - set(env)
    if unknown:
        raise ValueError(f"unknown variables {sorted(unknown)} in {expr.source!r}")
    out = expr(**used)
    return np.broadcast_to(out, shape).copy()


def sup_distance(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    if u.size == 0:
        return 0.0
    return float(np.max(np.abs(u - v)))


def transpose(k):
    return SampledKernel(k.cols, k.rows, k.values.T, k.bound)


def _product_sampling(a, b):
    ids = tuple((i, j) for i, j in product(a.ids, b.ids))
    coords = np.hstack([np.repeat(a.coords, len(b), axis=0), np.tile(b.coords, (len(a), 1))])
    return IndexSampling(ids, coords, metric="sup", level=max(a.level, b.level),
                         blocks=a.blocks + b.blocks)


def regroup(m, grouping):
    """View a three-index kernel as a two-index one.

    ``"I|JL"`` puts axis I on the rows and J x L on the columns, and so on.
    Product column ids are ``(id_a, id_b)`` tuples in axis order.
    """
    if grouping not in GROUPINGS:
        raise ValueError(f"grouping must be one of {GROUPINGS}")
    single = "IJL".index(grouping[0])
    rest = [k for k in range(3) if k != single]
    values = np.transpose(m.values, [single] + rest).reshape(len(m.axes[single]), -1)
    cols = _product_sampling(m.axes[rest[0]], m.axes[rest[1]])
    return SampledKernel(m.axes[single], cols, values, m.bound)
