"""Translation kernels (x, y) -> f(x . y) and their covering profiles."""
import math
from dataclasses import dataclass

import numpy as np

from .covering import compactness_profile
from .expr import compile_expr
from .kernel import GROUPINGS, IndexSampling, MultiKernel, SampledKernel, regroup

__all__ = [
    "GROUP_OPS",
    "ap_kernel",
    "ap_profile",
    "window_sampling",
    "triple_kernel",
    "triple_grouping_check",
    "APProfile",
]

GROUP_OPS = {
    "add": lambda a, b: a + b,
    "circle": lambda a, b: np.mod(a + b, 2 * math.pi),
    "int": lambda a, b: a + b,
}

AP_LABELS = {
    "bounded": "almost-periodic-consistent",
    "growing": "not-almost-periodic",
    "inconclusive": "inconclusive",
}


def _as_function(f):
    if callable(f) and not isinstance(f, str):
        return f
    expr = compile_expr(str(f))
    if len(expr.variables) > 1:
        raise ValueError(f"f must be an expression in one variable, got {expr.variables}")
    var = expr.variables[0] if expr.variables else "x"

    def fn(u):
        return expr(**{var: u}) if expr.variables else np.broadcast_to(expr(), np.shape(u)).copy()
    return fn


def _check_op(group_op, *samplings):
    if group_op not in GROUP_OPS:
        raise ValueError(f"group_op must be one of {sorted(GROUP_OPS)}")
    if group_op == "int":
        for s in samplings:
            if not np.array_equal(s.coords, np.round(s.coords)):
                raise ValueError("integer group needs integer coordinates")
    return GROUP_OPS[group_op]


def _values(fn, arg, bound):
    with np.errstate(all="ignore"):
        vals = np.asarray(fn(arg), dtype=float)
    vals = np.broadcast_to(vals, np.shape(arg)).copy()
    if not np.all(np.isfinite(vals)):
        raise ValueError("f is not finite on the sampled products")
    if bound is not None and np.max(np.abs(vals), initial=0.0) > bound:
        raise ValueError(f"f exceeds the declared bound {bound} on the sampled products")
    return vals


def ap_kernel(f, X, Y, group_op="add", bound=None):
    """The kernel (x, y) -> f(x . y) on one-dimensional samplings."""
    op = _check_op(group_op, X, Y)
    x = X.coords[:, 0][:, None]
    y = Y.coords[:, 0][None, :]
    vals = _values(_as_function(f), op(x, y), bound)
    return SampledKernel(X, Y, vals)


def window_sampling(width, density, group_op="add"):
    """Uniform grid of [0, width] with ``density`` points per unit length."""
    n = int(round(width * density)) + 1
    s = IndexSampling.grid(0.0, float(width), n)
    if group_op == "int":
        s = IndexSampling(s.ids, np.round(s.coords), step=s.step)
    return s


@dataclass
class APProfile:
    profile: object
    classification: str
    windows: list


def _check_windows(windows):
    windows = [float(w) for w in windows]
    if len(windows) < 3:
        raise ValueError("need at least 3 windows")
    if any(b <= a for a, b in zip(windows, windows[1:])):
        raise ValueError("windows must increase")
    return windows


def ap_profile(f, windows=(8, 16, 32), density=8, epsilons=(0.5,), group_op="add"):
    """Covering counts of the rows of f(x . y) as the window grows at fixed density."""
    windows = _check_windows(windows)
    kernels = []
    for w in windows:
        s = window_sampling(w, density, group_op)
        kernels.append(ap_kernel(f, s, s, group_op))
    prof = compactness_profile(kernels, epsilons, levels=windows)
    return APProfile(prof, AP_LABELS[prof.classification], windows)


def triple_kernel(f, X, Y, Z, group_op="add", bound=None):
    """The three-index kernel (x, y, z) -> f(x . y . z)."""
    op = _check_op(group_op, X, Y, Z)
    x = X.coords[:, 0][:, None, None]
    y = Y.coords[:, 0][None, :, None]
    z = Z.coords[:, 0][None, None, :]
    vals = _values(_as_function(f), op(op(x, y), z), bound)
    return MultiKernel((X, Y, Z), vals)


def triple_grouping_check(f, samplings, group_op="add", epsilons=(0.5,), levels=None):
    """Profiles of the three groupings of f(x . y . z) over a refinement family.

    ``samplings`` is a list (one entry per level) of ``(X, Y, Z)`` triples.
    Returns a dict grouping -> APProfile.
    """
    samplings = list(samplings)
    if len(samplings) < 3:
        raise ValueError("need at least 3 levels")
    levels = list(range(len(samplings))) if levels is None else list(levels)
    multis = [triple_kernel(f, *xyz, group_op=group_op) for xyz in samplings]
    out = {}
    for g in GROUPINGS:
        kernels = [regroup(m, g) for m in multis]
        prof = compactness_profile(kernels, epsilons, levels=levels)
        out[g] = APProfile(prof, AP_LABELS[prof.classification], levels)
    return out
