"""Finite-data limit detection shared by the double-limit and envelope code."""
import math

import numpy as np

__all__ = ["tail_length", "cauchy_limit", "richardson", "romberg"]


def tail_length(n):
    return max(1, math.ceil(n / 4))


def cauchy_limit(values, tol, tail=None):
    """Cauchy test on the last ``tail`` values (default ``ceil(n/4)``).

    Returns ``(converged, estimate, spread)``; the estimate is the last value
    and ``spread`` the max pairwise difference over the tail.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return False, math.nan, math.nan
    tail = tail_length(values.size) if tail is None else tail
    window = values[-tail:]
    spread = float(window.max() - window.min())
    return bool(spread <= tol), float(values[-1]), spread


def richardson(values):
    """Eliminate the leading linear term of a sequence sampled at halving steps.

    If ``v_k = L + c h_k + O(h_k^2)`` with ``h_{k+1} = h_k / 2`` then
    ``2 v_{k+1} - v_k = L + O(h_k^2)``.  The accelerated sequence converges
    to the same limit whenever ``v`` converges at all.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2:
        return values.copy()
    return 2.0 * values[1:] - values[:-1]


def romberg(values, levels=2):
    """Repeated Richardson steps: level j combines ``(2**j v_{k+1} - v_k) / (2**j - 1)``.

    Stops early rather than shrink the sequence below two terms.
    """
    out = np.asarray(values, dtype=float)
    for j in range(1, levels + 1):
        if out.shape[0] < 3 and j > 1:
            break
        if out.shape[0] < 2:
            break
        w = 2.0 ** j
        out = (w * out[1:] - out[:-1]) / (w - 1.0)
    return out
