"""Matrix exponential by scaling and squaring with a truncated Taylor series.

Kept free of any dependency on the extension code: semigroup fixtures are
built from it and extension results are checked against it.
"""
import math

import numpy as np

__all__ = ["expm", "expm_times"]

_TERMS = 18


def expm(a):
    """exp(a) for one square matrix or a stack of them, shape (..., d, d)."""
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError("expm needs square matrices")
    norm = float(np.max(np.abs(a).sum(axis=-1))) if a.size else 0.0
    # squarings bring the 1-norm under 1/2 for every matrix in the stack
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    scaled = a / (2.0 ** squarings)
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    term = eye.copy()
    total = eye.copy()
    for k in range(1, _TERMS + 1):
        term = term @ scaled / k
        total = total + term
    for _ in range(squarings):
        total = total @ total
    return total


def expm_times(generator, times):
    """exp(s A) stacked over the given times, shape (len(times), d, d)."""
    generator = np.asarray(generator, dtype=float)
    times = np.asarray(times, dtype=float)
    return expm(times[:, None, None] * generator[None, :, :])
