"""scikit-learn style facade over the functional core.

Only the pieces that map onto fit/transform/predict are wrapped; the
profile, double-limit and gallery tools stay functional.
"""
import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .covering import greedy_net
from .envelopes import GridFunction, extend_function
from .semigroup import SampledSemigroup, as_time, extend_operator, weak_identity_check

__all__ = ["GreedyNet", "EnvelopeExtender", "SemigroupExtender"]


class GreedyNet(TransformerMixin, BaseEstimator):
    """Greedy epsilon-net of the rows of ``X`` under the sup distance.

    After ``fit``: ``net_indices_`` (row positions of the centers),
    ``centers_``, ``assignment_`` (center position per training row),
    ``radius_`` and ``verified_``.  ``transform`` gives sup distances to
    each center and ``predict`` the nearest center.
    """

    def __init__(self, epsilon=0.1, bound=None):
        self.epsilon = epsilon
        self.bound = bound

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        net = greedy_net(X, self.epsilon, bound=self.bound)
        self.net_indices_ = np.asarray(net.member_ids, dtype=int)
        self.centers_ = X[self.net_indices_]
        self.assignment_ = np.searchsorted(self.net_indices_,
                                           [net.assignment[i] for i in range(len(X))])
        self.radius_ = net.radius
        self.verified_ = net.verified
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "centers_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.max(np.abs(X[:, None, :] - self.centers_[None, :, :]), axis=2)

    def predict(self, X):
        return np.argmin(self.transform(X), axis=1)


class EnvelopeExtender(BaseEstimator):
    """Continuous extension of tabulated 1-d data through its envelopes.

    ``fit(X, y)`` takes sample points ``X`` of shape (n, 1) and values
    ``y``.  ``predict`` returns the extension, NaN where the envelopes
    disagree or fail to converge; the last call's flags are kept in
    ``flags_``.  Limits from tabulated data are only as sharp as the
    sample spacing, so ``cauchy_tol`` usually needs loosening to match.
    """

    def __init__(self, tol=1e-6, cauchy_tol=1e-6, domain=None, closed=(True, True), n_radii=None):
        self.tol = tol
        self.cauchy_tol = cauchy_tol
        self.domain = domain
        self.closed = closed
        self.n_radii = n_radii

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        if X.shape[1] != 1:
            raise ValueError("EnvelopeExtender handles one-dimensional points")
        y = check_array(np.asarray(y, dtype=float).reshape(-1, 1), dtype=float).ravel()
        if len(y) != len(X):
            raise ValueError("X and y must have the same length")
        order = np.argsort(X[:, 0], kind="stable")
        pts, vals = X[order, 0], y[order]
        if np.any(np.diff(pts) == 0):
            raise ValueError("duplicate sample points")
        domain = (pts[0], pts[-1]) if self.domain is None else tuple(self.domain)
        self.function_ = GridFunction(domain, pts, vals, closed=self.closed)
        width = domain[1] - domain[0]
        gap = float(np.max(np.diff(pts))) if len(pts) > 1 else width
        n = self.n_radii or max(2, int(math.floor(math.log2(width / (4 * 2 * gap)))) + 1)
        self.radii_ = (width / 4) * 0.5 ** np.arange(n)
        return self

    def predict(self, X):
        check_is_fitted(self, "function_")
        t = check_array(np.asarray(X, dtype=float).reshape(-1, 1), dtype=float).ravel()
        points = extend_function(self.function_, t, self.tol, self.radii_, self.cauchy_tol)
        self.flags_ = [p.flag for p in points]
        return np.array([p.value for p in points])


class SemigroupExtender(BaseEstimator):
    """Extend a sampled semigroup to arbitrary times in (0, t_max].

    ``fit`` accepts a :class:`SampledSemigroup` or a stack of operators
    on the dyadic grid ``k / 2**depth``.  ``predict(times)`` returns a
    ``(len(times), d, d)`` array; ``ok_`` records per-time success.
    """

    def __init__(self, t_max=2, depth=14, tol=1e-6, seed=0):
        self.t_max = t_max
        self.depth = depth
        self.tol = tol
        self.seed = seed

    def fit(self, X, y=None):
        if isinstance(X, SampledSemigroup):
            g = X
        else:
            ops = check_array(np.asarray(X, dtype=float), dtype=float, allow_nd=True)
            if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
                raise ValueError("expected an (n, d, d) stack of operators")
            g = SampledSemigroup.from_samples(ops, self.t_max, self.depth, seed=self.seed)
        check = weak_identity_check(g, tol=self.tol)
        if not check.passed:
            raise ValueError("weak identity check failed; refusing to extend")
        g._identity_check = check
        self.semigroup_ = g
        return self

    def predict(self, X):
        check_is_fitted(self, "semigroup_")
        times = [as_time(t) for t in np.atleast_1d(np.asarray(X, dtype=object)).ravel()]
        results = [extend_operator(self.semigroup_, t, self.tol, check_defect=False) for t in times]
        self.ok_ = np.array([r.ok for r in results])
        return np.array([r.matrix for r in results])
