"""scikit-learn style wrappers: hyperparameters in ``__init__``, work in ``fit``.

Each estimator is fitted on a :class:`~gagliardo.geometry.Domain` (the ``X``
argument) and stores its results in attributes with a trailing underscore,
so they compose with ``get_params``/``set_params``/``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .dimension import box_counting_dim
from .geometry import BoundarySampler, Domain
from .seminorm import SpaceParams, comparability_ratio, full_seminorm, truncated_seminorm
from .whitney import decompose


def _domain(X) -> Domain:
    if not isinstance(X, Domain):
        raise TypeError(f"expected a Domain, got {type(X).__name__}")
    return X


class WhitneyDecomposer(BaseEstimator):
    def __init__(self, max_depth: int = 7):
        self.max_depth = max_depth

    def fit(self, X, y=None):
        self.decomposition_ = decompose(_domain(X), self.max_depth)
        self.n_cubes_ = len(self.decomposition_)
        return self

    def transform(self, X=None):
        """Cube table ``(level, ix, iy)`` as an integer array."""
        check_is_fitted(self, "decomposition_")
        W = self.decomposition_
        return np.column_stack([W.level, W.ix, W.iy])


class BoxCountingDimension(BaseEstimator):
    def __init__(self, scales=None):
        self.scales = scales

    def fit(self, X, y=None):
        E = BoundarySampler.from_domain(_domain(X))
        scales = self.scales if self.scales is not None else np.geomspace(0.4 * E.diam, 0.004 * E.diam, 10)
        est = box_counting_dim(E, scales)
        self.dimension_ = est.value
        self.confidence_interval_ = est.confidence_interval
        self.fit_residual_ = est.fit_residual
        return self


class GagliardoSeminorm(BaseEstimator):
    """Full and truncated seminorms of ``function`` (a field or expression)."""

    def __init__(self, function="x", s: float = 0.5, p: float = 2.0, alpha: float = 0.0, beta: float = 0.0,
                 theta: float = 0.5, depth: int = 7, quad_order: int = 3):
        self.function = function
        self.s = s
        self.p = p
        self.alpha = alpha
        self.beta = beta
        self.theta = theta
        self.depth = depth
        self.quad_order = quad_order

    def fit(self, X, y=None):
        from .expr import compile_expr

        domain = _domain(X)
        f = compile_expr(self.function) if isinstance(self.function, str) else self.function
        params = SpaceParams(self.s, self.p, self.alpha, self.beta, self.theta)
        W = decompose(domain, self.depth)
        self.full_ = full_seminorm(f, domain, params, W=W, quad_order=self.quad_order)
        self.truncated_ = truncated_seminorm(f, domain, params, W=W, quad_order=self.quad_order)
        self.ratio_ = float(comparability_ratio(f, domain, params, W=W, quad_order=self.quad_order))
        return self

    def score(self, X=None, y=None) -> float:
        """Comparability ratio at the fitted depth."""
        check_is_fitted(self, "ratio_")
        return self.ratio_
