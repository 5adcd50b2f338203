"""scikit-learn style wrappers around the dimension estimator and the 1D
potential operators.

Transformers treat each row of ``X`` as one signal sampled at the cell
centres of a fixed box, so they drop into ordinary pipelines.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .fractal import box_dimension
from .grid import GridFunction
from .operators import _maximal, _riesz, bessel_potential


class BoxDimensionEstimator(BaseEstimator):
    """Box-counting dimension of the point cloud ``X`` (shape (N, 1) or (N, 2))."""

    def __init__(self, level_min: int = 4, level_max: int = 10):
        self.level_min = level_min
        self.level_max = level_max

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=1)
        if X.shape[1] not in (1, 2):
            raise ValueError(f"X must have 1 or 2 columns, got {X.shape[1]}")
        self.estimate_ = box_dimension(X, self.level_min, self.level_max)
        self.dimension_ = self.estimate_.value
        self.n_features_in_ = X.shape[1]
        return self

    def score(self, X=None, y=None):
        """Negative fit residual (higher is better)."""
        check_is_fitted(self, "estimate_")
        return -self.estimate_.fit_residual


class _GridTransformer(TransformerMixin, BaseEstimator):
    def __init__(self, corner: float = 0.0, side: float = 1.0):
        self.corner = corner
        self.side = side

    def fit(self, X, y=None):
        X = check_array(X)
        cells = X.shape[1]
        if cells & (cells - 1):
            raise ValueError(f"number of columns must be a power of two, got {cells}")
        self.n_features_in_ = cells
        self._check_params()
        return self

    def _check_params(self):
        pass

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        rows = []
        for row in X:
            g = GridFunction(1, (self.corner,), self.side, X.shape[1], row)
            rows.append(self._apply(g))
        return np.vstack(rows)


class MaximalTransformer(_GridTransformer):
    """Row-wise fractional maximal function ``M_beta``."""

    def __init__(self, beta: float = 0.0, corner: float = 0.0, side: float = 1.0):
        super().__init__(corner, side)
        self.beta = beta

    def _check_params(self):
        if not 0 <= self.beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")

    def _apply(self, g):
        return _maximal(g, self.beta)


class RieszTransformer(_GridTransformer):
    """Row-wise Riesz potential ``I_beta``."""

    def __init__(self, beta: float = 0.5, corner: float = 0.0, side: float = 1.0):
        super().__init__(corner, side)
        self.beta = beta

    def _check_params(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")

    def _apply(self, g):
        return _riesz(g, self.beta)


class BesselTransformer(_GridTransformer):
    """Row-wise Bessel potential ``G_alpha``."""

    def __init__(self, alpha: float = 1.0, corner: float = 0.0, side: float = 1.0):
        super().__init__(corner, side)
        self.alpha = alpha

    def _check_params(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")

    def _apply(self, g):
        return bessel_potential(g, self.alpha).values
