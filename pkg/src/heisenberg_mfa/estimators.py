"""Thin estimator classes (fit / predict / get_params) over the functional API.

Each class stores its configuration as constructor arguments, so
``get_params`` and ``set_params`` come from scikit-learn's BaseEstimator.
``fit`` takes a :class:`CoefficientField` (or nothing, for the rate
estimator) and ``predict`` takes an (n, 3) array of points or h values.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from . import analysis, lattice
from .synthesis import BesovParams, CoefficientField


def _check_field(fld) -> CoefficientField:
    if not isinstance(fld, CoefficientField):
        raise TypeError(f"expected a CoefficientField, got {type(fld).__name__}")
    return fld


def _points(X) -> np.ndarray:
    """(n, 3) array; object dtype keeps Fraction coordinates exact."""
    X = np.asarray(X, dtype=object)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 3:
        raise ValueError(f"expected points of shape (n, 3), got {X.shape}")
    if not any(isinstance(c, Fraction) for c in X.ravel()):
        X = X.astype(float)
    return X


class GlobalHolderEstimator(BaseEstimator):
    """Uniform Holder exponent from per-scale coefficient suprema."""

    def __init__(self, j_window=analysis.DEFAULT_WINDOW, mode: str = "log", beta=None):
        self.j_window = j_window
        self.mode = mode
        self.beta = beta

    def fit(self, fld, y=None):
        self.field_ = _check_field(fld)
        self.estimate_ = analysis.global_exponent(fld, self.j_window, self.mode, self.beta)
        self.exponent_ = self.estimate_.value
        return self

    def predict(self, X=None) -> np.ndarray:
        n = 1 if X is None else len(_points(X))
        return np.full(n, self.exponent_)


class PointwiseHolderEstimator(BaseEstimator):
    """Pointwise exponent at each input point from wavelet leaders."""

    def __init__(self, j_window=analysis.DEFAULT_WINDOW, mode: str = "log",
                 leader_mode: str = "auto", delta: int = 4, beta=None):
        self.j_window = j_window
        self.mode = mode
        self.leader_mode = leader_mode
        self.delta = delta
        self.beta = beta

    def fit(self, fld, y=None):
        self.field_ = _check_field(fld)
        return self

    def estimate(self, x) -> analysis.ExponentEstimate:
        return analysis.pointwise_exponent(self.field_, x, self.j_window, self.mode,
                                           self.leader_mode, self.delta, self.beta)

    def predict(self, X) -> np.ndarray:
        return np.array([self.estimate(x).value for x in _points(X)], dtype=float)


class CountingSpectrumEstimator(BaseEstimator):
    """Counting dimension d(h) on a grid; ``predict`` interpolates in h."""

    def __init__(self, s: float = 2.0, p: float = 2.0, q: float = 2.0, h_grid=None,
                 n_h: int = 8, j_window=(2, 14), C0=None, log_correction: bool = True):
        self.s = s
        self.p = p
        self.q = q
        self.h_grid = h_grid
        self.n_h = n_h
        self.j_window = j_window
        self.C0 = C0
        self.log_correction = log_correction

    def fit(self, fld, y=None):
        _check_field(fld)
        self.params_ = BesovParams(self.s, self.p, self.q)
        h = self.h_grid
        if h is None:
            t, s = self.params_.t, self.params_.s
            h = t + (s - t) * (np.arange(self.n_h) + 0.5) / self.n_h
        self.spectrum_ = analysis.counting_spectrum(fld, self.params_, h, self.j_window,
                                                    self.C0, self.log_correction)
        self.h_ = np.asarray(self.spectrum_.h)
        self.d_ = np.asarray(self.spectrum_.d_hat)
        return self

    def predict(self, h) -> np.ndarray:
        h = np.atleast_1d(np.asarray(h, dtype=float))
        return np.interp(h, self.h_, self.d_, left=np.nan, right=np.nan)


class ApproximationRateEstimator(BaseEstimator):
    """Dyadic approximation rate of each input point. ``fit`` is a no-op."""

    def __init__(self, j_max: int = 20, scales=None, window: int = 3, C=None):
        self.j_max = j_max
        self.scales = scales
        self.window = window
        self.C = C

    def fit(self, X=None, y=None):
        self.scales_ = tuple(self.scales) if self.scales is not None else \
            tuple(lattice.default_rate_scales(self.j_max))
        return self

    def predict(self, X) -> np.ndarray:
        scales = getattr(self, "scales_", None)
        if scales is None:
            self.fit()
            scales = self.scales_
        return np.array([lattice.approx_rate(tuple(x), scales, self.window, self.C).rate
                         for x in _points(X)], dtype=float)
