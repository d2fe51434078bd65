"""Scikit-learn style wrappers around the sampled-set estimators.

Every estimator is fitted on a weighted point cloud ``X`` of shape ``(n, 3)``
(one Heisenberg point per row) with ``sample_weight`` standing in for the H3
measure of each sample. Evaluation points are passed to ``transform`` or
``predict`` in the same layout. ``region`` takes a generator descriptor (for
example ``S.descriptor``) so boundary effects of a truncated sample are known;
without it the cloud is treated as the whole set.
"""

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .flatness import beta
from .sets import SampledSet, regularity_estimate
from .sio import kernel_from_name, t_eps
from .symmetry import tau_symmetric


def check_points(X, name="X"):
    """Finite float array of shape ``(n, 3)``."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, input_name=name)
    if X.shape[1] != 3:
        raise ValueError(f"{name} must have 3 columns (x, y, t), got {X.shape[1]}")
    return X


def estimate_spacing(X):
    """Median distance between neighbouring projected fibres of a point cloud."""
    xy = np.unique(np.asarray(X)[:, :2], axis=0)
    if len(xy) < 2:
        raise ValueError("cannot infer a spacing from a single fibre; pass h")
    d, _ = cKDTree(xy).query(xy, k=2)
    return float(np.median(d[:, 1]))


def _fit_sample(X, sample_weight, h, region):
    X = check_points(X)
    if sample_weight is None:
        w = np.ones(len(X))
    else:
        w = check_array(np.asarray(sample_weight, float).reshape(-1, 1), input_name="sample_weight").ravel()
        if len(w) != len(X):
            raise ValueError("sample_weight and X differ in length")
    h = estimate_spacing(X) if h is None else float(h)
    return SampledSet(X, w, h, dict(region or {"kind": "cloud"}))


class _SampleEstimator(BaseEstimator):
    def fit(self, X, y=None, sample_weight=None):
        self.sample_ = _fit_sample(X, sample_weight, self.h, self.region)
        self.h_ = self.sample_.h
        self.n_features_in_ = 3
        return self


class VerticalBeta(TransformerMixin, _SampleEstimator):
    """Vertical beta numbers of the fitted sample at each row of ``X`` and each scale."""

    def __init__(self, scales=(1.0,), h=None, n_theta=512, region=None):
        self.scales = scales
        self.h = h
        self.n_theta = n_theta
        self.region = region

    def transform(self, X):
        check_is_fitted(self, "sample_")
        X = check_points(X)
        out = np.empty((len(X), len(self.scales)))
        for i, p in enumerate(X):
            for j, r in enumerate(self.scales):
                try:
                    out[i, j] = beta(self.sample_, p, r, n_theta=self.n_theta).value
                except ValueError:
                    out[i, j] = np.nan  # empty ball
        return out


class Regularity(_SampleEstimator):
    """Estimate the regularity constant from ball masses at random sample centres."""

    def __init__(self, scales=(0.25, 0.5), n_centers=64, h=None, random_state=0, region=None):
        self.scales = scales
        self.n_centers = n_centers
        self.h = h
        self.random_state = random_state
        self.region = region

    def fit(self, X, y=None, sample_weight=None):
        super().fit(X, y, sample_weight)
        rep = regularity_estimate(self.sample_, self.n_centers, self.scales, seed=self.random_state)
        self.report_ = rep
        self.constant_ = rep.constant
        self.ratios_ = rep.ratios
        return self


class LocalSymmetry(_SampleEstimator):
    """Predict whether the ball of radius ``r`` around each row is tau-symmetric."""

    def __init__(self, r=1.0, tau=0.05, pair_cap=20_000, h=None, random_state=0, region=None):
        self.r = r
        self.tau = tau
        self.pair_cap = pair_cap
        self.h = h
        self.random_state = random_state
        self.region = region

    def predict(self, X):
        check_is_fitted(self, "sample_")
        X = check_points(X)
        return np.array([tau_symmetric(self.sample_, p, self.r, self.tau, pair_cap=self.pair_cap,
                                       seed=self.random_state).symmetric for p in X])


class TruncatedSingularIntegral(TransformerMixin, _SampleEstimator):
    """Truncated singular integral of the fitted weighted sample, evaluated at rows of ``X``.

    ``kernel`` is a registry name such as ``"riesz-x"``; the density is ``f = 1``.
    """

    def __init__(self, kernel="riesz-x", eps=0.25, h=None, region=None):
        self.kernel = kernel
        self.eps = eps
        self.h = h
        self.region = region

    def fit(self, X, y=None, sample_weight=None):
        super().fit(X, y, sample_weight)
        self.kernel_ = kernel_from_name(self.kernel)
        return self

    def transform(self, X):
        check_is_fitted(self, "kernel_")
        X = check_points(X)
        return np.array([t_eps(self.kernel_, self.sample_, "one", self.eps, p) for p in X])[:, None]
