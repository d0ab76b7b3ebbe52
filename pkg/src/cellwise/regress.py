"""Plug-in regression from a joint covariance model, and AR(p) fitting.

Given location ``mu`` and scatter ``sigma`` of the joint vector
``(x_1, ..., x_p, y)``, the slopes are ``sigma_xx^{-1} sigma_xy``, the
intercept ``mu_y - mu_x^T beta`` and the residual scale
``sqrt(sigma_yy - beta^T sigma_xx beta)``. A cellwise robust covariance
therefore gives a cellwise robust regression.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .estimate import classical, pairwise_cov, two_step_cov
from .exceptions import CellwiseError, SingularMatrixError
from .matrix import DataMatrix
from .validation import as_data_matrix, check_finite_array

__all__ = [
    "RegFit",
    "plugin_regression",
    "ar_design",
    "ar_fit",
    "contaminated_rows",
    "fit_covariance",
    "PlugInRegressor",
]

COV_METHODS = ("classical", "twostep", "pairwise")


@dataclass(frozen=True, eq=False)
class RegFit:
    alpha: float
    beta: np.ndarray
    sigma_hat: float
    source_model: str
    intercept: bool = True
    warnings: tuple = ()
    model: object = None

    @property
    def gamma(self):
        """Intercept and slopes stacked, ``(alpha, beta_1, ..., beta_p)``."""
        return np.concatenate(([self.alpha], self.beta))

    def predict(self, X):
        return np.asarray(X, dtype=float) @ self.beta + self.alpha


def plugin_regression(model, response_index=-1, intercept=True):
    """Regression coefficients of one variable on the others from a `CovModel`.

    With ``intercept=False`` the uncentered second-moment matrix
    ``sigma + mu mu^T`` takes the place of sigma, which is the plug-in
    version of least squares through the origin.

    A negative plug-in residual variance (possible for repaired robust
    matrices) is clamped to 0 and reported in ``warnings``.
    """
    mu = np.asarray(model.mu, dtype=float)
    S = np.asarray(model.sigma, dtype=float)
    d = mu.shape[0]
    if d < 2:
        raise CellwiseError("plug-in regression needs at least one predictor")
    yi = response_index % d
    xi = np.array([j for j in range(d) if j != yi])
    if not intercept:
        S = S + np.outer(mu, mu)
    Sxx = S[np.ix_(xi, xi)]
    Sxy = S[xi, yi]
    lam_min = float(np.linalg.eigvalsh(Sxx).min())
    if lam_min <= 1e-10:
        raise SingularMatrixError(
            f"predictor covariance is singular (lambda_min={lam_min:.3g}); "
            "apply psd_repair or remove collinear variables",
            lambda_min=lam_min,
        )
    beta = np.linalg.solve(Sxx, Sxy)
    alpha = float(mu[yi] - mu[xi] @ beta) if intercept else 0.0
    s2 = float(S[yi, yi] - beta @ Sxx @ beta)
    notes = []
    if s2 < 0:
        notes.append(f"plug-in residual variance {s2:.3g} < 0 clamped to 0")
        s2 = 0.0
    return RegFit(alpha, beta, float(np.sqrt(s2)), getattr(model, "method", "unknown"),
                  intercept, tuple(notes), model)


def ar_design(y, p, missing=None):
    """Lagged design matrix of an AR(p) series.

    Row t (t = p+1..n, 1-based) is ``(y_{t-1}, ..., y_{t-p}, y_t)``; the last
    column is the response. Missing series values stay missing in every row
    they enter.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    p = int(p)
    if p < 1:
        raise CellwiseError("AR order must be at least 1")
    if n <= p:
        raise CellwiseError(f"series length {n} must exceed the order {p}")
    miss = np.isnan(y) if missing is None else (np.asarray(missing, bool) | np.isnan(y))
    cols = [np.arange(p - lag, n - lag) for lag in range(1, p + 1)] + [np.arange(p, n)]
    idx = np.column_stack(cols)
    names = [f"lag{lag}" for lag in range(1, p + 1)] + ["y"]
    rows = [f"t{t + 1}" for t in range(p, n)]
    return DataMatrix(y[idx], miss[idx], names, rows)


def contaminated_rows(series_mask, p):
    """Rows of the AR(p) design that contain at least one flagged series value."""
    mask = np.asarray(series_mask, dtype=bool)
    return ar_design(mask.astype(float), p).values.astype(bool).any(axis=1)


def fit_covariance(Z, cov="twostep", **options):
    if cov == "classical":
        return classical(Z)
    if cov == "twostep":
        return two_step_cov(Z, **options)
    if cov == "pairwise":
        return pairwise_cov(Z, **options)
    raise CellwiseError(f"unknown covariance method {cov!r}; choose from {COV_METHODS}")


def ar_fit(y, p, method="twostep", intercept=True, **options):
    """Fit AR(p) by plug-in regression on a covariance estimate of the lagged design."""
    Z = ar_design(y, p)
    model = fit_covariance(Z, method, **options)
    return plugin_regression(model, response_index=-1, intercept=intercept)


class PlugInRegressor(RegressorMixin, BaseEstimator):
    """Linear regression through a (robust) joint covariance estimate.

    Parameters
    ----------
    cov : {"twostep", "pairwise", "classical"}
    fit_intercept : bool

    Attributes
    ----------
    coef_, intercept_, scale_ : fitted slopes, intercept and residual scale
    fit_ : RegFit
    """

    def __init__(self, cov="twostep", fit_intercept=True):
        self.cov = cov
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        Xd = as_data_matrix(X)
        y = np.asarray(y, dtype=float).ravel()
        if y.shape[0] != Xd.n:
            raise CellwiseError(f"X has {Xd.n} rows but y has {y.shape[0]} values")
        Z = DataMatrix(np.column_stack([Xd.values, y]),
                       np.column_stack([Xd.missing, np.isnan(y)]),
                       list(Xd.col_names) + ["y"])
        fit = plugin_regression(fit_covariance(Z, self.cov), -1, self.fit_intercept)
        for w in fit.warnings:
            warnings.warn(w, RuntimeWarning, stacklevel=2)
        self.fit_ = fit
        self.coef_ = fit.beta
        self.intercept_ = fit.alpha
        self.scale_ = fit.sigma_hat
        self.n_features_in_ = Xd.d
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        return check_finite_array(X) @ self.coef_ + self.intercept_
