"""Location and covariance estimation, classical and cellwise robust.

The two-step estimator flags outlying cells, sets them missing, and then
computes the Gaussian maximum likelihood estimate of the incomplete data by
EM. The pairwise estimator combines robust scales with rank correlations
and repairs the result to be positive definite.
"""

import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .detect import DEFAULT_CUTOFF, ddc, flag_univariate
from .exceptions import CellwiseError, ConvergenceError, DegenerateScaleError
from .matrix import CovModel, mahalanobis_sq, psd_repair
from .univariate import RobustScaleKind, robust_scale, spearman_matrix, univariate_mcd
from .validation import as_data_matrix, check_complete

__all__ = [
    "CovModel",
    "coordwise_location",
    "spatial_median",
    "classical",
    "em_mle",
    "conditional_impute",
    "observed_loglik",
    "two_step_cov",
    "pairwise_cov",
    "pairwise_from_correlation",
    "LOCATION_ESTIMATORS",
    "location",
    "CellwiseCovariance",
]


def _resolve_h(h, n):
    if h is None:
        return n // 2 + 1
    if isinstance(h, float) and 0 < h <= 1:
        return max(n // 2 + 1, int(math.ceil(h * n)))
    return int(h)


def coordwise_location(X, kind="median", h=None):
    """Coordinatewise median or univariate MCD location; missing cells skipped.

    For ``kind="mcd"``, ``h`` is the subset size per column (an int, or a
    fraction of the column's observed count); it defaults to ``n//2 + 1``,
    the maximal-breakdown choice.
    """
    dm = as_data_matrix(X)
    out = np.empty(dm.d)
    for j in range(dm.d):
        col = dm.column(j)
        if col.shape[0] == 0:
            raise CellwiseError(f"column {dm.col_names[j]!r} has no observed cells")
        if kind == "median":
            out[j] = np.median(col)
        elif kind == "mcd":
            out[j] = univariate_mcd(col, _resolve_h(h, col.shape[0]))[0]
        else:
            raise CellwiseError(f"unknown coordinatewise location kind {kind!r}")
    return out


def spatial_median(X, tol=1e-9, max_iter=1000):
    """Spatial (L1) median by Weiszfeld iteration with the Vardi-Zhang step at data points.

    When the iterate sits on a data point (within 1e-12) the subgradient
    condition is checked and, if it fails, a damped step is taken. Iteration
    stops when the step norm drops below ``tol * (1 + ||m||)``.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations; ``err.last`` holds the last iterate.
    """
    dm = as_data_matrix(X)
    A = check_complete(dm, "spatial_median")
    if np.all(A == A[0]):
        return A[0].copy()
    y = np.median(A, axis=0)
    steps = []
    for _ in range(max_iter):
        diff = A - y
        dist = np.sqrt((diff * diff).sum(axis=1))
        at = dist < 1e-12
        inv = np.zeros_like(dist)
        inv[~at] = 1.0 / dist[~at]
        T = (inv @ A) / inv.sum()
        eta = int(at.sum())
        if eta:
            R = inv @ diff
            r = float(np.linalg.norm(R))
            if r <= eta:
                return y
            gamma = min(1.0, eta / r)
            y_new = (1.0 - gamma) * T + gamma * y
        else:
            y_new = T
        step = float(np.linalg.norm(y_new - y))
        steps.append(step)
        y = y_new
        if step < tol * (1.0 + float(np.linalg.norm(y))):
            return y
    raise ConvergenceError(f"spatial median did not converge in {max_iter} iterations",
                           last=y, trace=steps)


def classical(X):
    """Sample mean and covariance (denominator n - 1)."""
    dm = as_data_matrix(X)
    A = check_complete(dm, "classical")
    if dm.n < 2:
        raise CellwiseError("classical covariance needs n >= 2")
    mu = A.mean(axis=0)
    sigma = np.atleast_2d(np.cov(A, rowvar=False, ddof=1))
    return CovModel(mu, sigma, "classical", n_used=np.full(dm.d, dm.n), col_names=dm.col_names)


def _patterns(observed):
    uniq, inv = np.unique(observed, axis=0, return_inverse=True)
    return uniq, inv.ravel()


def conditional_impute(values, observed, mu, sigma, patterns=None):
    """Conditional Gaussian means in unobserved cells.

    Returns ``(xhat, C)`` where ``C`` is the summed conditional covariance of
    the missing parts (the correction term of the EM M-step).
    """
    n, d = values.shape
    xhat = np.where(observed, values, 0.0)
    C = np.zeros((d, d))
    uniq, inv = patterns if patterns is not None else _patterns(observed)
    for p, pat in enumerate(uniq):
        rows = np.nonzero(inv == p)[0]
        o = np.nonzero(pat)[0]
        m = np.nonzero(~pat)[0]
        if m.size == 0:
            continue
        if o.size == 0:
            xhat[np.ix_(rows, m)] = mu[m]
            C[np.ix_(m, m)] += rows.size * sigma[np.ix_(m, m)]
            continue
        Soo = sigma[np.ix_(o, o)]
        Smo = sigma[np.ix_(m, o)]
        B = np.linalg.solve(Soo, Smo.T).T
        xo = values[np.ix_(rows, o)] - mu[o]
        xhat[np.ix_(rows, m)] = mu[m] + xo @ B.T
        C[np.ix_(m, m)] += rows.size * (sigma[np.ix_(m, m)] - B @ Smo.T)
    return xhat, C


def observed_loglik(values, observed, mu, sigma, patterns=None):
    """Gaussian log-likelihood of the observed cells."""
    uniq, inv = patterns if patterns is not None else _patterns(observed)
    ll = 0.0
    for p, pat in enumerate(uniq):
        o = np.nonzero(pat)[0]
        if o.size == 0:
            continue
        rows = np.nonzero(inv == p)[0]
        L = np.linalg.cholesky(sigma[np.ix_(o, o)])
        z = np.linalg.solve(L, (values[np.ix_(rows, o)] - mu[o]).T)
        logdet = 2.0 * np.log(np.diag(L)).sum()
        ll -= 0.5 * (rows.size * (o.size * np.log(2 * np.pi) + logdet) + (z * z).sum())
    return float(ll)


def _repair(sigma, ridge):
    d = sigma.shape[0]
    floor = ridge * max(float(np.trace(sigma)), 0.0) / d
    floor = floor if floor > 0 else ridge
    return psd_repair((sigma + sigma.T) / 2, floor)


def em_mle(X, tol=1e-8, max_iter=200, ridge=1e-6):
    """Gaussian MLE for incomplete data by EM.

    Starts from the coordinatewise median and diag(MAD^2). Each iteration
    imputes conditional means (and conditional covariance corrections) per
    missingness pattern, then updates mu and sigma with denominator n. Stops
    when the observed-data log-likelihood increases by less than ``tol``.
    Sigma is shifted by a multiple of the identity whenever its smallest
    eigenvalue drops below ``ridge * trace(sigma) / d``.

    Returns
    -------
    CovModel
        ``loglik`` is the final observed log-likelihood, ``trace`` the
        per-iteration log-likelihoods, ``imputed`` the data with conditional
        means in the missing cells.
    """
    dm = as_data_matrix(X)
    obs = dm.observed
    for j in range(dm.d):
        if obs[:, j].sum() < 2:
            raise CellwiseError(f"column {dm.col_names[j]!r} has fewer than 2 observed cells")
    empty = np.nonzero(~obs.any(axis=1))[0]
    if empty.size:
        raise CellwiseError(f"rows without observed cells: {[dm.row_names[i] for i in empty[:5]]}")
    values = np.where(obs, dm.values, 0.0)
    n, d = dm.shape
    pats = _patterns(obs)

    mu = np.array([np.median(dm.column(j)) for j in range(d)])
    mad2 = np.array([robust_scale(dm.column(j)) ** 2 for j in range(d)])
    sigma = _repair(np.diag(mad2), ridge)

    notes = []
    trace = []
    for it in range(max_iter + 1):
        ll = observed_loglik(values, obs, mu, sigma, pats)
        if trace and ll < trace[-1] - 1e-9 * max(1.0, abs(trace[-1])):
            notes.append(f"log-likelihood decreased at iteration {it} "
                         f"({trace[-1]:.12g} -> {ll:.12g})")
        trace.append(ll)
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            break
        if it == max_iter:
            raise ConvergenceError(f"EM did not converge in {max_iter} iterations",
                                   last=(mu, sigma), trace=trace)
        xhat, C = conditional_impute(values, obs, mu, sigma, pats)
        mu = xhat.mean(axis=0)
        diff = xhat - mu
        sigma = _repair((diff.T @ diff + C) / n, ridge)

    xhat, _ = conditional_impute(values, obs, mu, sigma, pats)
    return CovModel(mu, sigma, "em", n_used=obs.sum(axis=0), loglik=trace[-1], imputed=xhat,
                    trace=trace, warnings=notes, col_names=dm.col_names)


def two_step_cov(X, detector="ddc", cutoff=DEFAULT_CUTOFF, **em_options):
    """Flag outlying cells, set them missing, then run `em_mle`.

    Rows left without any observed cell carry no likelihood information and
    are dropped before EM; their imputed values are the fitted mean.
    """
    dm = as_data_matrix(X)
    if detector == "ddc":
        flags = ddc(dm, cutoff=cutoff)
    elif detector == "univariate":
        flags = flag_univariate(dm, cutoff=cutoff)
    else:
        raise CellwiseError(f"unknown detector {detector!r}")
    filtered = dm.with_missing(flags.flags)
    for j in range(dm.d):
        if filtered.observed[:, j].sum() < 2:
            raise CellwiseError(f"flagging emptied column {dm.col_names[j]!r}")
    keep = filtered.observed.any(axis=1)
    sub = filtered if keep.all() else filtered.take_rows(keep)
    fit = em_mle(sub, **em_options)
    imputed, _ = conditional_impute(np.where(filtered.observed, filtered.values, 0.0),
                                    filtered.observed, fit.mu, fit.sigma)
    return CovModel(fit.mu, fit.sigma, f"twostep-{detector}", n_used=filtered.observed.sum(axis=0),
                    loglik=fit.loglik, imputed=imputed, flags=flags, trace=fit.trace,
                    warnings=fit.warnings, col_names=dm.col_names)


def pairwise_from_correlation(scales, corr, floor):
    """Assemble ``s_j s_l r_jl`` and shift it to have smallest eigenvalue >= floor."""
    scales = np.asarray(scales, dtype=float)
    R = np.array(corr, dtype=float, copy=True)
    np.fill_diagonal(R, 1.0)
    return psd_repair(np.outer(scales, scales) * R, floor)


def pairwise_cov(X, scale_kind=RobustScaleKind.MAD, floor=None):
    """Pairwise robust covariance from robust scales and Spearman correlations.

    Spearman's rho is mapped to ``2 sin(pi rho / 6)``, its Pearson
    counterpart under normality. The matrix is shifted by a multiple of the
    identity to have smallest eigenvalue at least ``floor`` (default
    ``1e-4 * median(scale)^2``). Location is the coordinatewise median.
    """
    dm = as_data_matrix(X, min_cols=2)
    scales = np.empty(dm.d)
    for j in range(dm.d):
        col = dm.column(j)
        if col.shape[0] < 2:
            raise CellwiseError(f"column {dm.col_names[j]!r} has fewer than 2 observed cells")
        scales[j] = robust_scale(col, scale_kind)
        if scales[j] <= 0:
            raise DegenerateScaleError(dm.col_names[j])
    rho = spearman_matrix(dm.values, dm.observed)
    R = 2.0 * np.sin(np.pi * rho / 6.0)
    if floor is None:
        floor = 1e-4 * float(np.median(scales)) ** 2
    sigma = pairwise_from_correlation(scales, R, floor)
    mu = coordwise_location(dm)
    return CovModel(mu, sigma, f"pairwise-{RobustScaleKind(scale_kind).value}",
                    n_used=dm.observed.sum(axis=0), col_names=dm.col_names)


def _mean(A):
    return np.asarray(A, dtype=float).mean(axis=0)


LOCATION_ESTIMATORS = {
    "mean": _mean,
    "spatial_median": spatial_median,
    "coordwise_median": lambda A: coordwise_location(A, "median"),
    "coordwise_mcd": lambda A: coordwise_location(A, "mcd"),
}


def location(X, method):
    """Dispatch to a named location estimator (keys of `LOCATION_ESTIMATORS`)."""
    try:
        return LOCATION_ESTIMATORS[method](X)
    except KeyError:
        raise CellwiseError(f"unknown location estimator {method!r}") from None


class CellwiseCovariance(BaseEstimator):
    """Location/covariance estimator with scikit-learn conventions.

    Parameters
    ----------
    method : {"twostep", "pairwise", "classical", "em"}
        ``twostep`` flags cells and runs EM on the rest; ``em`` treats only
        NaN cells as missing.
    detector : {"ddc", "univariate"}
        Cell detector for ``twostep``.
    cutoff : float
    scale : {"mad", "qn"}
        Robust scale for ``pairwise``.

    Attributes
    ----------
    location_, covariance_ : ndarray
    model_ : CovModel
    """

    def __init__(self, method="twostep", detector="ddc", cutoff=DEFAULT_CUTOFF, scale="mad"):
        self.method = method
        self.detector = detector
        self.cutoff = cutoff
        self.scale = scale

    def fit(self, X, y=None):
        dm = as_data_matrix(X)
        if self.method == "twostep":
            model = two_step_cov(dm, self.detector, self.cutoff)
        elif self.method == "pairwise":
            model = pairwise_cov(dm, self.scale)
        elif self.method == "classical":
            model = classical(dm)
        elif self.method == "em":
            model = em_mle(dm)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        for w in model.warnings:
            warnings.warn(w, RuntimeWarning, stacklevel=2)
        self.model_ = model
        self.location_ = np.asarray(model.mu)
        self.covariance_ = np.asarray(model.sigma)
        self.n_features_in_ = dm.d
        return self

    def mahalanobis(self, X):
        """Squared Mahalanobis distances of complete rows."""
        check_is_fitted(self, "model_")
        return np.atleast_1d(mahalanobis_sq(np.atleast_2d(np.asarray(X, float)), self.model_))
