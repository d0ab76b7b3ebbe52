"""Univariate robust location, scale and rank correlation."""

import enum
from math import comb

import numpy as np
from scipy import stats

from .exceptions import CellwiseError, DegenerateScaleError

__all__ = [
    "RobustScaleKind",
    "MAD_CONSTANT",
    "QN_CONSTANT",
    "median",
    "robust_scale",
    "mad",
    "qn",
    "univariate_mcd",
    "mcd_consistency",
    "spearman_corr",
    "robust_zscores",
    "spearman_matrix",
]

MAD_CONSTANT = 1.4826
QN_CONSTANT = 2.2219


class RobustScaleKind(str, enum.Enum):
    MAD = "mad"
    QN = "qn"


def _vector(x, min_len=1, what="input"):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] < min_len:
        raise CellwiseError(f"{what} needs at least {min_len} values, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise CellwiseError(f"{what} contains non-finite values; drop missing cells first")
    return x


def median(x):
    """Sample median; the average of the two middle order statistics for even length."""
    return float(np.median(_vector(x, 1, "median")))


def mad(x):
    x = _vector(x, 2, "MAD")
    return MAD_CONSTANT * float(np.median(np.abs(x - np.median(x))))


def qn(x):
    """Qn scale: the C(h,2)-th smallest pairwise distance, h = n//2 + 1.

    Plain O(n^2) enumeration; no small-sample correction.
    """
    x = np.sort(_vector(x, 2, "Qn"))
    n = x.shape[0]
    h = n // 2 + 1
    k = comb(h, 2)
    diffs = np.concatenate([x[i + 1:] - x[i] for i in range(n - 1)])
    return QN_CONSTANT * float(np.partition(diffs, k - 1)[k - 1])


def robust_scale(x, kind=RobustScaleKind.MAD):
    """MAD or Qn scale, both scaled for consistency at the normal distribution.

    Returns 0 for constant input; callers decide whether that is fatal.
    """
    kind = RobustScaleKind(kind)
    return mad(x) if kind is RobustScaleKind.MAD else qn(x)


def mcd_consistency(alpha):
    """Factor making the raw univariate MCD standard deviation consistent at N(0,1).

    The h = alpha*n central observations of a standard normal sample behave
    like a normal truncated to [-q, q] with q = Phi^{-1}((1 + alpha)/2), whose
    variance is 1 - 2 q phi(q) / alpha.
    """
    if not 0 < alpha <= 1:
        raise CellwiseError(f"coverage must lie in (0, 1], got {alpha}")
    if alpha == 1:
        return 1.0
    q = stats.norm.ppf((1 + alpha) / 2)
    return float(1.0 / np.sqrt(1 - 2 * q * stats.norm.pdf(q) / alpha))


def univariate_mcd(x, h=None):
    """Univariate MCD: the h observations with the smallest variance.

    The optimal subset is always a window of consecutive order statistics, so
    the search runs over the n - h + 1 sorted windows. Ties keep the leftmost
    window.

    Parameters
    ----------
    x : array_like
    h : int, optional
        Subset size in ``[n//2 + 1, n]``; defaults to ``n//2 + 1``.

    Returns
    -------
    location, scale : float
        Window mean, and window standard deviation (denominator h) times
        `mcd_consistency(h / n)`.
    """
    x = np.sort(_vector(x, 1, "univariate MCD"))
    n = x.shape[0]
    if h is None:
        h = n // 2 + 1
    h = int(h)
    if not n // 2 + 1 <= h <= n:
        raise CellwiseError(f"h={h} out of range [{n // 2 + 1}, {n}]")
    # center on the median so the running sums stay well conditioned
    c = x[(n - 1) // 2]
    y = x - c
    s1 = np.concatenate(([0.0], np.cumsum(y)))
    s2 = np.concatenate(([0.0], np.cumsum(y * y)))
    sums = s1[h:] - s1[:-h]
    sq = s2[h:] - s2[:-h]
    var = np.maximum(sq / h - (sums / h) ** 2, 0.0)
    # exact ties must survive rescaling, so compare up to rounding
    tol = 1e-12 * max(float(var.max()), float(np.abs(y).max()) ** 2)
    best = int(np.flatnonzero(var <= var.min() + tol)[0])
    window = x[best:best + h]
    loc = float(window.mean())
    sd = float(np.sqrt(np.mean((window - loc) ** 2)))
    return loc, sd * mcd_consistency(h / n)


def spearman_corr(x, y, return_flag=False):
    """Spearman rank correlation with average ranks for ties.

    A constant argument gives 0; with ``return_flag=True`` the result is
    ``(rho, degenerate)``.
    """
    x = _vector(x, 3, "Spearman")
    y = _vector(y, 3, "Spearman")
    if x.shape != y.shape:
        raise CellwiseError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    if denom == 0:
        return (0.0, True) if return_flag else 0.0
    rho = float(np.clip((rx @ ry) / denom, -1.0, 1.0))
    return (rho, False) if return_flag else rho


def robust_zscores(x, kind=RobustScaleKind.MAD, name=None):
    """``(x - median) / scale``; raises `DegenerateScaleError` when the scale is 0."""
    x = _vector(x, 2, "z-scores")
    s = robust_scale(x, kind)
    if s <= 0:
        raise DegenerateScaleError(name if name is not None else "x")
    return (x - np.median(x)) / s


def spearman_matrix(X, observed=None):
    """Spearman correlation matrix over pairwise-complete observations.

    Pairs with fewer than 3 common observations, or a constant column, get 0.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    if observed is None:
        observed = ~np.isnan(X)
    if observed.all():
        with np.errstate(invalid="ignore", divide="ignore"):
            R = np.atleast_2d(np.corrcoef(stats.rankdata(X, axis=0), rowvar=False))
        R = np.nan_to_num(R, nan=0.0)
        np.fill_diagonal(R, 1.0)
        return np.clip(R, -1.0, 1.0)
    R = np.eye(d)
    for j in range(d):
        for k in range(j + 1, d):
            both = observed[:, j] & observed[:, k]
            if both.sum() >= 3:
                R[j, k] = R[k, j] = spearman_corr(X[both, j], X[both, k])
    return R
