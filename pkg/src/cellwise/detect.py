"""Cellwise outlier detection: a marginal robust z-score filter and DDC-lite.

DDC-lite predicts every standardized cell from its most correlated columns
(weighted median of the simple-regression predictions), then flags cells
whose standardized residual exceeds the cutoff. It keeps the principle of
DetectDeviatingCells but skips its deshrinkage and bias-correction steps.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _svg
from .exceptions import CellwiseError, DegenerateScaleError
from .io import atomic_write
from .univariate import MAD_CONSTANT, RobustScaleKind, robust_scale, spearman_matrix
from .validation import as_data_matrix

__all__ = [
    "DEFAULT_CUTOFF",
    "ROW_FLAG_FRACTION",
    "CellFlags",
    "flag_univariate",
    "ddc",
    "cellmap",
    "CellFlagger",
]

#: sqrt of the 0.99 quantile of chi-square with 1 degree of freedom
DEFAULT_CUTOFF = float(np.sqrt(stats.chi2.ppf(0.99, 1)))
ROW_FLAG_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class CellFlags:
    """Flagged cells with their standardized residuals and predictions.

    ``stdres`` and ``predicted`` are NaN in missing cells, which are never
    flagged.
    """

    flags: np.ndarray
    stdres: np.ndarray
    predicted: np.ndarray
    row_flags: np.ndarray
    cutoff: float
    method: str = ""

    @property
    def n_flagged(self):
        return int(self.flags.sum())

    @property
    def shape(self):
        return self.flags.shape


def _make_flags(stdres, predicted, observed, cutoff, method):
    flags = observed & (np.abs(np.nan_to_num(stdres, nan=0.0)) > cutoff)
    n_obs = observed.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(n_obs > 0, flags.sum(axis=1) / np.maximum(n_obs, 1), 0.0)
    stdres = np.where(observed, stdres, np.nan)
    predicted = np.where(observed, predicted, np.nan)
    return CellFlags(flags, stdres, predicted, frac > ROW_FLAG_FRACTION, float(cutoff), method)


def _column_location_scale(dm, kind=RobustScaleKind.MAD):
    med = np.empty(dm.d)
    scale = np.empty(dm.d)
    for j in range(dm.d):
        col = dm.column(j)
        if col.shape[0] < 2:
            raise CellwiseError(f"column {dm.col_names[j]!r} has fewer than 2 observed cells")
        med[j] = np.median(col)
        scale[j] = robust_scale(col, kind)
        if scale[j] <= 0:
            raise DegenerateScaleError(dm.col_names[j])
    return med, scale


def flag_univariate(X, cutoff=DEFAULT_CUTOFF, kind=RobustScaleKind.MAD):
    """Flag cells whose columnwise robust z-score exceeds ``cutoff`` in absolute value."""
    dm = as_data_matrix(X)
    med, scale = _column_location_scale(dm, kind)
    stdres = (dm.values - med) / scale
    predicted = np.broadcast_to(med, dm.shape)
    return _make_flags(stdres, predicted, dm.observed, cutoff, "univariate")


def _weighted_median_rows(P, w):
    """Row-wise weighted median of P (NaN entries carry no weight).

    Returns NaN for rows without any available entry.
    """
    n, m = P.shape
    avail = ~np.isnan(P)
    W = np.where(avail, w[None, :], 0.0)
    Pf = np.where(avail, P, np.inf)
    order = np.argsort(Pf, axis=1, kind="stable")
    Ps = np.take_along_axis(Pf, order, axis=1)
    Ws = np.take_along_axis(W, order, axis=1)
    cum = np.cumsum(Ws, axis=1)
    total = cum[:, -1]
    idx = np.argmax(cum >= 0.5 * total[:, None], axis=1)
    out = Ps[np.arange(n), idx]
    out[total <= 0] = np.nan
    return out


@dataclass(frozen=True, eq=False)
class _DDCParams:
    center: np.ndarray
    scale: np.ndarray
    corr: np.ndarray
    predictors: tuple  # per column: int array of retained predictor columns
    res_center: np.ndarray
    res_scale: np.ndarray
    col_names: tuple
    filter_cutoff: float = np.inf


def _ddc_predict_z(params, Z):
    n, d = Z.shape
    Zhat = np.zeros((n, d))
    for j in range(d):
        ks = params.predictors[j]
        if ks.size == 0:
            continue
        slopes = params.corr[j, ks]
        Zk = Z[:, ks]
        # marginally outlying predictor cells do not vote
        P = np.where(np.abs(Zk) > params.filter_cutoff, np.nan, Zk) * slopes
        wm = _weighted_median_rows(P, np.abs(slopes))
        Zhat[:, j] = np.nan_to_num(wm, nan=0.0)
    return Zhat


def _ddc_fit(dm, corr_threshold, max_predictors, filter_cutoff=DEFAULT_CUTOFF):
    if dm.n < 20 or dm.d < 2:
        raise CellwiseError(f"ddc needs n >= 20 and d >= 2, got n={dm.n}, d={dm.d}")
    center, scale = _column_location_scale(dm)
    Z = (dm.values - center) / scale
    R = spearman_matrix(Z, dm.observed)
    predictors = []
    for j in range(dm.d):
        cand = np.array([k for k in range(dm.d) if k != j and abs(R[j, k]) >= corr_threshold],
                        dtype=int)
        if cand.size:
            cand = cand[np.argsort(-np.abs(R[j, cand]), kind="stable")][:max_predictors]
        predictors.append(np.sort(cand))
    res_center = np.zeros(dm.d)
    res_scale = np.ones(dm.d)
    partial = _DDCParams(center, scale, R, tuple(predictors), res_center, res_scale, dm.col_names,
                         float(filter_cutoff))
    res = Z - _ddc_predict_z(partial, Z)
    for j in range(dm.d):
        if predictors[j].size == 0:
            continue
        r = res[dm.observed[:, j], j]
        res_center[j] = np.median(r)
        res_scale[j] = MAD_CONSTANT * np.median(np.abs(r - res_center[j]))
        if res_scale[j] <= 0:
            raise DegenerateScaleError(dm.col_names[j], f"column {dm.col_names[j]!r} has zero "
                                       "robust scale of its DDC residuals")
    return partial


def _ddc_apply(params, dm, cutoff):
    Z = (dm.values - params.center) / params.scale
    Zhat = _ddc_predict_z(params, Z)
    stdres = np.empty(dm.shape)
    for j in range(dm.d):
        if params.predictors[j].size == 0:
            # no usable predictor: the cell residual is the marginal z-score itself
            stdres[:, j] = Z[:, j]
        else:
            stdres[:, j] = (Z[:, j] - Zhat[:, j] - params.res_center[j]) / params.res_scale[j]
    predicted = params.center + params.scale * Zhat
    return _make_flags(stdres, predicted, dm.observed, cutoff, "ddc")


def ddc(X, corr_threshold=0.5, cutoff=DEFAULT_CUTOFF, max_predictors=10):
    """DDC-lite cell detector.

    1. Standardize each column by median and MAD.
    2. For each column keep up to ``max_predictors`` other columns whose
       Spearman correlation with it is at least ``corr_threshold`` in absolute
       value.
    3. Predict each standardized cell as the |r|-weighted median of
       ``r * z_ik`` over the retained columns. Predictor cells with
       ``|z_ik| > cutoff`` are left out; with nothing left the prediction
       is 0.
    4. Standardize the residuals by their columnwise median and MAD and flag
       those beyond ``cutoff``.

    Predictions are returned in the original units. A row is flagged when
    more than half of its observed cells are flagged.
    """
    dm = as_data_matrix(X)
    if max_predictors < 1:
        raise CellwiseError("max_predictors must be at least 1")
    params = _ddc_fit(dm, corr_threshold, max_predictors, cutoff)
    return _ddc_apply(params, dm, cutoff)


# cellmap colours
_YELLOW = "#FFFF00"
_WHITE = "#FFFFFF"
_SATURATION = 10.0


def _blend(light, dark, t):
    return "#" + "".join(f"{int(round(a + (b - a) * t)):02X}" for a, b in zip(light, dark))


def cell_colour(stdres, cutoff, missing=False):
    """Colour of one cellmap tile.

    Yellow within the cutoff, white when missing. Beyond the cutoff the
    colour runs from a light to a full red (positive residual) or blue
    (negative), reaching full intensity at |stdres| = 10.
    """
    if missing or np.isnan(stdres):
        return _WHITE
    a = abs(stdres)
    if a <= cutoff:
        return _YELLOW
    span = max(_SATURATION - cutoff, 1e-12)
    t = min((a - cutoff) / span, 1.0)
    if stdres > 0:
        return _blend((255, 204, 204), (204, 0, 0), t)
    return _blend((204, 204, 255), (0, 0, 204), t)


def cellmap(flags, row_names=None, col_names=None, path=None, cell=18):
    """Render a cellmap of standardized residuals as SVG.

    Returns the SVG text; also writes it atomically when ``path`` is given.
    """
    n, d = flags.stdres.shape
    row_names = list(row_names) if row_names is not None else [str(i + 1) for i in range(n)]
    col_names = list(col_names) if col_names is not None else [f"V{j + 1}" for j in range(d)]
    if len(row_names) != n or len(col_names) != d:
        raise CellwiseError(
            f"cellmap names do not match a {n}x{d} flags object "
            f"({len(row_names)} row names, {len(col_names)} column names)"
        )
    left = 10 + 7 * max(len(s) for s in row_names)
    top = 10 + 7 * max(len(s) for s in col_names)
    canvas = _svg.Canvas(left + d * cell + 10, top + n * cell + 10)
    for j, name in enumerate(col_names):
        x = left + (j + 0.5) * cell
        canvas.text(x + 3, top - 4, name, size=10, rotate=-90)
    for i, name in enumerate(row_names):
        y = top + (i + 0.5) * cell + 3
        canvas.text(left - 4, y, name, size=10, anchor="end")
        for j in range(d):
            colour = cell_colour(flags.stdres[i, j], flags.cutoff)
            canvas.rect(left + j * cell, top + i * cell, cell, cell, colour, stroke="#808080")
    svg = canvas.render()
    if path is not None:
        atomic_write(path, svg)
    return svg


class CellFlagger(TransformerMixin, BaseEstimator):
    """Estimator wrapper around `flag_univariate` and `ddc`.

    ``fit`` learns column centers and scales (and, for DDC, the predictor
    structure and residual scales). ``transform`` returns the data with the
    cells it flags set to NaN, ready for a missing-data estimator.

    Parameters
    ----------
    method : {"ddc", "univariate"}
    cutoff : float
    corr_threshold : float
        DDC only.
    max_predictors : int
        DDC only.
    """

    def __init__(self, method="ddc", cutoff=DEFAULT_CUTOFF, corr_threshold=0.5, max_predictors=10):
        self.method = method
        self.cutoff = cutoff
        self.corr_threshold = corr_threshold
        self.max_predictors = max_predictors

    def fit(self, X, y=None):
        dm = as_data_matrix(X)
        if self.method == "ddc":
            self.params_ = _ddc_fit(dm, self.corr_threshold, self.max_predictors, self.cutoff)
            self.flags_ = _ddc_apply(self.params_, dm, self.cutoff)
        elif self.method == "univariate":
            center, scale = _column_location_scale(dm)
            self.params_ = (center, scale)
            self.flags_ = flag_univariate(dm, self.cutoff)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.n_features_in_ = dm.d
        return self

    def flag(self, X):
        """Flag the cells of new data with the fitted parameters."""
        check_is_fitted(self, "params_")
        dm = as_data_matrix(X)
        if dm.d != self.n_features_in_:
            raise CellwiseError(f"expected {self.n_features_in_} columns, got {dm.d}")
        if self.method == "ddc":
            return _ddc_apply(self.params_, dm, self.cutoff)
        center, scale = self.params_
        stdres = (dm.values - center) / scale
        return _make_flags(stdres, np.broadcast_to(center, dm.shape), dm.observed,
                           self.cutoff, "univariate")

    def transform(self, X):
        flags = self.flag(X)
        out = as_data_matrix(X).to_array()
        out[flags.flags] = np.nan
        return out

    def impute(self, X):
        """Replace flagged and missing cells by their predicted values."""
        flags = self.flag(X)
        dm = as_data_matrix(X)
        if self.method == "ddc":
            p = self.params_
            Zhat = _ddc_predict_z(p, (dm.values - p.center) / p.scale)
            predicted = p.center + p.scale * Zhat
        else:
            predicted = np.broadcast_to(self.params_[0], dm.shape)
        out = dm.to_array()
        replace = flags.flags | dm.missing
        out[replace] = predicted[replace]
        return out
