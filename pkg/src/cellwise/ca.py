"""Classical and cellwise robust correspondence analysis.

The robust variant treats the matrix S of weighted centered row profiles as
continuous data and replaces its SVD by a zero-center robust PCA: cells of S
are flagged with DDC-lite, imputed, and re-flagged against the rank-k fit
until the flagged set settles. Singular values are recovered as
``sqrt(n * eigenvalue)`` and left vectors as ``scores / singular value``.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import _svg
from .detect import DEFAULT_CUTOFF, CellFlags, _make_flags, ddc
from .exceptions import CellwiseError
from .io import atomic_write
from .matrix import fix_signs, principal_angle, svd
from .univariate import MAD_CONSTANT

__all__ = [
    "ContingencyTable",
    "CASolution",
    "profile_matrix",
    "classical_ca",
    "choose_k",
    "robust_pca_zero_center",
    "RobustPCAResult",
    "robust_ca",
    "biplot",
    "chi_square_statistic",
    "CorrespondenceAnalysis",
]

EXPLAINED_SHARE = 0.80


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    counts: np.ndarray
    row_names: tuple = None
    col_names: tuple = None

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float, copy=True)
        if counts.ndim != 2 or counts.size == 0:
            raise CellwiseError(f"contingency table must be a non-empty 2-D array, got {counts.shape}")
        if not np.isfinite(counts).all():
            raise CellwiseError("contingency table has missing or non-finite counts")
        if (counts < 0).any():
            raise CellwiseError("contingency table has negative counts")
        n, d = counts.shape
        rows = tuple(self.row_names) if self.row_names is not None else tuple(
            str(i + 1) for i in range(n))
        cols = tuple(self.col_names) if self.col_names is not None else tuple(
            f"V{j + 1}" for j in range(d))
        if len(rows) != n or len(cols) != d:
            raise CellwiseError("row/column names do not match the table shape")
        for i in np.nonzero(counts.sum(axis=1) == 0)[0]:
            raise CellwiseError(f"row {rows[i]!r} has zero total")
        for j in np.nonzero(counts.sum(axis=0) == 0)[0]:
            raise CellwiseError(f"column {cols[j]!r} has zero total")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "row_names", rows)
        object.__setattr__(self, "col_names", cols)

    @classmethod
    def from_datamatrix(cls, dm):
        if dm.missing.any():
            raise CellwiseError("contingency table has missing counts")
        return cls(dm.values, dm.row_names, dm.col_names)

    @property
    def shape(self):
        return self.counts.shape

    @property
    def total(self):
        return float(self.counts.sum())


def _as_table(T):
    return T if isinstance(T, ContingencyTable) else ContingencyTable(T)


def profile_matrix(T):
    """Weighted centered row profiles.

    Returns
    -------
    S : ndarray (n, d)
        ``D_r^{1/2} (R - 1 c^T) D_c^{-1/2}`` with ``R = D_r^{-1} P``.
    r, c : ndarray
        Row and column masses of ``P = counts / N``.
    """
    T = _as_table(T)
    P = T.counts / T.total
    r = P.sum(axis=1)
    c = P.sum(axis=0)
    R = P / r[:, None]
    S = np.sqrt(r)[:, None] * (R - c[None, :]) / np.sqrt(c)[None, :]
    return S, r, c


def chi_square_statistic(T):
    """Pearson chi-square statistic of independence."""
    T = _as_table(T)
    E = np.outer(T.counts.sum(axis=1), T.counts.sum(axis=0)) / T.total
    return float(((T.counts - E) ** 2 / E).sum())


@dataclass(frozen=True, eq=False)
class CASolution:
    S: np.ndarray
    U: np.ndarray
    gamma: np.ndarray
    V: np.ndarray
    row_pc: np.ndarray
    col_pc: np.ndarray
    k: int
    r: np.ndarray
    c: np.ndarray
    flags: CellFlags = None
    method: str = "classical"
    row_names: tuple = None
    col_names: tuple = None

    @property
    def inertia(self):
        return float(np.sum(self.gamma ** 2))


def _principal_coordinates(U, gamma, V, r, c):
    row_pc = (U * gamma) / np.sqrt(r)[:, None]
    col_pc = (V * gamma) / np.sqrt(c)[:, None]
    return row_pc, col_pc


def choose_k(singular_values, share=EXPLAINED_SHARE):
    """Smallest k whose leading squared singular values explain at least ``share``."""
    g2 = np.asarray(singular_values, dtype=float) ** 2
    total = g2.sum()
    if total <= 0:
        raise CellwiseError("all singular values are zero; cannot choose k")
    cum = np.cumsum(g2) / total
    return int(np.searchsorted(cum, share - 1e-12) + 1)


def _max_k(shape):
    return max(min(shape) - 1, 1)


def classical_ca(T, k=2):
    """Correspondence analysis by SVD of the profile matrix.

    ``k`` may be an int up to ``min(n, d) - 1`` (the rank bound of S) or
    "auto" for the 80% explained-inertia rule.
    """
    T = _as_table(T)
    S, r, c = profile_matrix(T)
    kmax = _max_k(S.shape)
    res = svd(S)
    if k == "auto":
        k = min(choose_k(res.singular_values), kmax)
    k = int(k)
    if not 1 <= k <= kmax:
        raise CellwiseError(f"k={k} exceeds the rank bound {kmax} of the profile matrix")
    U, gamma, V = res.U[:, :k], res.singular_values[:k], res.V[:, :k]
    row_pc, col_pc = _principal_coordinates(U, gamma, V, r, c)
    return CASolution(S, U, gamma, V, row_pc, col_pc, k, r, c, None, "classical",
                      T.row_names, T.col_names)


@dataclass(frozen=True, eq=False)
class RobustPCAResult:
    scores: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    flags: CellFlags
    cleaned: np.ndarray
    n_iter: int
    converged: bool


def _residual_flags(S, fit, cutoff):
    res = S - fit
    scale = MAD_CONSTANT * np.median(np.abs(res - np.median(res, axis=0)), axis=0)
    # exact-fit columns: only residuals well above rounding level count
    floor = 1e-8 * max(float(np.abs(S).max()), 1e-300)
    scale = np.maximum(scale, floor)
    stdres = res / scale
    return _make_flags(stdres, fit, np.ones(S.shape, bool), cutoff, "robust-pca")


def robust_pca_zero_center(S, k="auto", cutoff=DEFAULT_CUTOFF, max_iter=20):
    """Cellwise robust PCA with the center fixed at zero.

    1. Flag cells of S with DDC-lite; replace them by the DDC predictions.
    2. SVD of the cleaned matrix; ``k="auto"`` keeps the smallest k
       explaining at least 80% of the squared singular values.
    3. Repeat: rank-k fit of the cleaned matrix, residuals of the original S
       against it, per-column MAD standardization, re-flag beyond
       ``cutoff``, re-impute flagged cells with the fit, new SVD.
    4. Stop when the flagged set repeats, the largest principal angle
       between successive loading subspaces is below 1e-8, or after
       ``max_iter`` rounds.

    Unflagged cells of S are never altered. Eigenvalues are ``gamma^2 / n``
    and scores are ``U gamma`` of the final cleaned matrix.
    """
    S = np.asarray(S, dtype=float)
    n, d = S.shape
    first = ddc(S, cutoff=cutoff)
    cleaned = np.where(first.flags, first.predicted, S)
    res = svd(cleaned)
    if k == "auto":
        k = choose_k(res.singular_values)
    k = int(k)
    if not 1 <= k < n:
        raise CellwiseError(f"need 1 <= k < n, got k={k}, n={n}")
    if k > int(np.sum(res.singular_values > 1e-12 * max(res.singular_values[0], 1e-300))):
        raise CellwiseError(f"k={k} exceeds the rank of the cleaned matrix")

    flagged = first.flags
    flags = first
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        fit = (res.U[:, :k] * res.singular_values[:k]) @ res.V[:, :k].T
        flags = _residual_flags(S, fit, cutoff)
        cleaned = np.where(flags.flags, fit, S)
        V_old = res.V[:, :k]
        res = svd(cleaned)
        same = np.array_equal(flags.flags, flagged)
        flagged = flags.flags
        if same or principal_angle(V_old, res.V[:, :k]) < 1e-8:
            converged = True
            break

    U, V = fix_signs(res.U[:, :k], res.V[:, :k])
    gamma = res.singular_values[:k]
    return RobustPCAResult(U * gamma, V, gamma ** 2 / n, flags, cleaned, it, converged)


def robust_ca(T, k="auto", cutoff=DEFAULT_CUTOFF, max_iter=20):
    """Cellwise robust correspondence analysis."""
    T = _as_table(T)
    S, r, c = profile_matrix(T)
    kmax = _max_k(S.shape)
    if k != "auto" and not 1 <= int(k) <= kmax:
        raise CellwiseError(f"k={k} exceeds the rank bound {kmax} of the profile matrix")
    pca = robust_pca_zero_center(S, k, cutoff, max_iter)
    n = S.shape[0]
    gamma = np.sqrt(n * pca.eigenvalues)
    if (gamma <= 0).any():
        raise CellwiseError("zero eigenvalue among the retained components")
    U = pca.scores / gamma
    row_pc, col_pc = _principal_coordinates(U, gamma, pca.loadings, r, c)
    return CASolution(S, U, gamma, pca.loadings, row_pc, col_pc, len(gamma), r, c, pca.flags,
                      "robust", T.row_names, T.col_names)


def _nice_limit(v):
    if v <= 0:
        return 1.0
    mag = 10 ** math.floor(math.log10(v))
    for m in (1, 2, 2.5, 5, 10):
        if v <= m * mag:
            return m * mag
    return 10 * mag


def biplot(sol, path=None, size=480):
    """CA biplot of the first two principal coordinates as SVG.

    Rows are labelled points; columns are labelled arrows from the origin.
    """
    if sol.k < 2:
        raise CellwiseError("biplot needs at least two components")
    rows, cols = sol.row_pc[:, :2], sol.col_pc[:, :2]
    # the floor keeps roundoff-sized coordinates at the origin
    lim = _nice_limit(max(float(max(np.abs(rows).max(), np.abs(cols).max())) * 1.1, 1e-9))
    margin = 50
    plot = size - 2 * margin
    row_names = sol.row_names or tuple(str(i + 1) for i in range(rows.shape[0]))
    col_names = sol.col_names or tuple(f"V{j + 1}" for j in range(cols.shape[0]))

    def sx(v):
        return margin + plot * (v + lim) / (2 * lim)

    def sy(v):
        return margin + plot * (lim - v) / (2 * lim)

    c = _svg.Canvas(size, size)
    c.rect(margin, margin, plot, plot, "#FFFFFF", stroke="#000000")
    c.line(sx(-lim), sy(0), sx(lim), sy(0), stroke="#A0A0A0", dash="3,3")
    c.line(sx(0), sy(-lim), sx(0), sy(lim), stroke="#A0A0A0", dash="3,3")
    for t in (-lim, -lim / 2, 0.0, lim / 2, lim):
        c.text(sx(t), margin + plot + 14, f"{t:.3g}", size=9, anchor="middle")
        c.text(margin - 4, sy(t) + 3, f"{t:.3g}", size=9, anchor="end")
    share = sol.gamma[:2] ** 2 / max(sol.inertia, 1e-300)
    c.text(size / 2, size - 10, f"Dim 1 ({100 * share[0]:.1f}%)", anchor="middle")
    c.text(14, size / 2, f"Dim 2 ({100 * share[1]:.1f}%)", anchor="middle", rotate=-90)
    for (x, y), name in zip(cols, col_names):
        c.line(sx(0), sy(0), sx(x), sy(y), stroke="#B22222", width=1.2, marker="arrow")
        c.text(sx(x) + 4, sy(y) - 4, name, fill="#B22222")
    for (x, y), name in zip(rows, row_names):
        c.circle(sx(x), sy(y), 2.5, "#1F3A93")
        c.text(sx(x) + 4, sy(y) + 10, name, size=9, fill="#1F3A93")
    svg = c.render(_svg.ARROW_DEFS)
    if path is not None:
        atomic_write(path, svg)
    return svg


class CorrespondenceAnalysis(BaseEstimator):
    """Correspondence analysis estimator.

    Parameters
    ----------
    method : {"classical", "robust"}
    n_components : int or "auto"
    cutoff : float
        Cell flagging cutoff of the robust method.

    Attributes
    ----------
    solution_ : CASolution
    row_coordinates_, column_coordinates_ : principal coordinates
    singular_values_ : ndarray
    """

    def __init__(self, method="classical", n_components=2, cutoff=DEFAULT_CUTOFF):
        self.method = method
        self.n_components = n_components
        self.cutoff = cutoff

    def fit(self, X, y=None):
        T = X if isinstance(X, ContingencyTable) else ContingencyTable(np.asarray(X, dtype=float))
        if self.method == "classical":
            sol = classical_ca(T, self.n_components)
        elif self.method == "robust":
            sol = robust_ca(T, self.n_components, self.cutoff)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.solution_ = sol
        self.row_coordinates_ = sol.row_pc
        self.column_coordinates_ = sol.col_pc
        self.singular_values_ = sol.gamma
        self.n_features_in_ = T.shape[1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).row_coordinates_
