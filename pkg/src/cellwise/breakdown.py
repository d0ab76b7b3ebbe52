"""Cellwise breakdown: executable attacks and empirical breakdown curves.

Each attack replaces a single cell in (almost) every row so that all rows
land on one hyperplane that is not parallel to any coordinate axis:

* `hyperplane_attack_location` puts every row on ``sum(x) = c``; any
  location estimator with the exact-fit property must then return a point
  with coordinate sum ``c``, so letting ``c`` grow breaks it down.
* `implosion_attack` keeps row 1 and moves the other rows onto the
  hyperplane through it, making any covariance estimator with the
  exact-fit property singular.
* `regression_attack` keeps case 1 and moves the other cases onto
  ``y = alpha0 + beta0 * sum(x)``, so an exact-fit regression estimator
  returns the attacker's coefficients.

Target columns are assigned round-robin, which meets the per-column bounds
``ceil(n/d)``, ``ceil((n-1)/d)`` and ``ceil((n-1)/(p+1))`` with equality.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _svg
from .estimate import LOCATION_ESTIMATORS, spatial_median
from .exceptions import CellwiseError, ConvergenceError
from .io import atomic_write
from .matrix import DataMatrix
from .validation import as_data_matrix, check_complete

__all__ = [
    "AttackResult",
    "contamination_probability",
    "hyperplane_attack_location",
    "implosion_attack",
    "regression_attack",
    "spread_placement",
    "contaminate",
    "empirical_breakdown",
    "breakdown_curve",
    "BreakdownCurve",
    "curve_svg",
    "THREADS_ENV",
]

THREADS_ENV = "CELLWISE_THREADS"


@dataclass(frozen=True, eq=False)
class AttackResult:
    contaminated: DataMatrix
    replaced: np.ndarray
    per_column_count: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def m(self):
        """Largest number of replaced cells in any column."""
        return int(self.per_column_count.max()) if self.per_column_count.size else 0


def contamination_probability(eps, d):
    """Probability that a row of d independently contaminated cells has at least one outlier."""
    if not 0 <= eps <= 1:
        raise CellwiseError(f"eps must lie in [0, 1], got {eps}")
    if int(d) != d or d < 1:
        raise CellwiseError(f"d must be a positive integer, got {d}")
    return 1.0 - (1.0 - eps) ** int(d)


def _result(X, dm, replaced, params):
    return AttackResult(DataMatrix(X, None, dm.col_names, dm.row_names), replaced,
                        replaced.sum(axis=0), params)


def hyperplane_attack_location(X, c):
    """Move every row onto ``sum(x) = c`` by replacing one cell per row.

    Row i (0-based) has its cell in column ``i mod d`` replaced. ``c`` must
    exceed every row sum of the clean data.
    """
    dm = as_data_matrix(X)
    A = check_complete(dm, "hyperplane attack").copy()
    n, d = A.shape
    if n < d:
        raise CellwiseError(f"location attack needs n >= d, got n={n}, d={d}")
    sums = A.sum(axis=1)
    if not c > sums.max():
        raise CellwiseError(f"c={c} must exceed the largest row sum {sums.max():.6g}")
    replaced = np.zeros((n, d), bool)
    for i in range(n):
        j = i % d
        A[i, j] = c - (sums[i] - A[i, j])
        replaced[i, j] = True
    return _result(A, dm, replaced, {"kind": "location", "c": float(c)})


def implosion_attack(X):
    """Move rows 2..n onto the hyperplane ``sum(x) = sum(x_1)`` through row 1.

    With n <= d the data already lie in an affine subspace, so no cell is
    replaced (``params["m"] == 0``).
    """
    dm = as_data_matrix(X)
    A = check_complete(dm, "implosion attack").copy()
    n, d = A.shape
    replaced = np.zeros((n, d), bool)
    if n <= d:
        return _result(A, dm, replaced, {"kind": "implosion", "m": 0,
                                         "note": "n <= d: data already degenerate"})
    c0 = A[0].sum()
    for i in range(1, n):
        j = (i - 1) % d
        A[i, j] = c0 - (A[i].sum() - A[i, j])
        replaced[i, j] = True
    return _result(A, dm, replaced, {"kind": "implosion", "c": float(c0)})


def regression_attack(Z, beta0):
    """Put cases 2..n on ``y = alpha0 + beta0 * (x_1 + ... + x_p)``.

    ``Z`` has the p covariates first and the response last. ``alpha0`` is
    chosen so case 1 lies on the hyperplane. Case i (0-based, i >= 1) has
    column ``(i - 1) mod (p + 1)`` replaced, which is a covariate or the
    response.
    """
    dm = as_data_matrix(Z, min_cols=2)
    A = check_complete(dm, "regression attack").copy()
    n, q = A.shape
    p = q - 1
    if n <= q:
        raise CellwiseError(f"regression attack needs n > p + 1, got n={n}, p={p}")
    if beta0 == 0:
        raise CellwiseError("beta0 must be nonzero")
    alpha0 = A[0, p] - beta0 * A[0, :p].sum()
    replaced = np.zeros((n, q), bool)
    for i in range(1, n):
        j = (i - 1) % q
        if j == p:
            A[i, p] = alpha0 + beta0 * A[i, :p].sum()
        else:
            others = A[i, :p].sum() - A[i, j]
            A[i, j] = (A[i, p] - alpha0) / beta0 - others
        replaced[i, j] = True
    gamma0 = np.concatenate(([alpha0], np.full(p, float(beta0))))
    return _result(A, dm, replaced, {"kind": "regression", "beta0": float(beta0),
                                     "alpha0": float(alpha0), "gamma0": gamma0})


def spread_placement(n, d, k):
    """Boolean n x d mask with k outlying cells per column, spread over rows.

    Cell i (0-based) of column j goes to row ``(j*k + i) mod n``; for
    ``k <= n/d`` no row receives more than one outlying cell.
    """
    mask = np.zeros((n, d), bool)
    if k <= 0:
        return mask
    if k > n:
        raise CellwiseError(f"k={k} exceeds n={n}")
    for j in range(d):
        mask[(j * k + np.arange(k)) % n, j] = True
    return mask


def contaminate(X, k, value):
    A = np.array(X, dtype=float, copy=True)
    A[spread_placement(A.shape[0], A.shape[1], k)] = value
    return A


def _spatial_median_last_iterate(A):
    # at k = n/2 the optimum can be a whole segment; the last iterate is on it
    try:
        return spatial_median(A)
    except ConvergenceError as err:
        return err.last


_HARNESS_ESTIMATORS = dict(LOCATION_ESTIMATORS, spatial_median=_spatial_median_last_iterate)


def _estimator(est):
    if callable(est):
        return est
    try:
        return _HARNESS_ESTIMATORS[est]
    except KeyError:
        raise CellwiseError(f"unknown location estimator {est!r}") from None


def empirical_breakdown(estimator, X, value=500.0, threshold=100.0):
    """Smallest fraction k/n of spread-out cells per column with ``||mu_hat|| > threshold``.

    Contaminated cells all get ``value``. Returns 0.5 if the threshold is
    never exceeded for k <= n/2.
    """
    est = _estimator(estimator)
    A = check_complete(as_data_matrix(X), "empirical breakdown")
    n = A.shape[0]
    for k in range(1, n // 2 + 1):
        if np.linalg.norm(est(contaminate(A, k, value))) > threshold:
            return k / n
    return 0.5


@dataclass(frozen=True, eq=False)
class BreakdownCurve:
    """Mean norm of each estimator per number of outlying cells per column."""

    k: np.ndarray
    fraction: np.ndarray
    norms: dict
    n: int
    d: int
    value: float
    reps: int
    seed: int

    def to_csv(self):
        names = list(self.norms)
        lines = [",".join(["k", "percent"] + names)]
        for i, k in enumerate(self.k):
            vals = [repr(float(self.norms[nm][i])) for nm in names]
            lines.append(",".join([str(int(k)), repr(float(100 * self.fraction[i]))] + vals))
        return "\n".join(lines) + "\n"


def _n_threads(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def _one_replication(names, n, d, value, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    X = rng.standard_normal((n, d))
    ks = range(n // 2 + 1)
    out = np.empty((len(names), len(ks)))
    for ki, k in enumerate(ks):
        Xk = contaminate(X, k, value)
        for e, nm in enumerate(names):
            out[e, ki] = np.linalg.norm(_HARNESS_ESTIMATORS[nm](Xk))
    return out


def breakdown_curve(estimators=("mean", "spatial_median", "coordwise_median", "coordwise_mcd"),
                    n=100, d=4, value=500.0, reps=200, seed=0, threads=None):
    """Empirical cellwise breakdown curves.

    Replication r draws an n x d standard normal sample from PCG64 seeded
    with ``seed + r``. For k = 0..n/2 outlying cells per column (placed by
    `spread_placement`, all equal to ``value``) the Euclidean norm of each
    estimate is recorded; the curve is the mean over replications.
    Replications may run on several threads (``threads`` or the
    ``CELLWISE_THREADS`` environment variable); the result does not depend
    on scheduling.
    """
    names = list(estimators)
    for nm in names:
        _estimator(nm)
    seeds = [int(seed) + r for r in range(reps)]
    workers = _n_threads(threads)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda s: _one_replication(names, n, d, value, s), seeds))
    else:
        results = [_one_replication(names, n, d, value, s) for s in seeds]
    total = np.zeros_like(results[0])
    for r in results:
        total += r
    mean = total / reps
    ks = np.arange(n // 2 + 1)
    return BreakdownCurve(ks, ks / n, {nm: mean[e] for e, nm in enumerate(names)},
                          n, d, float(value), reps, int(seed))


_PALETTE = ("#D62728", "#1F77B4", "#2CA02C", "#9467BD", "#FF7F0E", "#8C564B")


def curve_svg(curve, path=None, width=560, height=400):
    """Line plot of a `BreakdownCurve` (x: percent contaminated per column)."""
    left, right, top, bottom = 60, 150, 20, 50
    pw, ph = width - left - right, height - top - bottom
    ymax = max(float(np.max(v)) for v in curve.norms.values())
    ymax = ymax if ymax > 0 else 1.0
    xmax = 50.0

    def sx(pct):
        return left + pw * pct / xmax

    def sy(v):
        return top + ph * (1 - v / ymax)

    c = _svg.Canvas(width, height)
    c.rect(left, top, pw, ph, "#FFFFFF", stroke="#000000")
    for t in range(0, 51, 10):
        c.line(sx(t), top + ph, sx(t), top + ph + 4)
        c.text(sx(t), top + ph + 16, str(t), anchor="middle")
    for i in range(5):
        v = ymax * i / 4
        c.line(left - 4, sy(v), left, sy(v))
        c.text(left - 6, sy(v) + 3, f"{v:.0f}", anchor="end")
    c.text(left + pw / 2, height - 10, "% contaminated cells per column", anchor="middle")
    c.text(14, top + ph / 2, "norm of estimate", anchor="middle", rotate=-90)
    pct = 100 * curve.fraction
    for e, (name, vals) in enumerate(curve.norms.items()):
        colour = _PALETTE[e % len(_PALETTE)]
        pts = [(sx(x), sy(min(v, ymax))) for x, v in zip(pct, vals)]
        c.polyline(pts, colour)
        ly = top + 14 + 16 * e
        c.line(left + pw + 10, ly - 4, left + pw + 30, ly - 4, stroke=colour, width=2)
        c.text(left + pw + 34, ly, name)
    svg = c.render()
    if path is not None:
        atomic_write(path, svg)
    return svg
