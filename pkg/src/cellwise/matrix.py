"""Core data containers and dense linear-algebra kernels.

`DataMatrix` carries an explicit missingness mask; every routine in the
package consults the mask and never the number stored in a missing cell.
The SVD is a one-sided Jacobi (Hestenes) iteration on the triangular factor
of a QR decomposition, with a deterministic sign convention so that results
can be compared byte-for-byte across runs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .exceptions import CellwiseError, SingularMatrixError

__all__ = [
    "DataMatrix",
    "SVDResult",
    "CovModel",
    "svd",
    "fix_signs",
    "psd_repair",
    "mahalanobis_sq",
    "principal_angle",
]


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """An n x d real matrix with a per-cell missingness mask.

    Missing cells hold NaN in ``values`` so that accidental use is loud, but
    the mask is the source of truth.
    """

    values: np.ndarray
    missing: np.ndarray = None
    col_names: tuple = None
    row_names: tuple = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise CellwiseError(f"data matrix must be 2-D and non-empty, got shape {values.shape}")
        n, d = values.shape
        if self.missing is None:
            missing = np.isnan(values)
        else:
            missing = np.array(self.missing, dtype=bool, copy=True)
            if missing.shape != values.shape:
                raise CellwiseError(
                    f"missing mask shape {missing.shape} does not match values {values.shape}"
                )
            missing |= np.isnan(values)
        if np.isinf(values[~missing]).any():
            raise CellwiseError("data matrix contains infinite values")
        values[missing] = np.nan
        col_names = tuple(self.col_names) if self.col_names is not None else tuple(
            f"V{j + 1}" for j in range(d)
        )
        row_names = tuple(self.row_names) if self.row_names is not None else tuple(
            str(i + 1) for i in range(n)
        )
        if len(col_names) != d:
            raise CellwiseError(f"expected {d} column names, got {len(col_names)}")
        if len(row_names) != n:
            raise CellwiseError(f"expected {n} row names, got {len(row_names)}")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "missing", _readonly(missing))
        object.__setattr__(self, "col_names", tuple(str(c) for c in col_names))
        object.__setattr__(self, "row_names", tuple(str(r) for r in row_names))

    @property
    def shape(self):
        return self.values.shape

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    @property
    def observed(self):
        return ~self.missing

    @property
    def complete(self):
        """True when no cell is missing."""
        return not self.missing.any()

    def column(self, j):
        """Observed values of column ``j`` (missing cells dropped)."""
        return self.values[~self.missing[:, j], j]

    def to_array(self):
        """Writable float copy with NaN in missing cells."""
        return np.array(self.values, copy=True)

    def with_missing(self, mask):
        """Copy of this matrix with the cells in ``mask`` additionally set missing."""
        return DataMatrix(self.values, self.missing | np.asarray(mask, dtype=bool),
                          self.col_names, self.row_names)

    def with_values(self, values, missing=None):
        """Copy with new values (same names); missing defaults to NaN positions."""
        return DataMatrix(values, missing, self.col_names, self.row_names)

    def take_rows(self, rows):
        """Subset of rows (boolean mask or index array), names carried along."""
        rows = np.arange(self.n)[rows]
        return DataMatrix(self.values[rows], self.missing[rows], self.col_names,
                          [self.row_names[i] for i in rows])

    def __repr__(self):
        return (f"DataMatrix(n={self.n}, d={self.d}, "
                f"missing={int(self.missing.sum())}, cols={list(self.col_names)})")


@dataclass(frozen=True, eq=False)
class SVDResult:
    """Thin SVD ``M = U diag(singular_values) V^T``."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    @property
    def k(self):
        return self.singular_values.shape[0]

    def reconstruct(self):
        return (self.U * self.singular_values) @ self.V.T


@dataclass(frozen=True, eq=False)
class CovModel:
    """Location vector and scatter matrix with fit metadata.

    ``n_used`` counts the observed (unflagged, non-missing) cells per column
    that entered the fit. ``loglik`` is the Gaussian observed-data
    log-likelihood when the estimator is likelihood based.
    """

    mu: np.ndarray
    sigma: np.ndarray
    method: str
    n_used: np.ndarray = None
    loglik: float = None
    imputed: np.ndarray = None
    flags: object = None
    trace: tuple = ()
    warnings: tuple = ()
    col_names: tuple = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        sigma = np.asarray(self.sigma, dtype=float)
        d = mu.shape[0]
        if sigma.shape != (d, d):
            raise CellwiseError(f"sigma must be {d}x{d}, got {sigma.shape}")
        scale = max(1.0, float(np.abs(sigma).max()))
        if np.abs(sigma - sigma.T).max() > 1e-10 * scale:
            raise CellwiseError("sigma is not symmetric")
        object.__setattr__(self, "mu", _readonly(mu))
        object.__setattr__(self, "sigma", _readonly((sigma + sigma.T) / 2))
        if self.n_used is not None:
            object.__setattr__(self, "n_used", _readonly(np.asarray(self.n_used)))
        if self.imputed is not None:
            object.__setattr__(self, "imputed", _readonly(self.imputed))
        object.__setattr__(self, "trace", tuple(self.trace))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if self.col_names is None:
            object.__setattr__(self, "col_names", tuple(f"V{j + 1}" for j in range(d)))

    @property
    def d(self):
        return self.mu.shape[0]


def _as_finite_matrix(M):
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise CellwiseError(f"expected a 2-D matrix, got {A.ndim}-D input")
    if not np.isfinite(A).all():
        raise CellwiseError("matrix contains non-finite entries")
    return A


def _jacobi_square(R, max_sweeps=60):
    """One-sided Jacobi on a q x q matrix. Returns (W, V) with W = R V, W columns orthogonal."""
    W = np.array(R, dtype=float, copy=True)
    q = W.shape[1]
    V = np.eye(q)
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        rotated = False
        for i in range(q - 1):
            for j in range(i + 1, q):
                wi, wj = W[:, i], W[:, j]
                a = wi @ wi
                b = wj @ wj
                g = wi @ wj
                if g == 0.0 or abs(g) <= eps * np.sqrt(a * b):
                    continue
                rotated = True
                zeta = (b - a) / (2.0 * g)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                W[:, [i, j]] = np.column_stack((c * wi - s * wj, s * wi + c * wj))
                vi, vj = V[:, i].copy(), V[:, j].copy()
                V[:, i] = c * vi - s * vj
                V[:, j] = s * vi + c * vj
        if not rotated:
            break
    return W, V


def _complete_orthonormal(Q, total):
    """Extend the orthonormal columns of Q (m x r) to ``total`` columns."""
    m, r = Q.shape
    cols = [Q[:, i] for i in range(r)]
    for e in range(m):
        if len(cols) == total:
            break
        v = np.zeros(m)
        v[e] = 1.0
        for _ in range(2):
            for c in cols:
                v -= (c @ v) * c
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            cols.append(v / nv)
    return np.column_stack(cols) if cols else np.zeros((m, 0))


def fix_signs(U, V):
    """Flip column pairs so each column of V has its largest-magnitude entry positive."""
    U = np.array(U, dtype=float, copy=True)
    V = np.array(V, dtype=float, copy=True)
    for j in range(V.shape[1]):
        idx = int(np.argmax(np.abs(V[:, j])))
        if V[idx, j] < 0:
            V[:, j] = -V[:, j]
            U[:, j] = -U[:, j]
    return U, V


def svd(M, k="full"):
    """Thin singular value decomposition.

    Parameters
    ----------
    M : array_like of shape (n, d)
        Finite real matrix.
    k : int or "full", default="full"
        Number of leading components to keep; "full" keeps ``min(n, d)``.

    Returns
    -------
    SVDResult
        Singular values are nonincreasing. Each right singular vector has its
        largest-magnitude entry positive (ties go to the first index) and the
        matching left vector is flipped along with it.
    """
    A = _as_finite_matrix(M)
    n, d = A.shape
    full = min(n, d)
    if k == "full" or k is None:
        k = full
    k = int(k)
    if not 0 <= k <= full:
        raise CellwiseError(f"k={k} must lie in [0, {full}]")

    transposed = n < d
    if transposed:
        A = A.T
    m, q = A.shape
    Q, R = np.linalg.qr(A, mode="reduced")
    W, V = _jacobi_square(R)
    sv = np.linalg.norm(W, axis=0)
    order = np.argsort(-sv, kind="stable")
    sv, W, V = sv[order], W[:, order], V[:, order]
    tol = max(m, q) * np.finfo(float).eps * (sv[0] if q else 0.0)
    r = int(np.sum(sv > tol))
    Ur = W[:, :r] / sv[:r]
    Ur = _complete_orthonormal(Ur, q) if r < q else Ur
    sv[r:] = 0.0
    U = Q @ Ur
    if transposed:
        U, V = V, U
    U, V = fix_signs(U[:, :k], V[:, :k])
    return SVDResult(_readonly(U), _readonly(sv[:k]), _readonly(V))


def psd_repair(S, floor):
    """Shift a symmetric matrix by ``c * I`` so its smallest eigenvalue is at least ``floor``.

    ``c`` is the smallest nonnegative shift that achieves this, so a matrix that
    already satisfies the floor is returned unchanged.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise CellwiseError(f"psd_repair needs a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.abs(S).max())) if S.size else 1.0
    if np.abs(S - S.T).max() > 1e-10 * scale:
        raise CellwiseError("psd_repair needs a symmetric matrix")
    if floor < 0:
        raise CellwiseError("floor must be nonnegative")
    lam_min = float(np.linalg.eigvalsh(S).min())
    if lam_min >= floor:
        return np.array(S, copy=True)
    return S + (floor - lam_min) * np.eye(S.shape[0])


def mahalanobis_sq(x, model):
    """Squared Mahalanobis distance ``(x - mu)^T sigma^{-1} (x - mu)``.

    ``x`` may be a single d-vector or an (n, d) array of rows.
    """
    mu, sigma = model.mu, model.sigma
    lam_min = float(np.linalg.eigvalsh(sigma).min())
    if lam_min <= 1e-12:
        raise SingularMatrixError(
            f"covariance matrix is singular (lambda_min={lam_min:.3g}); apply psd_repair first",
            lambda_min=lam_min,
        )
    x = np.asarray(x, dtype=float)
    diff = np.atleast_2d(x - mu)
    L = np.linalg.cholesky(sigma)
    z = np.linalg.solve(L, diff.T)
    out = np.maximum((z * z).sum(axis=0), 0.0)
    return float(out[0]) if x.ndim == 1 else out


def principal_angle(A, B):
    """Largest principal angle (radians) between the column spaces of A and B."""
    return float(np.max(subspace_angles(np.asarray(A, float), np.asarray(B, float))))
