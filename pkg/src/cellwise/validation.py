"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np

from .exceptions import CellwiseError
from .matrix import DataMatrix


def as_data_matrix(X, min_rows=1, min_cols=1, what="X"):
    """Coerce arrays, nested lists, DataFrames or DataMatrix to `DataMatrix`.

    NaN entries in array input are treated as missing cells.
    """
    if isinstance(X, DataMatrix):
        dm = X
    elif hasattr(X, "columns") and hasattr(X, "to_numpy"):
        dm = DataMatrix(X.to_numpy(dtype=float), None, [str(c) for c in X.columns],
                        [str(i) for i in X.index])
    else:
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise CellwiseError(f"{what} must be 2-D, got {arr.ndim}-D")
        dm = DataMatrix(arr)
    if dm.n < min_rows:
        raise CellwiseError(f"{what} needs at least {min_rows} rows, got {dm.n}")
    if dm.d < min_cols:
        raise CellwiseError(f"{what} needs at least {min_cols} columns, got {dm.d}")
    return dm


def check_complete(dm, what="this estimator"):
    if dm.missing.any():
        raise CellwiseError(f"{what} requires complete data; found {int(dm.missing.sum())} missing cells")
    return np.asarray(dm.values)


def check_finite_array(X, what="X", ndim=2):
    arr = np.asarray(X, dtype=float)
    if arr.ndim != ndim:
        raise CellwiseError(f"{what} must be {ndim}-D, got {arr.ndim}-D")
    if not np.isfinite(arr).all():
        raise CellwiseError(f"{what} contains non-finite values")
    return arr
