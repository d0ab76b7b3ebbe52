"""Seeded data generators for the reproduction experiments.

All randomness comes from NumPy's PCG64 bit generator (O'Neill's permuted
congruential generator, 128-bit state) seeded with an explicit integer, so
outputs are reproducible across runs and platforms.
"""

import numpy as np

from .exceptions import CellwiseError

__all__ = ["rng", "alternating_cov", "table1_data", "ar_series", "AR3_BETA", "AR3_OUTLIER"]

AR3_BETA = (0.5, 0.2, 0.2)
AR3_OUTLIER = 10.0


def rng(seed):
    """A fresh PCG64 generator for ``seed``."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def alternating_cov(d, rho=-0.9):
    """Correlation matrix with entries ``rho ** |j - k|``."""
    idx = np.arange(d)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def table1_data(n=1000, d=10, fraction=0.1, value=5.0, seed=0):
    """Gaussian sample with ``rho = -0.9`` structure and a random fraction of cells set to ``value``.

    Returns ``(X, mask)`` where ``mask`` marks the replaced cells.
    """
    if not 0 <= fraction <= 1:
        raise CellwiseError(f"fraction must lie in [0, 1], got {fraction}")
    g = rng(seed)
    L = np.linalg.cholesky(alternating_cov(d))
    X = g.standard_normal((n, d)) @ L.T
    mask = g.random((n, d)) < fraction
    X[mask] = value
    return X, mask


def ar_series(n=1000, beta=AR3_BETA, sigma=1.0, burn_in=200, seed=0,
              every=7, outlier=AR3_OUTLIER):
    """Stationary AR(p) series with every ``every``-th value replaced by ``outlier``.

    The replaced positions are 1, 1 + every, 1 + 2*every, ... (1-based).
    ``every=0`` leaves the series clean. Returns ``(y, mask)``.
    """
    beta = np.asarray(beta, dtype=float)
    p = beta.shape[0]
    g = rng(seed)
    e = sigma * g.standard_normal(n + burn_in)
    y = np.zeros(n + burn_in)
    for t in range(p, n + burn_in):
        y[t] = beta @ y[t - p:t][::-1] + e[t]
    y = y[burn_in:].copy()
    mask = np.zeros(n, bool)
    if every:
        mask[0::every] = True
        y[mask] = outlier
    return y, mask
