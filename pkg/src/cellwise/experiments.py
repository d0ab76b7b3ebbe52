"""Reproduction experiments shared by the CLI, the repro scripts and the tests.

Every function is deterministic given its seed; wall-clock timings are
returned separately so they never leak into reproducible outputs.
"""

import time

import numpy as np

from .breakdown import breakdown_curve
from .detect import ddc
from .regress import ar_fit, contaminated_rows
from .simulate import AR3_BETA, ar_series, table1_data

__all__ = ["FIG3_ESTIMATORS", "fig3", "ar3", "table1_detect", "detection_rates"]

FIG3_ESTIMATORS = ("mean", "spatial_median", "coordwise_median", "coordwise_mcd")


def fig3(reps=200, seed=0, n=100, d=4, value=500.0, threads=None):
    """Mean norm of four location estimators as cells per column get contaminated."""
    return breakdown_curve(FIG3_ESTIMATORS, n=n, d=d, value=value, reps=reps, seed=seed,
                           threads=threads)


def ar3(seeds=20, seed=0, n=1000, methods=("classical", "twostep", "pairwise")):
    """AR(3) fits on series with every 7th value set to 10, averaged over seeds.

    Returns a dict with the design size, the number of contaminated rows of
    the first series, and per method the mean and per-seed coefficients and
    residual scales.
    """
    per = {m: {"beta": [], "sigma": []} for m in methods}
    rows = None
    for s in range(seed, seed + seeds):
        y, mask = ar_series(n=n, seed=s)
        if rows is None:
            rows = int(contaminated_rows(mask, 3).sum())
        for m in methods:
            fit = ar_fit(y, 3, m)
            per[m]["beta"].append(fit.beta)
            per[m]["sigma"].append(fit.sigma_hat)
    out = {"n": n, "design_rows": n - 3, "contaminated_rows": rows, "seeds": seeds,
           "true_beta": list(AR3_BETA), "methods": {}}
    for m in methods:
        B = np.array(per[m]["beta"])
        S = np.array(per[m]["sigma"])
        out["methods"][m] = {"beta_mean": B.mean(axis=0), "sigma_mean": float(S.mean()),
                             "beta": B, "sigma": S}
    return out


def detection_rates(flags, mask):
    """Recall and false-positive rate of boolean ``flags`` against true ``mask``."""
    tp = np.sum(flags & mask)
    fp = np.sum(flags & ~mask)
    return float(tp / max(mask.sum(), 1)), float(fp / max((~mask).sum(), 1))


def table1_detect(d=10, reps=10, seed=0, n=1000, timing_d=50):
    """DDC recall/false-positive rate on the ``rho = -0.9`` recipe, plus one timing run.

    Returns ``(summary, seconds)``; ``seconds`` is the DDC wall time at
    ``d = timing_d`` and is kept out of ``summary``.
    """
    recall, fpr = [], []
    for r in range(reps):
        X, mask = table1_data(n=n, d=d, seed=seed + r)
        rc, fp = detection_rates(ddc(X).flags, mask)
        recall.append(rc)
        fpr.append(fp)
    summary = {"n": n, "d": d, "reps": reps, "seed": seed,
               "recall_mean": float(np.mean(recall)), "fpr_mean": float(np.mean(fpr)),
               "recall": recall, "fpr": fpr}
    seconds = None
    if timing_d:
        X, _ = table1_data(n=n, d=timing_d, seed=seed)
        t0 = time.perf_counter()
        ddc(X)
        seconds = time.perf_counter() - t0
    return summary, seconds
