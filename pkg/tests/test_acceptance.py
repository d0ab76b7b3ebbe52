"""End-to-end exit criteria. Each test carries its criterion number; the
terminal summary prints one PASS/FAIL line per criterion.

Run alone with ``python3 tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from cellwise.breakdown import (
    contamination_probability,
    hyperplane_attack_location,
    implosion_attack,
    regression_attack,
)
from cellwise.ca import classical_ca, chi_square_statistic, profile_matrix, robust_ca
from cellwise.ca import robust_pca_zero_center
from cellwise.cli import run
from cellwise.detect import ddc
from cellwise.estimate import classical, em_mle, spatial_median
from cellwise.experiments import ar3, fig3, table1_detect
from cellwise.matrix import principal_angle, svd
from cellwise.regress import ar_design, plugin_regression
from cellwise.simulate import table1_data
from cellwise.univariate import mcd_consistency, univariate_mcd

C1 = (1, "contamination probability 1 - 0.95^15 > 0.5")
C2 = (2, "breakdown curves (n=100, d=4, value 500, 200 reps)")
C3 = (3, "location hyperplane attack")
C4 = (4, "implosion attack")
C5 = (5, "regression attack")
C6 = (6, "AR(3) with every 7th value = 10")
C7 = (7, "DDC detection quality and timing")
C8 = (8, "estimator oracles")
C9 = (9, "correspondence analysis identities")
C10 = (10, "CLI determinism under a fixed seed")


# ---- 1 --------------------------------------------------------------------

@pytest.mark.acceptance(*C1)
def test_c1_contamination_probability():
    p = contamination_probability(0.05, 15)
    assert abs(p - (1 - 0.95 ** 15)) < 1e-12
    assert p > 0.5


# ---- 2 --------------------------------------------------------------------

@pytest.fixture(scope="module")
def fig3_curve():
    t0 = time.perf_counter()
    curve = fig3(reps=200, seed=0)
    return curve, time.perf_counter() - t0


@pytest.mark.acceptance(*C2)
def test_c2_mean_exceeds_100_at_first_step(fig3_curve):
    curve, _ = fig3_curve
    assert curve.norms["mean"][1] > 100


@pytest.mark.acceptance(*C2)
def test_c2_spatial_median_at_25_percent(fig3_curve):
    curve, _ = fig3_curve
    i = int(np.nonzero(curve.k == 25)[0][0])
    assert 225 <= curve.norms["spatial_median"][i] <= 275


@pytest.mark.acceptance(*C2)
def test_c2_coordinatewise_estimators_stay_bounded(fig3_curve):
    curve, _ = fig3_curve
    below_half = curve.fraction < 0.5
    assert np.all(curve.norms["coordwise_median"][below_half] < 10)
    assert np.all(curve.norms["coordwise_mcd"][below_half] < 10)


@pytest.mark.acceptance(*C2)
def test_c2_runtime(fig3_curve):
    _, seconds = fig3_curve
    assert seconds < 60


# ---- 3 --------------------------------------------------------------------

@pytest.mark.acceptance(*C3)
@pytest.mark.parametrize("c", [1e3, 1e6])
def test_c3_location_attack(c):
    g = np.random.default_rng(3)
    X = g.standard_normal((100, 4))
    res = hyperplane_attack_location(X, c)
    assert res.m <= math.ceil(100 / 4)
    assert np.all(res.per_column_count == 25)
    m = spatial_median(res.contaminated)
    assert abs(m.sum() - c) < 1e-4
    assert np.linalg.norm(m) >= c / 2 - 1e-4  # norm grows linearly in c


# ---- 4 --------------------------------------------------------------------

@pytest.mark.acceptance(*C4)
def test_c4_implosion_attack():
    g = np.random.default_rng(4)
    for _ in range(20):
        n = int(g.integers(20, 201))
        d = int(g.integers(2, 11))
        X = g.standard_normal((n, d)) * g.uniform(0.5, 3, d) + g.normal(0, 5, d)
        res = implosion_attack(X)
        lam = np.linalg.eigvalsh(classical(res.contaminated).sigma)
        assert lam[0] <= 1e-10 * max(1.0, lam[-1])
        assert res.m <= math.ceil((n - 1) / d)


# ---- 5 --------------------------------------------------------------------

@pytest.mark.acceptance(*C5)
@pytest.mark.parametrize("beta0", [10.0, 1e6])
def test_c5_regression_attack(beta0):
    g = np.random.default_rng(5)
    n, p = 60, 3
    Z = np.column_stack([g.standard_normal((n, p)), g.standard_normal(n)])
    res = regression_attack(Z, beta0)
    A = res.contaminated.values
    design = np.column_stack([np.ones(n), A[:, :p]])
    assert np.linalg.matrix_rank(design) == p + 1
    coef, *_ = np.linalg.lstsq(design, A[:, p], rcond=None)
    gamma0 = res.params["gamma0"]
    assert np.max(np.abs(coef - gamma0) / np.maximum(np.abs(gamma0), 1.0)) < 1e-8
    assert res.m <= math.ceil((n - 1) / (p + 1))


# ---- 6 --------------------------------------------------------------------

@pytest.fixture(scope="module")
def ar3_result():
    t0 = time.perf_counter()
    res = ar3(seeds=20, seed=0, methods=("classical", "twostep"))
    return res, time.perf_counter() - t0


@pytest.mark.acceptance(*C6)
def test_c6_design_and_contaminated_rows(ar3_result):
    res, _ = ar3_result
    assert ar_design(np.zeros(1000), 3).n == 997
    assert res["design_rows"] == 997
    assert res["contaminated_rows"] == 569


@pytest.mark.acceptance(*C6)
def test_c6_classical_fails(ar3_result):
    res, _ = ar3_result
    err = np.abs(res["methods"]["classical"]["beta_mean"] - np.array(res["true_beta"]))
    assert err.max() > 0.1


@pytest.mark.acceptance(*C6)
def test_c6_twostep_recovers(ar3_result):
    res, seconds = ar3_result
    m = res["methods"]["twostep"]
    assert np.all(np.abs(m["beta_mean"] - np.array(res["true_beta"])) <= 0.1)
    assert 0.85 <= m["sigma_mean"] <= 1.10
    assert seconds < 120


# ---- 7 --------------------------------------------------------------------

@pytest.mark.acceptance(*C7)
def test_c7_detection_quality():
    summary, _ = table1_detect(d=10, reps=10, seed=0, timing_d=None)
    assert summary["recall_mean"] >= 0.9
    assert summary["fpr_mean"] <= 0.05


@pytest.mark.acceptance(*C7)
def test_c7_timing_d50():
    X, _ = table1_data(n=1000, d=50, seed=0)
    t0 = time.perf_counter()
    ddc(X)
    assert time.perf_counter() - t0 < 5


# ---- 8 --------------------------------------------------------------------

@pytest.mark.acceptance(*C8)
def test_c8_em_equals_classical_mle():
    g = np.random.default_rng(8)
    X = g.standard_normal((150, 4)) @ g.standard_normal((4, 4))
    em = em_mle(X)
    n = X.shape[0]
    mle = np.cov(X, rowvar=False) * (n - 1) / n
    assert np.max(np.abs(em.mu - X.mean(axis=0))) < 1e-10
    assert np.max(np.abs(em.sigma - mle)) < 1e-10


@pytest.mark.acceptance(*C8)
def test_c8_plugin_equals_least_squares():
    g = np.random.default_rng(80)
    for _ in range(100):
        n = int(g.integers(10, 80))
        p = int(g.integers(1, 6))
        X = g.standard_normal((n, p)) * g.uniform(0.1, 10, p)
        y = g.normal(3, 2) + X @ g.standard_normal(p) + g.standard_normal(n)
        fit = plugin_regression(classical(np.column_stack([X, y])))
        D = np.column_stack([np.ones(n), X])
        coef = np.linalg.solve(D.T @ D, D.T @ y)
        assert np.max(np.abs(fit.gamma - coef) / np.maximum(np.abs(coef), 1.0)) < 1e-8


@pytest.mark.acceptance(*C8)
def test_c8_univariate_mcd_exhaustive():
    from itertools import combinations

    g = np.random.default_rng(88)
    for _ in range(3):
        x = np.concatenate([g.standard_normal(16), g.normal(6, 1, 4)])
        h = 12
        best = min(combinations(range(20), h), key=lambda s: np.var(x[list(s)]))
        sub = x[list(best)]
        loc, scale = univariate_mcd(x, h)
        assert abs(loc - sub.mean()) < 1e-12
        assert abs(scale - sub.std() * mcd_consistency(h / 20)) < 1e-12


# ---- 9 --------------------------------------------------------------------

def _dependent_table(g, n=20, d=5, scale=300):
    a = g.uniform(1, 3, n)
    b = g.uniform(1, 3, d)
    inter = 1 + 0.5 * np.outer(g.standard_normal(n), g.standard_normal(d))
    return g.poisson(scale * np.outer(a, b) * np.clip(inter, 0.2, None)).astype(float) + 1


@pytest.mark.acceptance(*C9)
def test_c9_inertia_identity():
    g = np.random.default_rng(9)
    for _ in range(50):
        n, d = int(g.integers(3, 12)), int(g.integers(3, 8))
        T = g.integers(0, 60, (n, d)).astype(float) + 1
        sol = classical_ca(T, min(n, d) - 1)
        assert abs(np.sum(sol.gamma ** 2) - chi_square_statistic(T) / T.sum()) < 1e-9


@pytest.mark.acceptance(*C9)
def test_c9_independence_table():
    T = np.outer([1.0, 2.0, 5.0, 3.0], [2.0, 1.0, 4.0])
    S, _, _ = profile_matrix(T)
    assert np.max(np.abs(S)) < 1e-15


@pytest.mark.acceptance(*C9)
def test_c9_robust_equals_classical_without_flags():
    g = np.random.default_rng(90)
    checked = 0
    for _ in range(40):
        T = _dependent_table(g)
        # a high cutoff leaves a clean table with no flagged cell at all
        rob = robust_ca(T, 2, cutoff=20.0)
        if rob.flags.flags.any():
            continue
        cla = classical_ca(T, 2)
        sign = np.sign(np.sum(rob.col_pc * cla.col_pc, axis=0))
        assert np.max(np.abs(rob.row_pc * sign - cla.row_pc)) < 1e-6
        assert np.max(np.abs(rob.col_pc * sign - cla.col_pc)) < 1e-6
        checked += 1
    assert checked >= 5


@pytest.mark.acceptance(*C9)
def test_c9_robust_subspace_recovery():
    for rep in range(50):
        g = np.random.default_rng(rep)
        B = np.linalg.qr(g.standard_normal((6, 2)))[0]
        S = g.standard_normal((100, 2)) @ B.T
        mask = g.random(S.shape) < 0.05
        S[mask] = 20 * np.sign(g.standard_normal(mask.sum()))
        robust = robust_pca_zero_center(S, 2)
        assert principal_angle(robust.loadings, B) <= 0.1
        assert principal_angle(svd(S).V[:, :2], B) > 0.3


# ---- 10 -------------------------------------------------------------------

@pytest.mark.acceptance(*C10)
def test_c10_cli_determinism(tmp_path, monkeypatch):
    commands = [
        ["simulate", "table1", "--seed", "7", "--n", "200", "--d", "5", "--out", "x.csv"],
        ["simulate", "ar3", "--seed", "7", "--out", "y.csv"],
        ["breakdown", "curve", "--reps", "4", "--seed", "7", "--out", "c.csv", "--plot", "c.svg"],
        ["detect", "--in", "x.csv", "--out", "f.json", "--cellmap", "m.svg"],
        ["estimate", "--method", "twostep", "--in", "x.csv", "--out", "e.json"],
        ["arfit", "--in", "y.csv", "--order", "3", "--out", "a.json"],
        ["repro", "ar3", "--seeds", "2", "--out-dir", "."],
    ]
    outputs = []
    for run_id in range(2):
        d = tmp_path / f"run{run_id}"
        d.mkdir()
        monkeypatch.chdir(d)
        for cmd in commands:
            assert run(cmd) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outputs[0].keys() == outputs[1].keys()
    for name in outputs[0]:
        assert outputs[0][name] == outputs[1][name], name
    # thread count must not change the curve
    d = tmp_path / "threads"
    d.mkdir()
    monkeypatch.chdir(d)
    assert run(["breakdown", "curve", "--reps", "4", "--seed", "7", "--threads", "3",
                "--out", "c.csv"]) == 0
    assert (d / "c.csv").read_bytes() == outputs[0]["c.csv"]


if __name__ == "__main__":
    sys.exit(subprocess.call([sys.executable, "-m", "pytest", "-q", __file__]))
