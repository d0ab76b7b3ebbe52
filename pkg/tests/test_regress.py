import numpy as np
import pytest
from sklearn.base import clone

from cellwise.estimate import classical
from cellwise.exceptions import CellwiseError, SingularMatrixError
from cellwise.matrix import CovModel
from cellwise.regress import (
    PlugInRegressor,
    ar_design,
    ar_fit,
    contaminated_rows,
    plugin_regression,
)
from cellwise.simulate import ar_series


def test_exact_line():
    x = np.arange(10.0)
    fit = plugin_regression(classical(np.column_stack([x, 2 * x])))
    assert fit.beta[0] == pytest.approx(2)
    assert fit.alpha == pytest.approx(0, abs=1e-12)
    assert fit.sigma_hat == pytest.approx(0, abs=1e-6)


def test_matches_least_squares():
    for seed in range(100):
        g = np.random.default_rng(seed)
        X = g.standard_normal((30, 3))
        y = X @ g.standard_normal(3) + 1.5 + g.standard_normal(30)
        fit = plugin_regression(classical(np.column_stack([X, y])))
        coef, *_ = np.linalg.lstsq(np.column_stack([np.ones(30), X]), y, rcond=None)
        assert np.allclose(fit.gamma, coef, atol=1e-8)


def test_no_intercept_matches_origin_ls(rng):
    X = rng.standard_normal((50, 2)) + 1
    y = X @ [0.5, -1.0] + 0.1 * rng.standard_normal(50)
    fit = plugin_regression(classical(np.column_stack([X, y])), intercept=False)
    # sample second moments with ddof=1 scaling agree with lstsq up to n/(n-1)
    S = np.column_stack([X, y])
    M = S.T @ S
    assert np.allclose(fit.beta, np.linalg.solve(M[:2, :2], M[:2, 2]), atol=1e-2)
    assert fit.alpha == 0


def test_response_index(rng):
    Z = rng.standard_normal((40, 3))
    a = plugin_regression(classical(Z), response_index=0)
    b = plugin_regression(classical(Z[:, [1, 2, 0]]), response_index=-1)
    assert np.allclose(a.beta, b.beta)


def test_scale_equivariance(rng):
    Z = rng.standard_normal((60, 3))
    Z[:, 2] += Z[:, 0]
    f1 = plugin_regression(classical(Z))
    Z2 = Z.copy()
    Z2[:, 2] *= 7.0
    f2 = plugin_regression(classical(Z2))
    assert np.allclose(f2.gamma, 7 * f1.gamma)
    assert f2.sigma_hat == pytest.approx(7 * f1.sigma_hat)


def test_singular_predictors(rng):
    x = rng.standard_normal(20)
    with pytest.raises(SingularMatrixError, match="psd_repair"):
        plugin_regression(classical(np.column_stack([x, 2 * x, x + 1])))


def test_negative_residual_variance_clamped():
    model = CovModel(np.zeros(2), np.array([[1.0, 0.9], [0.9, 0.5]]), "repaired")
    fit = plugin_regression(model)
    assert fit.sigma_hat == 0 and fit.warnings


def test_needs_predictor():
    with pytest.raises(CellwiseError):
        plugin_regression(CovModel(np.zeros(1), np.eye(1), "x"))


class TestDesign:
    def test_small(self):
        Z = ar_design([1, 2, 3, 4], 1)
        assert Z.values.tolist() == [[1, 2], [2, 3], [3, 4]]

    def test_lag_order(self):
        Z = ar_design(np.arange(1.0, 6.0), 2)
        assert Z.values[0].tolist() == [2, 1, 3]
        assert Z.col_names == ("lag1", "lag2", "y")

    def test_rows(self):
        assert ar_design(np.zeros(1000), 3).n == 997

    @pytest.mark.parametrize("t,expected", [(0, 1), (2, 3), (500, 4), (999, 1)])
    def test_single_outlier_rows(self, t, expected):
        mask = np.zeros(1000, bool)
        mask[t] = True
        assert contaminated_rows(mask, 3).sum() == expected

    def test_row_bound(self, rng):
        mask = rng.random(300) < 0.05
        assert contaminated_rows(mask, 3).sum() <= 4 * mask.sum()

    def test_missing_propagates(self):
        Z = ar_design([1.0, np.nan, 3.0, 4.0], 1)
        assert Z.missing.tolist() == [[False, True], [True, False], [False, False]]

    def test_too_short(self):
        with pytest.raises(CellwiseError):
            ar_design([1.0, 2.0], 2)
        with pytest.raises(CellwiseError):
            ar_design([1.0, 2.0], 0)


def test_ar1_recovery():
    y, _ = ar_series(n=2000, beta=(0.5,), every=0, seed=3)
    fit = ar_fit(y, 1, "classical")
    assert abs(fit.beta[0] - 0.5) < 0.05


def test_unknown_cov():
    with pytest.raises(CellwiseError):
        ar_fit(np.arange(20.0), 1, "nope")


class TestRegressor:
    def test_fit_predict(self, rng):
        X = rng.standard_normal((200, 2))
        y = X @ [1.0, -2.0] + 3 + 0.1 * rng.standard_normal(200)
        est = PlugInRegressor(cov="classical").fit(X, y)
        assert np.allclose(est.coef_, [1, -2], atol=0.05)
        assert est.predict(X).shape == (200,)
        assert est.score(X, y) > 0.99

    def test_cellwise_robust(self, rng):
        X = rng.standard_normal((300, 3))
        y = X @ [1.0, 1.0, 1.0] + 0.2 * rng.standard_normal(300)
        bad = rng.random(X.shape) < 0.05
        Xc = np.where(bad, 30.0, X)
        assert np.allclose(PlugInRegressor().fit(Xc, y).coef_, 1, atol=0.2)
        assert not np.allclose(PlugInRegressor(cov="classical").fit(Xc, y).coef_, 1, atol=0.2)

    def test_length_mismatch(self, rng):
        with pytest.raises(CellwiseError):
            PlugInRegressor().fit(rng.standard_normal((10, 2)), np.zeros(9))

    def test_clone(self):
        est = PlugInRegressor(cov="pairwise", fit_intercept=False)
        assert clone(est).get_params() == est.get_params()
