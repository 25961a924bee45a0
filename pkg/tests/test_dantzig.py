import numpy as np
import pytest

from conftest import random_instance
from oracles import dantzig_oracle
from thlasso.core import DomainError, normalize_columns
from thlasso.dantzig import (
    DantzigOptions,
    correlation_violation,
    dantzig_feasible,
    fit_dantzig,
)
from thlasso.lasso import lambda_max


def test_trivial_zero_solution():
    rng = np.random.default_rng(0)
    X, Y, _ = random_instance(rng, 10, 4)
    fit = fit_dantzig(X, Y, lambda_max(X, Y))
    assert not fit.beta.any() and fit.objective == 0.0


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_noiseless_exact_recovery(method):
    rng = np.random.default_rng(1)
    X = normalize_columns(rng.standard_normal((10, 4))).data
    beta = np.array([0.0, 1.3, 0.0, 0.0])
    Y = X @ beta
    fit = fit_dantzig(X, Y, 1e-6, DantzigOptions(method=method))
    assert np.max(np.abs(fit.beta - beta)) < 1e-4


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_matches_vertex_oracle(method):
    rng = np.random.default_rng(2)
    for _ in range(6):
        n, p = int(rng.integers(5, 11)), int(rng.integers(2, 6))
        X, Y, _ = random_instance(rng, n, p)
        lam = float(rng.uniform(0.1, 0.8)) * lambda_max(X, Y)
        val, _ = dantzig_oracle(X, Y, lam)
        fit = fit_dantzig(X, Y, lam, DantzigOptions(method=method))
        assert abs(fit.objective - val) < 1e-6
        ok, res = dantzig_feasible(X, Y, fit.beta, lam, 1e-8)
        assert ok and res <= lam + 1e-8


def test_no_larger_than_true_beta_l1():
    rng = np.random.default_rng(3)
    X, _, _ = random_instance(rng, 40, 20)
    beta = np.zeros(20)
    beta[[1, 7, 12]] = [1.0, -2.0, 0.5]
    Y = X @ beta
    fit = fit_dantzig(X, Y, 0.05)
    assert fit.objective <= np.abs(beta).sum() + 1e-6


def test_feasibility_helper():
    rng = np.random.default_rng(4)
    X, Y, beta = random_instance(rng, 20, 6, k=2, noise=0.0)
    lm = lambda_max(X, Y)
    ok, res = dantzig_feasible(X, Y, np.zeros(6), lm)
    assert ok and res == pytest.approx(lm, rel=1e-15)
    ok, res = dantzig_feasible(X, Y, beta, 0.01)
    assert ok and res < 1e-12
    far = 50 * np.ones(6)
    ok, res = dantzig_feasible(X, Y, far, 0.1)
    assert not ok and res > 0.1
    assert correlation_violation(X, Y, far, 0.1) == pytest.approx(res - 0.1)


def test_simplex_and_highs_agree():
    rng = np.random.default_rng(5)
    X, Y, _ = random_instance(rng, 30, 40, k=4)
    a = fit_dantzig(X, Y, 0.1, DantzigOptions(method="simplex"))
    b = fit_dantzig(X, Y, 0.1, DantzigOptions(method="highs"))
    assert abs(a.objective - b.objective) < 1e-6
    assert a.kkt_residual <= 1e-8 and b.kkt_residual <= 1e-8
    assert a.method == "simplex" and b.method == "highs" and a.gap is not None


def test_lambda_zero_underdetermined_is_interpolation():
    rng = np.random.default_rng(6)
    X, Y, _ = random_instance(rng, 6, 10)
    fit = fit_dantzig(X, Y, 0.0)
    assert np.max(np.abs(X.T @ (Y - X @ fit.beta))) / 6 <= 1e-8


def test_options_validation():
    with pytest.raises(DomainError):
        DantzigOptions(feas_tol=0)
    with pytest.raises(DomainError):
        DantzigOptions(method="admm")
    with pytest.raises(DomainError):
        fit_dantzig(np.eye(3), np.ones(3), -1.0)
