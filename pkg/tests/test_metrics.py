import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from thlasso.core import DomainError, lambda_base, top_indices
from thlasso.ensembles import TigerBetaSpec, gen_beta_tiger
from thlasso.estimators import SelectionSet
from thlasso.metrics import (
    METRIC_COLUMNS,
    Reference,
    check_identities,
    confusion,
    error_decomposition,
    exact_sign_recovery,
    rates,
    rho_squared,
    roc_area,
)

LS = lambda_base(2048, 1600, "two")


def _tiger():
    return gen_beta_tiger(TigerBetaSpec(2048, 30, 50, LS, 8.528, 1 / math.sqrt(2), s=130), 0).coef


def test_confusion_basic():
    b = np.array([1.0, 0, -2.0, 0, 0])
    c = confusion([0, 2], b)
    assert (c.tp, c.fp, c.tn, c.fn) == (2, 0, 3, 0) and c.p == 5
    e = confusion(SelectionSet(np.array([], dtype=int), 1.0), b)
    assert e.tp == 0 and e.fn == 2
    assert rates(c) == (0.0, 1.0)
    assert rates(confusion(range(5), b)) == (1.0, 1.0)


def test_confusion_tiger_references():
    b = _tiger()
    T0 = top_indices(b, 50)
    c0 = confusion(T0, b, Reference.TOP_T0, LS)
    assert c0.fp == 0 and c0.fn == 0 and c0.tp == 50
    cs = confusion(T0, b, "support_S")
    assert cs.fp == 0 and cs.fn == 80
    with pytest.raises(DomainError):
        confusion(T0, b, Reference.TOP_T0)


def test_rates_caption_numbers():
    from thlasso.metrics import ConfusionCounts
    fpr, tpr = rates(ConfusionCounts(8, 3, 245, 0, Reference.SUPPORT_S))
    assert fpr == 3 / 248 and tpr == 1.0
    assert rates(ConfusionCounts(0, 0, 0, 0, Reference.SUPPORT_S)) == (0.0, 0.0)


def test_rho_squared():
    b = np.array([1.0, 0.0, 0.05])
    assert rho_squared(b, b, 1.0, 100) == 0.0
    bh = np.array([1.1, 0.0, 0.0])
    assert rho_squared(bh, b, 1.0, 100) == pytest.approx((0.01 + 0.0025) / (0.01 + 0.0025))
    with pytest.raises(DomainError):
        rho_squared(b, np.zeros(3), 1.0, 100)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rho_squared_permutation_invariant(seed):
    g = np.random.default_rng(seed)
    b = g.standard_normal(12)
    bh = b + 0.3 * g.standard_normal(12)
    perm = g.permutation(12)
    assert rho_squared(bh[perm], b[perm], 0.7, 30) == pytest.approx(rho_squared(bh, b, 0.7, 30), rel=1e-12)


def test_sign_recovery():
    b = np.array([1.0, 0, -2.0])
    assert exact_sign_recovery(b, b)
    assert not exact_sign_recovery(np.array([1.0, 0.1, -2.0]), b)
    assert exact_sign_recovery(np.array([3.0, 0, -0.1]), b)


def test_decomposition_beta_init_equals_beta():
    b = _tiger()
    d = error_decomposition(b, b, LS)
    assert d.s0 == 50 and d.T0.size == 50 and d.T1.size == 50
    assert d.h_T0_l1 == 0.0 and d.h_T0_l2 == 0.0
    assert d.h_T0c_l1 == pytest.approx(d.beta_T0c_l1)
    assert d.delta_l1 == 0.0
    check_identities(d)


def test_decomposition_beta_init_equals_beta_T0():
    b = _tiger()
    bT0 = np.zeros_like(b)
    T0 = top_indices(b, 50)
    bT0[T0] = b[T0]
    d = error_decomposition(bT0, b, LS)
    assert d.h_l1 == 0.0 and d.h_l2 == 0.0
    assert d.delta_l2 == pytest.approx(d.beta_T0c_l2)
    assert d.delta_l2 <= LS * math.sqrt(50)
    check_identities(d)


def test_decomposition_ties_lower_index():
    b = np.array([0.5, 1.0, 0.5, 0.5, 0.0])
    d = error_decomposition(np.zeros(5), b, 1.0)
    assert d.s0 == 2  # 0.25*3 + 1 = 1.75
    assert d.T0.tolist() == [0, 1]
    assert d.T1.tolist() == [2, 3]


def test_decomposition_prediction_error():
    g = np.random.default_rng(0)
    X = g.standard_normal((20, 6))
    b = g.standard_normal(6)
    bi = b + 0.1
    d = error_decomposition(bi, b, 0.3, X)
    assert d.pred_err == pytest.approx(np.linalg.norm(X @ (bi - b)) / math.sqrt(20))


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 15, elements=st.floats(-3, 3)), arrays(np.float64, 15, elements=st.floats(-3, 3)),
       st.floats(0.05, 2.0))
def test_identities_hold_for_any_vectors(bi, b, ls):
    check_identities(error_decomposition(bi, b, ls))


def test_identities_detect_violation():
    d = error_decomposition(np.ones(6), np.array([2.0, 0, 0, 0, 0, 0]), 0.5)
    from dataclasses import replace
    with pytest.raises(AssertionError):
        check_identities(replace(d, h_T01c_l2=d.h_T0c_l1 * 10))
    with pytest.raises(AssertionError):
        check_identities(replace(d, h_l2=d.h_l2 + 1))


def test_roc_area():
    assert roc_area([0, 1], [1, 1]) == 1.0
    assert roc_area([0.5, 1.0], [0.5, 1.0]) == pytest.approx(0.5)
    assert roc_area([0.0, 0.2], [0.8, 1.0], upper=0.1) == pytest.approx(0.1 * (0.8 + 0.9) / 2)
    assert roc_area([0.0], [1.0]) == 0.0
    assert roc_area([0.2, 0.0], [1.0, 0.5]) == pytest.approx(roc_area([0.0, 0.2], [0.5, 1.0]))


def test_metric_columns_order():
    assert METRIC_COLUMNS == ["seed", "estimator", "lambda_factor", "t0_factor", "tp", "fp", "tn", "fn",
                              "fpr", "tpr", "rho2", "l2_err", "l1_err_h", "l1_err_delta"]
