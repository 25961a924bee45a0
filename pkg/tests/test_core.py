import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from thlasso.core import (
    DesignMatrix,
    DomainError,
    LogBase,
    PenaltyScale,
    Signal,
    lambda_base,
    noise_bound,
    normalize_columns,
    top_indices,
)


def test_normalize_identity_scales_by_sqrt_n():
    out = normalize_columns(np.eye(4))
    assert np.allclose(out.data, 2 * np.eye(4))
    assert np.allclose(np.linalg.norm(out.data, axis=0), 2.0)
    assert out.normalized


def test_normalize_zero_column_names_it():
    X = np.ones((5, 4))
    X[:, 2] = 0.0
    with pytest.raises(DomainError, match="zero column 3"):
        normalize_columns(X)


def test_normalize_random_gaussian():
    X = np.random.default_rng(1).standard_normal((8, 5))
    out = normalize_columns(X)
    assert np.all(np.abs(np.linalg.norm(out.data, axis=0) - math.sqrt(8)) <= 1e-10 * math.sqrt(8))
    assert np.allclose(out.data / X, out.scales[None, :])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 8)),
              elements=st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: abs(v) > 1e-3)))
def test_normalize_idempotent(X):
    once = normalize_columns(X)
    twice = normalize_columns(once)
    assert np.allclose(once.data, twice.data, rtol=0, atol=1e-12 * max(1.0, np.abs(once.data).max()))


def test_design_matrix_validation():
    with pytest.raises(DomainError):
        DesignMatrix(np.array([[1.0, np.nan]]))
    with pytest.raises(DomainError):
        DesignMatrix(np.ones(3))
    assert DesignMatrix(np.ones((3, 2))).n == 3


def test_signal_rejects_nonfinite_and_support():
    with pytest.raises(DomainError):
        Signal(np.array([1.0, np.inf]))
    s = Signal(np.array([0.0, -2.0, 0.0, 1.0]))
    assert s.support().tolist() == [1, 3]
    assert s.top(1).tolist() == [1]


def test_top_indices_ties_lower_index():
    v = np.array([1.0, -2.0, 2.0, 1.0, 0.5])
    assert top_indices(v, 2).tolist() == [1, 2]
    assert top_indices(v, 3).tolist() == [0, 1, 2]


@pytest.mark.parametrize("p,n,base,want,tol", [
    (2048, 1600, "two", 0.1173, 5e-5),
    (1024, 800, "two", 0.1581, 5e-5),
    (2048, 1600, "natural", 0.09763, 5e-6),
])
def test_lambda_base_values(p, n, base, want, tol):
    assert abs(lambda_base(p, n, base) - want) < tol


def test_lambda_base_domain():
    with pytest.raises(DomainError):
        lambda_base(1, 10)
    with pytest.raises(DomainError):
        lambda_base(10, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5000), st.integers(1, 5000), st.sampled_from(["natural", "two"]))
def test_lambda_base_monotone(p, n, base):
    assert lambda_base(p, n + 1, base) < lambda_base(p, n, base)
    assert lambda_base(p + 1, n, base) > lambda_base(p, n, base)


def test_noise_bound_values():
    nb = noise_bound(2048, 1600, 1.0)
    assert abs(nb.bound - 0.09763) < 5e-6
    # 1 - 1/sqrt(pi ln 2048) = 0.7956776 (the quoted 0.7958 is rounded loosely)
    assert abs(nb.probability_floor - 0.7956776) < 1e-7
    assert abs(nb.probability_floor - 0.7958) < 2e-4
    assert math.isclose(noise_bound(2048, 1600, 2.0).bound, 2 * nb.bound)
    nb2 = noise_bound(256, 72, math.sqrt(8) / 3)
    assert abs(nb2.bound - 0.3702) < 5e-4
    assert nb.bound == lambda_base(2048, 1600, LogBase.NATURAL)


def test_noise_bound_domain():
    with pytest.raises(DomainError):
        noise_bound(10, 10, 0.0)
    with pytest.raises(DomainError):
        noise_bound(10, 10, 1.0, a=-1)


def test_penalty_scale():
    ps = PenaltyScale(2048, 1600, sigma=1.0, a=0.0, d0=2.0, log_base="two")
    assert abs(ps.lambda_sigma - 0.1173) < 5e-5
    assert ps.lambda_n == 2 * ps.lambda_sigma
    assert ps.d0_admissible()
    assert not PenaltyScale(100, 50, a=1.0, d0=2.0).d0_admissible()
    with pytest.raises(DomainError):
        PenaltyScale(100, 50, a=-0.1)
