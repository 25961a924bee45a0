import math

import numpy as np
import pytest

from thlasso.core import DomainError, Signal, lambda_base
from thlasso.diagnostics import essential_sparsity
from thlasso.ensembles import (
    EnsembleSpec,
    RandomSource,
    TigerBetaSpec,
    gen_beta_const,
    gen_beta_spiked,
    gen_beta_tiger,
    gen_design,
    gen_observation,
    toeplitz_covariance,
)

LS_TABLE = lambda_base(2048, 1600, "two")


def tiger(s=130, C_m=1 / math.sqrt(2), **kw):
    return TigerBetaSpec(p=2048, a0=30, s0=50, lambda_sigma=LS_TABLE, C_a=8.528, C_m=C_m, s=s, **kw)


def test_random_source_streams_are_reproducible_and_distinct():
    rs = RandomSource(7)
    a = rs.stream(1, 2).standard_normal(5)
    b = RandomSource(7).stream(1, 2).standard_normal(5)
    c = rs.stream(2, 1).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_iid_design_normalized():
    X = gen_design(EnsembleSpec("iid_gaussian", 30, 10), 0)
    assert X.normalized
    assert np.allclose(np.linalg.norm(X.data, axis=0), math.sqrt(30))


def test_bernoulli_entries():
    X = gen_design(EnsembleSpec("bernoulli_pm1", 20, 7, normalize=False), 3)
    assert set(np.unique(X.data)) <= {-1.0, 1.0}


def test_toeplitz_covariance_matches():
    T = toeplitz_covariance(3, 0.7)
    assert np.allclose(T, [[1, .7, .49], [.7, 1, .7], [.49, .7, 1]])
    X = gen_design(EnsembleSpec("toeplitz", 100_000, 3, gamma=0.7, normalize=False), 11).data
    S = X.T @ X / X.shape[0]
    assert np.max(np.abs(S - T)) < 0.02


def test_toeplitz_small_gamma_nearly_uncorrelated():
    X = gen_design(EnsembleSpec("toeplitz", 2000, 4, gamma=0.01), 5).data
    C = np.corrcoef(X.T)
    assert np.max(np.abs(C - np.eye(4))) < 0.1


def test_ensemble_spec_validation():
    with pytest.raises(DomainError):
        EnsembleSpec("toeplitz", 10, 5)
    with pytest.raises(DomainError):
        EnsembleSpec("toeplitz", 10, 5, gamma=1.0)
    with pytest.raises(DomainError):
        EnsembleSpec("iid_gaussian", 0, 5)
    with pytest.raises(ValueError):
        EnsembleSpec("laplace", 10, 5)


def test_tiger_table_norms():
    spec = tiger()
    assert spec.s == 130 and abs(spec.C_t - 0.354) < 5e-4
    beta, blocks = gen_beta_tiger(spec, 0, return_blocks=True)
    b = beta.coef
    got = {k: (np.abs(b[v]).sum(), np.linalg.norm(b[v])) for k, v in blocks.items()}
    want = {"11": (30, 5.477), "12": (1.658, 0.371), "2": (3.317, 0.371)}
    for k in want:
        assert abs(got[k][0] - want[k][0]) < 1e-3, k
        assert abs(got[k][1] - want[k][1]) < 1e-3, k
    assert essential_sparsity(b, LS_TABLE) == 50


@pytest.mark.parametrize("s,l1_2", [(370, 6.633), (511, 7.963), (770, 9.950)])
def test_tiger_other_rows(s, l1_2):
    beta, blocks = gen_beta_tiger(tiger(s=s), 1, return_blocks=True)
    # the s=511 entry carries ~1.4e-3 of table rounding, so these rows get 2e-3
    assert abs(np.abs(beta.coef[blocks["2"]]).sum() - l1_2) < 2e-3
    assert abs(np.linalg.norm(beta.coef[blocks["2"]]) - 0.371) < 1e-3


def test_tiger_exact_sparse():
    beta, blocks = gen_beta_tiger(tiger(s=50, C_m=1.0), 2, return_blocks=True)
    assert blocks["2"].size == 0
    assert abs(np.abs(beta.coef[blocks["12"]]).sum() - 2.345) < 1e-3
    assert abs(np.linalg.norm(beta.coef[blocks["12"]]) - 0.524) < 1e-3


def test_tiger_degenerate_only_strong():
    spec = TigerBetaSpec(p=20, a0=5, s0=5, lambda_sigma=0.3, C_a=3.0, s=5)
    beta = gen_beta_tiger(spec, 0).coef
    assert np.count_nonzero(beta) == 5
    assert np.allclose(np.abs(beta[beta != 0]), 0.9)


def test_tiger_solves_s_from_ct_and_calibration():
    spec = TigerBetaSpec(p=2048, a0=30, s0=50, lambda_sigma=LS_TABLE, C_a=8.528, C_m=1 / math.sqrt(2),
                         C_t=0.3)
    assert (spec.s - spec.s0) * spec.C_t**2 == pytest.approx((50 - 30) * 0.5, rel=1e-12)
    b = gen_beta_tiger(spec, 3).coef
    ls = LS_TABLE
    assert np.sum(np.minimum(b**2, ls**2)) == pytest.approx(50 * ls**2, rel=1e-12)
    assert np.sum(np.abs(b) > ls) == 30


def test_tiger_layout_leading():
    spec = TigerBetaSpec(p=40, a0=2, s0=4, lambda_sigma=0.5, C_a=3.0, C_m=0.5, s=10, layout="leading")
    beta, blocks = gen_beta_tiger(spec, 0, return_blocks=True)
    assert blocks["11"].tolist() == [0, 1]
    assert blocks["2"].tolist() == list(range(4, 10))
    assert np.all(beta.coef[10:] == 0)


def test_tiger_validation():
    with pytest.raises(DomainError):
        TigerBetaSpec(p=10, a0=5, s0=3, lambda_sigma=1, C_a=2)
    with pytest.raises(DomainError):
        TigerBetaSpec(p=10, a0=1, s0=3, lambda_sigma=1, C_a=0.5)
    with pytest.raises(DomainError):
        TigerBetaSpec(p=10, a0=1, s0=3, lambda_sigma=1, C_a=2, C_m=0.5, s=2)
    with pytest.raises(DomainError):
        TigerBetaSpec(p=10, a0=1, s0=3, lambda_sigma=1, C_a=2, C_m=0.5, s=5, C_t=0.9)


def test_spiked_magnitudes():
    beta = gen_beta_spiked(200_000, 100_000, 4).coef
    mags = np.abs(beta[beta != 0])
    assert mags.min() >= 1.0
    assert abs(mags.mean() - (1 + math.sqrt(2 / math.pi))) < 0.01
    assert np.all(gen_beta_spiked(10, 0, 1).coef == 0)


def test_const_beta():
    beta = gen_beta_const(50, 8, 0.9, 9).coef
    assert np.count_nonzero(beta) == 8
    assert np.allclose(np.abs(beta[beta != 0]), 0.9)
    assert np.count_nonzero(gen_beta_const(6, 6, 1.0, 0).coef) == 6
    assert np.array_equal(gen_beta_const(50, 8, 0.9, 9).coef, beta)


def test_observation_noise():
    X = gen_design(EnsembleSpec("iid_gaussian", 100_000, 2), 0)
    beta = Signal(np.array([1.0, -1.0]))
    Y0 = gen_observation(X, beta, 0.0, 1).coef
    assert np.array_equal(Y0, X.data @ beta.coef)
    Y = gen_observation(X, beta, 1.5, 1).coef
    assert abs(np.var(Y - Y0) / 1.5**2 - 1) < 0.02
    Yz = gen_observation(X, np.zeros(2), 1.0, 2).coef
    assert abs(Yz.mean()) < 0.02
    with pytest.raises(DomainError):
        gen_observation(X, np.zeros(3), 1.0, 0)


def test_generators_deterministic():
    spec = EnsembleSpec("toeplitz", 20, 8, gamma=0.5)
    assert np.array_equal(gen_design(spec, RandomSource(3)).data, gen_design(spec, RandomSource(3)).data)
    t = tiger()
    assert np.array_equal(gen_beta_tiger(t, 5).coef, gen_beta_tiger(t, 5).coef)
