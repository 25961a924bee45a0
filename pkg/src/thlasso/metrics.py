"""Selection and estimation quality metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import DomainError, as_matrix, as_vector, top_indices
from .diagnostics import essential_sparsity

METRIC_COLUMNS = [
    "seed", "estimator", "lambda_factor", "t0_factor", "tp", "fp", "tn", "fn",
    "fpr", "tpr", "rho2", "l2_err", "l1_err_h", "l1_err_delta",
]


class Reference(str, Enum):
    SUPPORT_S = "support_S"
    TOP_T0 = "top_T0"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    reference: Reference

    @property
    def p(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def model_size(self) -> int:
        return self.tp + self.fp


def _selected_mask(selection, p: int) -> np.ndarray:
    idx = getattr(selection, "indices", selection)
    mask = np.zeros(p, dtype=bool)
    mask[np.asarray(idx, dtype=np.int64)] = True
    return mask


def reference_set(beta_true, reference, lambda_sigma: float | None = None) -> np.ndarray:
    b = as_vector(beta_true)
    reference = Reference(reference)
    if reference is Reference.SUPPORT_S:
        return b != 0
    if lambda_sigma is None:
        raise DomainError("the top_T0 reference needs lambda_sigma")
    mask = np.zeros(b.size, dtype=bool)
    mask[top_indices(b, essential_sparsity(b, lambda_sigma))] = True
    return mask


def confusion(selection, beta_true, reference=Reference.SUPPORT_S,
              lambda_sigma: float | None = None) -> ConfusionCounts:
    """Confusion counts of a selected index set against ``S`` or ``T0``."""
    b = as_vector(beta_true)
    ref = reference_set(b, reference, lambda_sigma)
    sel = _selected_mask(selection, b.size)
    return ConfusionCounts(
        int(np.sum(sel & ref)), int(np.sum(sel & ~ref)), int(np.sum(~sel & ~ref)),
        int(np.sum(~sel & ref)), Reference(reference))


def rates(counts: ConfusionCounts) -> tuple[float, float]:
    """``(FPR, TPR)``; a rate with an empty denominator is 0."""
    neg = counts.fp + counts.tn
    pos = counts.tp + counts.fn
    return (counts.fp / neg if neg else 0.0, counts.tp / pos if pos else 0.0)


def rho_squared(beta_hat, beta_true, sigma: float, n: int) -> float:
    """Squared l2 error over the ideal risk ``sum min(beta_i^2, sigma^2/n)``."""
    b = as_vector(beta_true)
    denom = float(np.sum(np.minimum(b * b, sigma**2 / n)))
    if denom <= 0:
        raise DomainError("rho^2 undefined: ideal risk is zero (beta = 0)")
    d = as_vector(beta_hat) - b
    return float(d @ d) / denom


def exact_sign_recovery(beta_hat, beta_true) -> bool:
    return bool(np.array_equal(np.sign(as_vector(beta_hat)), np.sign(as_vector(beta_true))))


@dataclass(frozen=True)
class ErrorDecomposition:
    s0: int
    T0: np.ndarray
    T1: np.ndarray
    T01: np.ndarray
    h_T0_l1: float
    h_T0_l2: float
    h_T0c_l1: float
    h_T01_l2: float
    h_T01c_l2: float
    h_l1: float
    h_l2: float
    delta_l1: float
    delta_l2: float
    beta_T0c_l1: float
    beta_T0c_l2: float
    pred_err: float | None = None
    h: np.ndarray | None = None


def error_decomposition(beta_init, beta_true, lambda_sigma: float, X=None) -> ErrorDecomposition:
    """Split ``h = beta_init - beta_T0`` and ``delta = beta_init - beta``.

    ``T0`` holds the ``s0`` largest ``|beta|`` and ``T1`` the ``s0``
    largest ``|h|`` outside ``T0`` (lower index wins ties).  With ``X``
    the prediction error ``||X delta||_2 / sqrt(n)`` is included.
    """
    if lambda_sigma <= 0:
        raise DomainError("lambda_sigma must be positive")
    bi = as_vector(beta_init)
    b = as_vector(beta_true)
    p = b.size
    s0 = essential_sparsity(b, lambda_sigma)
    T0 = top_indices(b, s0)
    in0 = np.zeros(p, dtype=bool)
    in0[T0] = True
    bT0 = np.where(in0, b, 0.0)
    h = bi - bT0
    delta = bi - b
    out = np.flatnonzero(~in0)
    hh = np.where(in0, 0.0, np.abs(h))
    order = np.lexsort((np.arange(p), -hh))
    T1 = np.sort(np.array([j for j in order if not in0[j]][:s0], dtype=np.int64))
    T01 = np.union1d(T0, T1)
    in01 = np.zeros(p, dtype=bool)
    in01[T01] = True
    pred = None
    if X is not None:
        Xa = as_matrix(X)
        pred = float(np.linalg.norm(Xa @ delta)) / math.sqrt(Xa.shape[0])
    return ErrorDecomposition(
        s0=s0, T0=T0, T1=T1, T01=T01,
        h_T0_l1=float(np.abs(h[in0]).sum()),
        h_T0_l2=float(np.linalg.norm(h[in0])),
        h_T0c_l1=float(np.abs(h[out]).sum()),
        h_T01_l2=float(np.linalg.norm(h[in01])),
        h_T01c_l2=float(np.linalg.norm(h[~in01])),
        h_l1=float(np.abs(h).sum()),
        h_l2=float(np.linalg.norm(h)),
        delta_l1=float(np.abs(delta).sum()),
        delta_l2=float(np.linalg.norm(delta)),
        beta_T0c_l1=float(np.abs(b[out]).sum()),
        beta_T0c_l2=float(np.linalg.norm(b[out])),
        pred_err=pred,
        h=h,
    )


def check_identities(d: ErrorDecomposition, k0: float = 1.0) -> None:
    """Assert the deterministic norm relations of a decomposition.

    * ``||h_{T01^c}||_2 <= ||h_{T0^c}||_1 / sqrt(s0)`` (when ``s0 >= 1``)
    * ``||h||^2 = ||h_{T01}||^2 + ||h_{T01^c}||^2``
    * ``| ||delta||_1 - ||h||_1 | <= ||beta_{T0^c}||_1``
    * cone: if ``||h_{T0^c}||_1 <= k0 ||h_{T0}||_1`` then
      ``||h||_2 <= sqrt(1+k0) ||h_{J0}||_2`` with ``J0`` the ``s0``
      largest ``|h|``

    Raises AssertionError on the first failure.
    """
    slack = 1e-10 * max(1.0, d.h_l1, d.delta_l1)
    if d.s0 >= 1:
        bound = d.h_T0c_l1 / math.sqrt(d.s0)
        if d.h_T01c_l2 > bound + slack:
            raise AssertionError(f"||h_T01c||_2 = {d.h_T01c_l2} > ||h_T0c||_1/sqrt(s0) = {bound}")
    if abs(d.h_l2**2 - (d.h_T01_l2**2 + d.h_T01c_l2**2)) > 1e-10 * max(1.0, d.h_l2**2):
        raise AssertionError("Pythagoras split failed")
    if abs(d.delta_l1 - d.h_l1) > d.beta_T0c_l1 + slack:
        raise AssertionError("l1 gap exceeds ||beta_T0c||_1")
    if d.h is not None and d.s0 >= 1 and d.h_T0c_l1 <= k0 * d.h_T0_l1:
        J0 = top_indices(d.h, d.s0)
        lhs = float(np.linalg.norm(d.h))
        rhs = math.sqrt(1 + k0) * float(np.linalg.norm(d.h[J0]))
        if lhs > rhs + slack:
            raise AssertionError(f"cone bound failed: ||h||_2 = {lhs} > {rhs}")


def roc_area(fpr, tpr, upper: float | None = None) -> float:
    """Trapezoid area under a TPR-vs-FPR curve on ``[0, upper]``.

    Points are sorted by FPR and anchored at ``(0, 0)``.  The curve is
    cut at ``upper`` by linear interpolation (default: its largest
    FPR), so curves with different FPR reach compare on a common range.
    """
    f = np.asarray(fpr, dtype=float)
    t = np.asarray(tpr, dtype=float)
    order = np.lexsort((t, f))
    f = np.concatenate([[0.0], f[order]])
    t = np.concatenate([[0.0], t[order]])
    if upper is None:
        upper = float(f[-1])
    if upper <= 0:
        return 0.0
    keep = f <= upper
    fu, tu = f[keep], t[keep]
    if fu[-1] < upper:
        tail = np.interp(upper, f, t) if f[-1] >= upper else t[-1]
        fu = np.append(fu, upper)
        tu = np.append(tu, tail)
    return float(np.sum(np.diff(fu) * (tu[1:] + tu[:-1]) / 2))
