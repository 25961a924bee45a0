"""Seeded experiment runner: configs, repetition loops, CSV output and plot scripts.

Every repetition draws from its own stream ``(master_seed, rep, ...)``
so results do not depend on the worker count or completion order.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from .core import DomainError, LogBase, ThlassoError, lambda_base
from .diagnostics import diagnose
from .ensembles import (
    RNG_ALGORITHM,
    EnsembleSpec,
    RandomSource,
    TigerBetaSpec,
    gen_beta_const,
    gen_beta_spiked,
    gen_beta_tiger,
    gen_design,
    gen_observation,
)
from .estimators import lasso_best_l2, lasso_best_support, thresholded_lasso
from .lasso import fit_adaptive_lasso, fit_lasso, lasso_path
from .metrics import (
    METRIC_COLUMNS,
    Reference,
    check_identities,
    confusion,
    error_decomposition,
    exact_sign_recovery,
    rates,
    rho_squared,
)

log = logging.getLogger(__name__)

# stream ids for draws shared by all repetitions
_FIXED_DESIGN = 1 << 30
_FIXED_BETA = (1 << 30) + 1


class Kind(str, Enum):
    ERROR_CURVES = "error_curves"
    MODEL_SIZE = "model_size_vs_threshold"
    REFIT_L2 = "refit_l2_vs_threshold"
    TYPE12 = "type12_curves"
    RHO2 = "rho2_study"
    SUCCESS = "success_prob"
    ROC = "roc_compare"
    DIAGNOSE = "diagnose"


class SigmaRule(str, Enum):
    FIXED = "fixed"
    SQRT_S_OVER_3 = "sqrt_s_over_3"
    SQRT_S = "sqrt_s"


# design held fixed across repetitions, beta redrawn; the tiger kinds do the reverse
_FIXED_X_KINDS = {Kind.TYPE12, Kind.RHO2, Kind.SUCCESS, Kind.ROC}
_TIGER_KINDS = {Kind.ERROR_CURVES, Kind.MODEL_SIZE, Kind.REFIT_L2}

_CONFIG_KEYS = {
    "kind", "design", "beta", "sigma_rule", "sigma", "penalty_factors", "threshold_factors",
    "reps", "master_seed", "output_dir", "log_base", "s_values", "n_values", "fixed_design",
    "fixed_beta", "reference", "diagnose_ms", "full",
}
_BETA_KEYS = {
    "spiked": {"type", "s"},
    "const": {"type", "s", "magnitude"},
    "tiger": {"type", "a0", "s0", "s", "C_a", "C_m", "C_t", "layout"},
}


def sigma_for(rule, s: int, sigma: float = 1.0) -> float:
    rule = SigmaRule(rule)
    if rule is SigmaRule.FIXED:
        return float(sigma)
    if rule is SigmaRule.SQRT_S_OVER_3:
        return math.sqrt(s) / 3.0
    return math.sqrt(s)


@dataclass
class ExperimentConfig:
    """One experiment: a sweep, a design ensemble, a coefficient model and a seed.

    ``penalty_factors`` and ``threshold_factors`` are ``f_p`` and ``f_t``
    in ``lambda_n = f_p * lambda_sigma`` and ``t0 = f_t * lambda_sigma``.
    ``s_values``/``n_values`` override the sparsity/sample size for the
    kinds that sweep over them.  ``full`` holds overrides applied by
    :meth:`with_full`.
    """

    kind: Kind
    design: dict
    beta: dict
    sigma_rule: SigmaRule = SigmaRule.FIXED
    sigma: float = 1.0
    penalty_factors: list = field(default_factory=lambda: [0.69])
    threshold_factors: list = field(default_factory=lambda: [1.0])
    reps: int = 100
    master_seed: int = 0
    output_dir: str | None = None
    log_base: LogBase = LogBase.NATURAL
    s_values: list | None = None
    n_values: list | None = None
    fixed_design: bool | None = None
    fixed_beta: bool | None = None
    reference: Reference = Reference.SUPPORT_S
    diagnose_ms: list = field(default_factory=lambda: [1, 2])
    full: dict | None = None

    def __post_init__(self):
        self.kind = Kind(self.kind)
        self.sigma_rule = SigmaRule(self.sigma_rule)
        self.log_base = LogBase(self.log_base)
        self.reference = Reference(self.reference)
        EnsembleSpec(**self.design)
        btype = self.beta.get("type")
        if btype not in _BETA_KEYS:
            raise DomainError(f"unknown beta type {btype!r}")
        extra = set(self.beta) - _BETA_KEYS[btype]
        if extra:
            raise DomainError(f"unknown beta keys for {btype}: {sorted(extra)}")
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if self.kind is not Kind.DIAGNOSE:
            if not self.penalty_factors or not self.threshold_factors:
                raise DomainError("penalty_factors and threshold_factors must be nonempty")
            if min(self.penalty_factors) <= 0 or min(self.threshold_factors) < 0:
                raise DomainError("factors must be positive")
        if self.kind in (Kind.RHO2, Kind.SUCCESS) and not self.s_values:
            raise DomainError(f"{self.kind.value} needs s_values")
        if self.kind is Kind.SUCCESS and not self.n_values:
            raise DomainError("success_prob needs n_values")
        if self.fixed_design is None:
            self.fixed_design = self.kind in _FIXED_X_KINDS
        if self.fixed_beta is None:
            self.fixed_beta = self.kind in _TIGER_KINDS

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        for key in ("kind", "design", "beta"):
            if key not in d:
                raise DomainError(f"config is missing {key!r}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value, "design": dict(self.design), "beta": dict(self.beta),
            "sigma_rule": self.sigma_rule.value, "sigma": self.sigma,
            "penalty_factors": list(self.penalty_factors),
            "threshold_factors": list(self.threshold_factors),
            "reps": self.reps, "master_seed": self.master_seed, "output_dir": self.output_dir,
            "log_base": self.log_base.value, "s_values": self.s_values, "n_values": self.n_values,
            "fixed_design": self.fixed_design, "fixed_beta": self.fixed_beta,
            "reference": self.reference.value, "diagnose_ms": list(self.diagnose_ms),
            "full": self.full,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]

    def with_full(self) -> "ExperimentConfig":
        """Apply the ``full`` overrides (full-size settings)."""
        if not self.full:
            return self
        d = self.to_dict()
        for k, v in self.full.items():
            if isinstance(v, dict) and isinstance(d.get(k), dict):
                d[k] = {**d[k], **v}
            else:
                d[k] = v
        d["full"] = None
        return ExperimentConfig.from_dict(d)


@dataclass
class RunRecord:
    config_hash: str
    rep: int
    estimator: str
    metrics: dict
    group: dict = field(default_factory=dict)
    norms: dict = field(default_factory=dict)
    wall_time: float = 0.0
    status: str = "ok"
    error: str = ""


# ---------------------------------------------------------------- presets

def preset(name: str) -> ExperimentConfig:
    """Desk-scale configurations of the standard experiments.

    Each carries ``full`` overrides restoring the original sizes.
    """
    ft_sweep = [round(x, 4) for x in np.linspace(0.01, 1.5, 30)]
    tiger = {"type": "tiger", "a0": 15, "s0": 25, "s": 65, "C_a": 8.528, "C_m": 1 / math.sqrt(2)}
    tiger_full = {"type": "tiger", "a0": 30, "s0": 50, "s": 130, "C_a": 8.528, "C_m": 1 / math.sqrt(2)}
    toep = {"kind": "toeplitz", "n": 400, "p": 512, "gamma": 0.7}
    toep_full = {"n": 1600, "p": 2048}
    t_sweep = [round(x, 4) for x in np.linspace(0.1, 4.0, 40)]
    table = {
        "type12": dict(kind="type12_curves", design={"kind": "iid_gaussian", "n": 72, "p": 256},
                       beta={"type": "spiked", "s": 8}, sigma_rule="sqrt_s_over_3",
                       penalty_factors=[0.69], threshold_factors=ft_sweep, reps=100),
        "rho2": dict(kind="rho2_study", design={"kind": "iid_gaussian", "n": 400, "p": 2000},
                     beta={"type": "spiked", "s": 18}, sigma_rule="sqrt_s_over_3",
                     penalty_factors=[0.69], threshold_factors=[1.0], s_values=[5, 18, 100], reps=20,
                     full={"reps": 100, "s_values": [5, 18, 20, 40, 60, 80, 100]}),
        "roc": dict(kind="roc_compare", design={"kind": "iid_gaussian", "n": 165, "p": 256},
                    beta={"type": "spiked", "s": 32}, sigma_rule="sqrt_s_over_3",
                    penalty_factors=[0.69], threshold_factors=ft_sweep, reps=20,
                    full={"design": {"n": 330, "p": 512}, "beta": {"s": 64}, "reps": 100}),
        "success": dict(kind="success_prob", design={"kind": "iid_gaussian", "n": 80, "p": 256},
                        beta={"type": "const", "s": 8, "magnitude": 0.9}, sigma_rule="fixed",
                        penalty_factors=[0.69], threshold_factors=[1.0], s_values=[8, 16],
                        n_values=[40, 60, 80, 100, 120, 160], reps=20, full={"reps": 100}),
        "model_size": dict(kind="model_size_vs_threshold", design=toep, beta=tiger, log_base="two",
                           reference="top_T0",
                           penalty_factors=[0.3], threshold_factors=t_sweep, reps=20,
                           full={"design": toep_full, "beta": tiger_full, "reps": 100}),
        "refit_l2": dict(kind="refit_l2_vs_threshold", design=toep, beta=tiger, log_base="two",
                         penalty_factors=[0.1, 0.3, 0.7, 1.0], threshold_factors=t_sweep, reps=20,
                         full={"design": toep_full, "beta": tiger_full, "reps": 100}),
        "error_curves": dict(kind="error_curves", design=toep, beta=tiger, log_base="two",
                             penalty_factors=[round(x, 2) for x in np.linspace(0.05, 1.0, 20)],
                             threshold_factors=[1.0], reps=20,
                             full={"design": toep_full, "beta": tiger_full, "reps": 100}),
        "diagnose": dict(kind="diagnose", design={"kind": "iid_gaussian", "n": 12, "p": 8},
                         beta={"type": "spiked", "s": 2}, diagnose_ms=[1, 2, 3, 4], reps=20),
    }
    if name not in table:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(table)}")
    return ExperimentConfig.from_dict(table[name])


# ---------------------------------------------------------------- per-rep work

def _draw_beta(cfg: ExperimentConfig, p: int, s: int | None, lambda_sigma: float, g):
    b = cfg.beta
    kind = b["type"]
    s = b.get("s") if s is None else s
    if kind == "spiked":
        return gen_beta_spiked(p, s, g).coef
    if kind == "const":
        return gen_beta_const(p, s, b["magnitude"], g).coef
    spec = TigerBetaSpec(p=p, a0=b["a0"], s0=b["s0"], lambda_sigma=lambda_sigma, C_a=b["C_a"],
                         C_m=b.get("C_m", 1.0), s=b.get("s"), C_t=b.get("C_t"),
                         layout=b.get("layout", "random"))
    return gen_beta_tiger(spec, g).coef


def _beta_s(cfg: ExperimentConfig) -> int:
    b = cfg.beta
    if b["type"] == "tiger":
        return b.get("s") or b["s0"]
    return b["s"]


def _metric_row(sel, beta_hat, beta, sigma, n, lambda_sigma, reference, beta_init=None):
    cc = confusion(sel, beta, reference, lambda_sigma)
    fpr, tpr = rates(cc)
    row = {"tp": cc.tp, "fp": cc.fp, "tn": cc.tn, "fn": cc.fn, "fpr": fpr, "tpr": tpr,
           "rho2": rho_squared(beta_hat, beta, sigma, n),
           "l2_err": float(np.linalg.norm(beta_hat - beta)),
           "l1_err_h": math.nan, "l1_err_delta": math.nan}
    strong = np.abs(beta) > lambda_sigma
    sel_mask = np.zeros(beta.size, dtype=bool)
    sel_mask[np.asarray(getattr(sel, "indices", sel), dtype=np.int64)] = True
    norms = {"model_size": cc.tp + cc.fp, "a0": int(strong.sum()), "a0_selected": int(np.sum(strong & sel_mask))}
    if beta_init is not None:
        d = error_decomposition(beta_init, beta, lambda_sigma)
        check_identities(d)
        row["l1_err_h"] = d.h_l1
        row["l1_err_delta"] = d.delta_l1
        norms.update(h_T0_l1=d.h_T0_l1, h_T0_l2=d.h_T0_l2, h_T0c_l1=d.h_T0c_l1,
                     delta_l2=d.delta_l2, s0=d.s0)
    return row, norms


def _threshold_sweep(X, Y, beta, init, cfg, sigma, lambda_sigma, f_p, group, rep, chash,
                     estimator="tlasso"):
    """Threshold one initial fit at every ``f_t`` and refit; returns RunRecords."""
    n = X.shape[0]
    out = []
    prev = None
    for f_t in sorted(cfg.threshold_factors):
        t = time.perf_counter()
        metrics = {"lambda_factor": f_p, "t0_factor": f_t}
        try:
            res = thresholded_lasso(X, Y, f_p * lambda_sigma, f_t * lambda_sigma, init=init)
        except ThlassoError as exc:
            out.append(RunRecord(chash, rep, estimator, metrics, dict(group), status="failed",
                                 error=str(exc), wall_time=time.perf_counter() - t))
            continue
        row, norms = _metric_row(res.selection, res.beta_hat, beta, sigma, n, lambda_sigma,
                                 cfg.reference, res.beta_init)
        size = len(res.selection)
        if norms["model_size"] != size:
            raise AssertionError("|I| != TP + FP")
        if prev is not None and (row["fp"] > prev[0] or size > prev[1]):
            raise AssertionError(f"threshold sweep not monotone at f_t={f_t} (rep {rep})")
        prev = (row["fp"], size)
        norms["success"] = float(exact_sign_recovery(res.beta_hat, beta))
        metrics.update(row)
        out.append(RunRecord(chash, rep, estimator, metrics, dict(group), norms,
                             time.perf_counter() - t))
    return out


def _path_records(path, beta, sigma, n, lambda_sigma, cfg, group, rep, chash, estimator):
    out = []
    for i, f in enumerate(path):
        sel = np.flatnonzero(f.beta)
        row, norms = _metric_row(sel, f.beta, beta, sigma, n, lambda_sigma, cfg.reference)
        metrics = {"lambda_factor": f.lambda_n / lambda_sigma, "t0_factor": 0.0, **row}
        out.append(RunRecord(chash, rep, estimator, metrics, {**group, "point": i}, norms))
    return out


def _run_rep(cfg: ExperimentConfig, rep: int, fixed: dict) -> list[RunRecord]:
    rs = RandomSource(cfg.master_seed)
    chash = cfg.config_hash()
    dspec = cfg.design
    p = dspec["p"]
    records: list[RunRecord] = []
    kind = cfg.kind

    if kind is Kind.DIAGNOSE:
        X = gen_design(EnsembleSpec(**dspec), rs.stream(rep, 0)).data
        t = time.perf_counter()
        rep_ = diagnose(X, ms=cfg.diagnose_ms, theta_pairs=[(1, 1)], mode="exhaustive")
        norms = {}
        for m in cfg.diagnose_ms:
            norms[f"lambda_min_{m}"] = rep_.lambda_min[m]
            norms[f"lambda_max_{m}"] = rep_.lambda_max[m]
        norms["theta_1_1"] = rep_.theta[(1, 1)]
        metrics = {"lambda_factor": math.nan, "t0_factor": math.nan}
        records.append(RunRecord(chash, rep, "design", metrics, {}, norms, time.perf_counter() - t))
        return records

    s_list = cfg.s_values or [None]
    n_list = cfg.n_values or [dspec["n"]]
    for n in n_list:
        for s_over in s_list:
            s = _beta_s(cfg) if s_over is None else s_over
            sigma = sigma_for(cfg.sigma_rule, s, cfg.sigma)
            lambda_sigma = lambda_base(p, n, cfg.log_base) * sigma
            key = (n, s)
            X = fixed["X"][n] if cfg.fixed_design else \
                gen_design(EnsembleSpec(**{**dspec, "n": n}), rs.stream(rep, 0, n, s)).data
            beta = fixed["beta"][key] if cfg.fixed_beta else \
                _draw_beta(cfg, p, s_over, lambda_sigma, rs.stream(rep, 1, n, s))
            Y = gen_observation(X, beta, sigma, rs.stream(rep, 2, n, s)).coef
            group = {}
            if cfg.s_values:
                group["s"] = s
            if cfg.n_values:
                group["n"] = n
            records.extend(_run_setting(cfg, kind, X, Y, beta, sigma, lambda_sigma, group, rep, chash))
    return records


def _run_setting(cfg, kind, X, Y, beta, sigma, lambda_sigma, group, rep, chash):
    n = X.shape[0]
    out = []
    if kind in (Kind.ERROR_CURVES, Kind.MODEL_SIZE, Kind.REFIT_L2, Kind.TYPE12, Kind.ROC,
                Kind.RHO2, Kind.SUCCESS):
        warm = None
        for f_p in sorted(cfg.penalty_factors, reverse=True):
            t = time.perf_counter()
            try:
                init = fit_lasso(X, Y, f_p * lambda_sigma, beta0=warm)
            except ThlassoError as exc:
                out.append(RunRecord(chash, rep, "tlasso", {"lambda_factor": f_p, "t0_factor": math.nan},
                                     dict(group), status="failed", error=str(exc),
                                     wall_time=time.perf_counter() - t))
                continue
            warm = init.beta
            if kind is Kind.ERROR_CURVES:
                # the initial estimator alone, as a function of the penalty
                sel = np.flatnonzero(init.beta)
                row, norms = _metric_row(sel, init.beta, beta, sigma, n, lambda_sigma,
                                         cfg.reference, init.beta)
                out.append(RunRecord(chash, rep, "lasso",
                                     {"lambda_factor": f_p, "t0_factor": 0.0, **row}, dict(group),
                                     norms, time.perf_counter() - t))
            out.extend(_threshold_sweep(X, Y, beta, init, cfg, sigma, lambda_sigma, f_p, group,
                                        rep, chash))
    if kind is Kind.RHO2:
        path = lasso_path(X, Y)
        best = lasso_best_l2(path, beta)
        sel = np.flatnonzero(best.beta)
        row, norms = _metric_row(sel, best.beta, beta, sigma, n, lambda_sigma, cfg.reference, best.beta)
        out.append(RunRecord(chash, rep, "lasso_opt",
                             {"lambda_factor": best.lambda_n / lambda_sigma, "t0_factor": 0.0, **row},
                             dict(group), norms))
    elif kind is Kind.SUCCESS:
        path = lasso_path(X, Y)
        best = lasso_best_support(path, beta)
        sel = np.flatnonzero(best.beta)
        row, norms = _metric_row(sel, best.beta, beta, sigma, n, lambda_sigma, cfg.reference)
        norms["success"] = float(exact_sign_recovery(best.beta, beta))
        out.append(RunRecord(chash, rep, "lasso_support",
                             {"lambda_factor": best.lambda_n / lambda_sigma, "t0_factor": 0.0, **row},
                             dict(group), norms))
    elif kind is Kind.ROC:
        path = lasso_path(X, Y)
        out.extend(_path_records(path, beta, sigma, n, lambda_sigma, cfg, group, rep, chash, "lasso"))
        best = lasso_best_l2(path, beta)
        ada = fit_adaptive_lasso(X, Y, best.beta)
        out.extend(_path_records(ada, beta, sigma, n, lambda_sigma, cfg, group, rep, chash, "adaptive"))
    return out


def _fixed_draws(cfg: ExperimentConfig) -> dict:
    rs = RandomSource(cfg.master_seed)
    dspec = cfg.design
    p = dspec["p"]
    fixed = {"X": {}, "beta": {}}
    n_list = cfg.n_values or [dspec["n"]]
    for n in n_list:
        if cfg.fixed_design:
            fixed["X"][n] = gen_design(EnsembleSpec(**{**dspec, "n": n}), rs.stream(_FIXED_DESIGN, n)).data
        if cfg.fixed_beta:
            for s_over in cfg.s_values or [None]:
                s = _beta_s(cfg) if s_over is None else s_over
                sigma = sigma_for(cfg.sigma_rule, s, cfg.sigma)
                ls = lambda_base(p, n, cfg.log_base) * sigma
                fixed["beta"][(n, s)] = _draw_beta(cfg, p, s_over, ls, rs.stream(_FIXED_BETA, s))
    return fixed


def _task(args):
    cfg_dict, rep, fixed = args
    return _run_rep(ExperimentConfig.from_dict(cfg_dict), rep, fixed)


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("THLX_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer THLX_THREADS=%r", cap)
    return max(1, n)


# ---------------------------------------------------------------- aggregation

# comparators whose penalty is picked per repetition from the true beta
_TUNED_PER_REP = {"lasso_opt", "lasso_support"}

_SUMMARY_METRICS = ["tp", "fp", "tn", "fn", "fpr", "tpr", "rho2", "l2_err", "l1_err_h", "l1_err_delta"]


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _group_key(r: RunRecord):
    return (r.estimator, tuple(sorted(r.group.items())),
            _fmt(float(r.metrics.get("lambda_factor", math.nan))),
            _fmt(float(r.metrics.get("t0_factor", math.nan))))


def summarize(records: list[RunRecord]) -> list[dict]:
    """Mean and std per sweep point; failed repetitions are counted, not averaged.

    ROC path points are grouped by their path index and oracle-tuned
    comparators by setting alone, so ``lambda_factor`` there is the mean
    over repetitions.
    """
    groups: dict = {}
    order = []
    for r in records:
        key = (r.estimator, tuple(sorted(r.group.items())))
        if "point" not in r.group and r.estimator not in _TUNED_PER_REP:
            key = _group_key(r)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    rows = []
    for key in order:
        rs = groups[key]
        ok = [r for r in rs if r.status == "ok"]
        row = {"estimator": rs[0].estimator, **{k: v for k, v in sorted(rs[0].group.items())}}
        lf = [float(r.metrics.get("lambda_factor", math.nan)) for r in (ok or rs)]
        row["lambda_factor"] = float(np.mean(lf)) if lf else math.nan
        row["t0_factor"] = float(rs[0].metrics.get("t0_factor", math.nan))
        row["n_ok"] = len(ok)
        row["n_failed"] = len(rs) - len(ok)
        names = list(_SUMMARY_METRICS)
        extra = sorted({k for r in ok for k in r.norms})
        for name in names + extra:
            vals = np.array([float(r.metrics[name]) if name in r.metrics else float(r.norms.get(name, math.nan))
                             for r in ok], dtype=float)
            if vals.size == 0 or np.all(np.isnan(vals)):
                row[f"{name}_mean"] = math.nan
                row[f"{name}_std"] = math.nan
            else:
                row[f"{name}_mean"] = float(np.mean(vals))
                row[f"{name}_std"] = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        rows.append(row)
    return rows


def verify_summary(records: list[RunRecord], summary: list[dict], rtol: float = 1e-12) -> None:
    """Recompute every mean from the run records; raises AssertionError on mismatch."""
    again = summarize(records)
    if len(again) != len(summary):
        raise AssertionError("summary row count differs from recomputation")
    for a, b in zip(again, summary):
        for k, v in b.items():
            w = a.get(k)
            if isinstance(v, float) and isinstance(w, float):
                if not (math.isnan(v) and math.isnan(w)) and not math.isclose(v, w, rel_tol=rtol, abs_tol=1e-15):
                    raise AssertionError(f"summary column {k}: {v} != {w}")
            elif v != w:
                raise AssertionError(f"summary column {k}: {v} != {w}")


def runs_csv(records: list[RunRecord], master_seed: int) -> str:
    group_cols = sorted({k for r in records for k in r.group})
    norm_cols = sorted({k for r in records for k in r.norms})
    header = ["config_hash", "rep"] + METRIC_COLUMNS + ["status"] + group_cols + norm_cols + ["wall_time", "error"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in records:
        m = {**r.metrics, "seed": f"{master_seed}:{r.rep}", "estimator": r.estimator}
        row = [r.config_hash, r.rep] + [_fmt(m.get(c, math.nan)) for c in METRIC_COLUMNS]
        row += [r.status] + [_fmt(r.group.get(c, "")) for c in group_cols]
        row += [_fmt(r.norms.get(c, math.nan)) for c in norm_cols] + [_fmt(r.wall_time), r.error]
        w.writerow(row)
    return buf.getvalue()


def summary_csv(summary: list[dict]) -> str:
    cols = []
    for row in summary:
        for k in row:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in summary:
        w.writerow([_fmt(row.get(c, "")) for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------- plotting

_PLOT_HEAD = '''"""Plot {title} from {csv_name}. Generated by thlasso {version}."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
with open(path) as fh:
    rows = list(csv.DictReader(fh))


def col(rs, name):
    return [float(r[name]) for r in rs]


fig, ax = plt.subplots(figsize=(6, 4.5))
'''

_PLOT_BODY = {
    "type12_curves": '''rs = sorted([r for r in rows if r["estimator"] == "tlasso"], key=lambda r: float(r["t0_factor"]))
x = col(rs, "t0_factor")
ax.errorbar(x, col(rs, "fp_mean"), yerr=col(rs, "fp_std"), label="FP", capsize=2)
ax.errorbar(x, col(rs, "fn_mean"), yerr=col(rs, "fn_std"), label="FN", capsize=2)
ax.set_xlabel("threshold t0 (units of lambda*sigma)")
ax.set_ylabel("count")
''',
    "model_size_vs_threshold": '''by = defaultdict(list)
for r in rows:
    if r["estimator"] == "tlasso":
        by[r["lambda_factor"]].append(r)
for fp_, rs in sorted(by.items()):
    rs.sort(key=lambda r: float(r["t0_factor"]))
    x = col(rs, "t0_factor")
    ax.plot(x, col(rs, "model_size_mean"), "k-", label=f"|I|, f_p={fp_}")
    ax.plot(x, col(rs, "tp_mean"), "r--", label=f"TP, f_p={fp_}")
    ax.plot(x, col(rs, "fp_mean"), "g:", label=f"FP, f_p={fp_}")
ax.set_xlabel("threshold t0 (units of lambda*sigma)")
ax.set_ylabel("count")
''',
    "refit_l2_vs_threshold": '''by = defaultdict(list)
for r in rows:
    if r["estimator"] == "tlasso":
        by[r["lambda_factor"]].append(r)
for fp_, rs in sorted(by.items()):
    rs.sort(key=lambda r: float(r["t0_factor"]))
    line, = ax.plot(col(rs, "t0_factor"), col(rs, "l2_err_mean"), label=f"refit, f_p={fp_}")
    ax.axhline(float(rs[0]["delta_l2_mean"]), color=line.get_color(), ls=":")
ax.set_xlabel("threshold t0 (units of lambda*sigma)")
ax.set_ylabel("l2 error of the refit")
''',
    "error_curves": '''rs = sorted([r for r in rows if r["estimator"] == "lasso"], key=lambda r: float(r["lambda_factor"]))
x = col(rs, "lambda_factor")
for name, label in (("h_T0c_l1", "||h_T0c||_1"), ("h_T0_l1", "||h_T0||_1"), ("l1_err_h", "||h||_1"),
                    ("h_T0_l2", "||h_T0||_2"), ("delta_l2", "||delta||_2")):
    ax.plot(x, col(rs, name + "_mean"), label=label)
ax.set_xlabel("penalty factor f_p (lambda_n = f_p * lambda*sigma)")
ax.set_ylabel("norm")
''',
    "rho2_study": '''by = defaultdict(list)
for r in rows:
    by[r["estimator"]].append(r)
for est, rs in sorted(by.items()):
    rs.sort(key=lambda r: int(r["s"]))
    ax.plot([int(r["s"]) for r in rs], col(rs, "rho2_mean"), "o-", label=est)
ax.set_xlabel("sparsity s")
ax.set_ylabel("mean rho^2")
''',
    "success_prob": '''by = defaultdict(list)
for r in rows:
    by[(r["estimator"], r["s"])].append(r)
for (est, s), rs in sorted(by.items()):
    rs.sort(key=lambda r: int(r["n"]))
    ax.plot([int(r["n"]) for r in rs], col(rs, "success_mean"), "o-", label=f"{est}, s={s}")
ax.set_xlabel("sample size n")
ax.set_ylabel("probability of exact sign recovery")
''',
    "roc_compare": '''by = defaultdict(list)
for r in rows:
    by[r["estimator"]].append(r)
for est, rs in sorted(by.items()):
    rs.sort(key=lambda r: float(r["fpr_mean"]))
    ax.plot(col(rs, "fpr_mean"), col(rs, "tpr_mean"), label=est)
ax.set_xlabel("FPR")
ax.set_ylabel("TPR")
''',
    "diagnose": '''names = sorted(k[:-5] for k in rows[0] if k.startswith("lambda_") and k.endswith("_mean")
               and k not in ("lambda_factor_mean",))
ax.bar(range(len(names)), [float(rows[0][n + "_mean"]) for n in names],
       yerr=[float(rows[0][n + "_std"]) for n in names])
ax.set_xticks(range(len(names)))
ax.set_xticklabels(names, rotation=45, ha="right")
ax.set_ylabel("sparse eigenvalue")
''',
}


def emit_plot_script(summary_path, kind) -> str:
    """A standalone matplotlib script drawing the summary of ``kind``."""
    try:
        kind = Kind(kind).value
    except ValueError:
        raise DomainError(f"no plot for experiment kind {kind!r}") from None
    name = Path(summary_path).name
    head = _PLOT_HEAD.format(title=kind, csv_name=name, version=__version__)
    tail = '''ax.legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''
    return head + _PLOT_BODY[kind] + tail


# ---------------------------------------------------------------- entry point

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    summary: list
    output_dir: Path | None = None

    def select(self, estimator: str, **group) -> list[dict]:
        return [r for r in self.summary if r["estimator"] == estimator
                and all(r.get(k) == v for k, v in group.items())]


def version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        git = out.stdout.strip() if out.returncode == 0 else "unknown"
    except (OSError, subprocess.SubprocessError):
        git = "unknown"
    return f"thlasso {__version__}\ngit {git}\nrng {RNG_ALGORITHM}\n"


def run_experiment(config, workers: int | None = None, output_dir=None) -> ExperimentResult:
    """Run every repetition of ``config``, aggregate, and optionally write outputs.

    The output folder receives ``config.json``, ``version.txt``,
    ``runs.csv``, ``summary.csv`` and ``plot_summary.py``.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    fixed = _fixed_draws(cfg)
    nw = min(worker_count(workers), cfg.reps)
    tasks = [(cfg.to_dict(), rep, fixed) for rep in range(cfg.reps)]
    if nw <= 1:
        chunks = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            chunks = list(ex.map(_task, tasks))
    records = [r for chunk in chunks for r in chunk]
    summary = summarize(records)
    verify_summary(records, summary)
    failed = sum(r.status != "ok" for r in records)
    if failed:
        log.warning("%d of %d runs failed and were excluded from the means", failed, len(records))
    out = output_dir or cfg.output_dir
    res = ExperimentResult(cfg, records, summary)
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(cfg.to_json() + "\n")
        (out / "version.txt").write_text(version_string())
        (out / "runs.csv").write_text(runs_csv(records, cfg.master_seed))
        (out / "summary.csv").write_text(summary_csv(summary))
        (out / "plot_summary.py").write_text(emit_plot_script(out / "summary.csv", cfg.kind))
        res.output_dir = out
    return res


__all__ = [
    "ExperimentConfig", "ExperimentResult", "Kind", "RunRecord", "SigmaRule", "emit_plot_script",
    "preset", "run_experiment", "runs_csv", "sigma_for", "summarize", "summary_csv", "verify_summary",
    "version_string", "worker_count",
]
