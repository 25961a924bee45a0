"""Command line entry point: ``thlasso {gen,fit,diagnose,experiment,version}``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import ThlassoError, lambda_base
from .dantzig import DantzigOptions, fit_dantzig
from .ensembles import (
    EnsembleSpec,
    RandomSource,
    TigerBetaSpec,
    gen_beta_const,
    gen_beta_spiked,
    gen_beta_tiger,
    gen_design,
    gen_observation,
)
from .estimators import gauss_dantzig, thresholded_lasso
from .harness import ExperimentConfig, preset, run_experiment, version_string
from .io import FormatError, load_matrix, load_signal, save
from .diagnostics import diagnose
from .lasso import FIT_CSV_HEADER, LassoOptions, fit_lasso


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _pair(text):
    try:
        a, b = text.split(",")
        return int(a), float(b) if "." in b else int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="thlasso", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="draw a design, coefficients and a response")
    g.add_argument("--ensemble", default="iid_gaussian", choices=["iid_gaussian", "toeplitz", "bernoulli_pm1"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--gamma", type=float)
    g.add_argument("--beta", default="spiked", choices=["spiked", "const", "tiger"])
    g.add_argument("--s", type=int, default=8)
    g.add_argument("--magnitude", type=float, default=0.9)
    g.add_argument("--a0", type=int)
    g.add_argument("--s0", type=int)
    g.add_argument("--C-a", dest="C_a", type=float, default=8.528)
    g.add_argument("--C-m", dest="C_m", type=float, default=1.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--log-base", default="natural", choices=["natural", "two"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--format", default="csv", choices=["csv", "bin"])

    f = sub.add_parser("fit", help="fit an estimator to X, Y")
    f.add_argument("--matrix", required=True)
    f.add_argument("--response", required=True)
    f.add_argument("--estimator", default="tlasso", choices=["lasso", "tlasso", "dantzig", "gauss_dantzig"])
    f.add_argument("--sigma", type=float, default=1.0)
    f.add_argument("--log-base", default="natural", choices=["natural", "two"])
    f.add_argument("--lambda", dest="lam", type=float, help="absolute penalty lambda_n")
    f.add_argument("--lambda-factor", type=float, default=0.69, help="lambda_n = factor * lambda * sigma")
    f.add_argument("--t0", type=float, help="absolute threshold")
    f.add_argument("--t0-factor", type=float, help="t0 = factor * lambda * sigma (default 1 for tlasso)")
    f.add_argument("--tol", type=float, default=1e-8)
    f.add_argument("--save-beta", help="write the coefficient estimate here")

    d = sub.add_parser("diagnose", help="sparse eigenvalues, restricted orthogonality, RE lower bounds")
    d.add_argument("--matrix", required=True)
    d.add_argument("--m", type=int, action="append", help="sparsity level (repeatable)")
    d.add_argument("--theta", type=_pair, action="append", default=[], metavar="S,S'")
    d.add_argument("--re", type=_pair, action="append", default=[], metavar="S0,K0")
    d.add_argument("--mode", default="exhaustive", choices=["exhaustive", "greedy_sampled"])
    d.add_argument("--budget", type=int, default=10**6)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--json", action="store_true")

    e = sub.add_parser("experiment", help="run a configured experiment")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset", choices=["type12", "rho2", "roc", "success", "model_size", "refit_l2",
                                          "error_curves", "diagnose"])
    e.add_argument("--full", action="store_true", help="use the full-size settings")
    e.add_argument("--out")
    e.add_argument("--reps", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--workers", type=int)

    sub.add_parser("version", help="print version, git revision and RNG algorithm")
    return ap


def _cmd_gen(a) -> int:
    rs = RandomSource(a.seed)
    X = gen_design(EnsembleSpec(a.ensemble, a.n, a.p, a.gamma), rs.stream(0))
    if a.beta == "spiked":
        beta = gen_beta_spiked(a.p, a.s, rs.stream(1))
    elif a.beta == "const":
        beta = gen_beta_const(a.p, a.s, a.magnitude, rs.stream(1))
    else:
        if a.a0 is None or a.s0 is None:
            raise UsageError("tiger coefficients need --a0 and --s0")
        ls = lambda_base(a.p, a.n, a.log_base) * a.sigma
        beta = gen_beta_tiger(TigerBetaSpec(a.p, a.a0, a.s0, ls, a.C_a, a.C_m, s=a.s), rs.stream(1))
    Y = gen_observation(X, beta, a.sigma, rs.stream(2))
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if a.format == "csv" else ".thlx"
    save(X, out / f"X{ext}")
    save(beta, out / f"beta{ext}")
    save(Y, out / f"Y{ext}")
    print(f"wrote X{ext}, beta{ext}, Y{ext} to {out}")
    return 0


def _cmd_fit(a) -> int:
    X = load_matrix(a.matrix).data
    Y = load_signal(a.response).coef
    n, p = X.shape
    ls = lambda_base(p, n, a.log_base) * a.sigma
    lam = a.lam if a.lam is not None else a.lambda_factor * ls
    t0 = a.t0
    if t0 is None and a.t0_factor is not None:
        t0 = a.t0_factor * ls
    if a.estimator == "lasso":
        fit = fit_lasso(X, Y, lam, LassoOptions(tol=a.tol))
        print(",".join(FIT_CSV_HEADER))
        print(",".join(map(str, fit.csv_row())))
        beta = fit.beta
    elif a.estimator == "dantzig":
        fit = fit_dantzig(X, Y, lam, DantzigOptions())
        print(",".join(FIT_CSV_HEADER))
        print(",".join(map(str, fit.csv_row())))
        beta = fit.beta
    elif a.estimator == "tlasso":
        res = thresholded_lasso(X, Y, lam, ls if t0 is None else t0, LassoOptions(tol=a.tol))
        print(res.to_json())
        beta = res.beta_hat
    else:
        res = gauss_dantzig(X, Y, a.sigma, t0=t0, log_base=a.log_base)
        print(res.to_json())
        beta = res.beta_hat
    if a.save_beta:
        save(np.asarray(beta), a.save_beta)
    return 0


def _cmd_diagnose(a) -> int:
    X = load_matrix(a.matrix).data
    rep = diagnose(X, ms=a.m or [1, 2], theta_pairs=a.theta, re_pairs=a.re, mode=a.mode,
                   budget=a.budget, rng=a.seed)
    print(rep.to_json() if a.json else rep.table())
    return 0


def _cmd_experiment(a) -> int:
    if a.config:
        try:
            cfg = ExperimentConfig.from_json(Path(a.config).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
    else:
        cfg = preset(a.preset)
    if a.full:
        cfg = cfg.with_full()
    if a.reps is not None:
        cfg.reps = a.reps
    if a.seed is not None:
        cfg.master_seed = a.seed
    out = a.out or cfg.output_dir or f"runs/{cfg.kind.value}-{cfg.config_hash()}"
    res = run_experiment(cfg, workers=a.workers, output_dir=out)
    failed = sum(r.status != "ok" for r in res.records)
    print(f"{len(res.records)} runs ({failed} failed), {len(res.summary)} summary rows -> {res.output_dir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"gen": _cmd_gen, "fit": _cmd_fit, "diagnose": _cmd_diagnose, "experiment": _cmd_experiment}
    try:
        if a.cmd == "version":
            sys.stdout.write(version_string())
            return 0
        return handlers[a.cmd](a)
    except UsageError as exc:
        print(f"thlasso: error: {exc}", file=sys.stderr)
        return 1
    except (ThlassoError, FormatError, ValueError, OSError) as exc:
        print(f"thlasso: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
