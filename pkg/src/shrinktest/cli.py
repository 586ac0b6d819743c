"""Command-line interface: ``shrinktest <subcommand>``.

Exit codes: 0 on success, 2 on validation errors (bad arguments or
config), 3 on numeric failures (quadrature breakdown, degenerate
threshold searches).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .adaptive import (
    adaptive_bayes_risk_bound,
    adaptive_bayes_risk_mc,
    horseshoe_family,
    simple_count_estimator,
    verify_condition4,
)
from .harness import ConfigError, ResultTable, RISK_COLUMNS, load_config, run_experiment
from .priors import (
    DegenerateSparsityError,
    certify_prior,
    check_condition2,
    check_condition3,
    parse_prior_spec,
)
from .risk import (
    bayes_risk_analytic,
    bayes_risk_bound,
    calibrate_signal_offset,
    fdr_fnr_mc,
    flat_signal,
    minimax_risk_bound,
    miss_probability,
    null_rejection_rate,
    oracle_risk,
    separation_rate,
    two_group_risk_mc,
)
from .shrinkage import ShrinkageCurve
from .testing import TwoGroupModel, threshold_test

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

# AlwaysReject, NoCrossing and QuadratureError are RuntimeErrors; the
# monotonicity refusal raises a plain one.
_NUMERIC_ERRORS = (RuntimeError, ZeroDivisionError, FloatingPointError)
_VALIDATION_ERRORS = (ConfigError, DegenerateSparsityError, ValueError, KeyError, OSError)


def _parse_x_values(text: str) -> list[float]:
    """Accept '0,0.5,1' or 'start:stop:step' (stop inclusive up to rounding)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range form must be start:stop:step")
        start, stop, step = (float(v) for v in parts)
        if step <= 0:
            raise ValueError("step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(max(count, 1))]
    return [float(v) for v in text.split(",") if v.strip()]


def _emit(table: ResultTable, out: str | None) -> None:
    if out:
        table.write(out)
    else:
        sys.stdout.write(table.csv_text())


def _emit_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (no clock seeding)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for replicates")
    common.add_argument("--out", default=None, help="output path (default: stdout)")

    parser = argparse.ArgumentParser(prog="shrinktest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_mx = sub.add_parser("mx", parents=[common], help="shrinkage weight curve as CSV")
    p_mx.add_argument("--prior", required=True, help="family:key=value,... prior spec")
    p_mx.add_argument("--x", required=True, help="comma list or start:stop:step")

    p_thr = sub.add_parser("threshold", parents=[common], help="decision threshold x*(alpha)")
    p_thr.add_argument("--prior", required=True)
    p_thr.add_argument("--alpha", type=float, default=0.5)

    p_test = sub.add_parser("test", parents=[common], help="run the threshold test on a data file")
    p_test.add_argument("--prior", required=True)
    p_test.add_argument("--alpha", type=float, default=0.5)
    p_test.add_argument("--input", required=True, help="one observation per line")

    p_check = sub.add_parser("check-prior", parents=[common], help="condition certificates as JSON")
    p_check.add_argument("--prior", required=True)

    p_rb = sub.add_parser("risk-bayes", parents=[common], help="two-group risk report as CSV")
    p_rb.add_argument("--prior", required=True)
    p_rb.add_argument("--n", type=int, required=True)
    p_rb.add_argument("--p", type=float, required=True)
    p_rb.add_argument("--c-psi", type=float, default=1.0)
    p_rb.add_argument("--alpha", type=float, default=0.5)
    p_rb.add_argument("--draws", type=int, default=100000, help="0 disables the MC cross-check")

    p_rm = sub.add_parser("risk-minimax", parents=[common], help="FDR+FNR risk report as CSV")
    p_rm.add_argument("--prior", required=True)
    p_rm.add_argument("--alpha", type=float, default=0.5)
    p_rm.add_argument("--v-n", type=float, default=3.0)
    p_rm.add_argument("--c1", default="auto", help="'auto' calibrates on a weight grid")
    p_rm.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p_rm.add_argument("--replicates", type=int, default=200)
    p_rm.add_argument("--magnitude", type=float, default=None,
                      help="override the signal magnitude (default: separation rate)")

    p_ad = sub.add_parser("adaptive", parents=[common], help="plug-in pipeline verification as JSON")
    p_ad.add_argument("--estimator", choices=["simple"], default="simple")
    p_ad.add_argument("--prior-family", choices=["horseshoe"], default="horseshoe")
    p_ad.add_argument("--n", type=int, required=True)
    p_ad.add_argument("--p", type=float, required=True)
    p_ad.add_argument("--c-psi", type=float, default=1.0)
    p_ad.add_argument("--alpha", type=float, default=0.5)
    p_ad.add_argument("--replicates", type=int, default=1000)
    p_ad.add_argument("--risk-replicates", type=int, default=200)
    p_ad.add_argument("--c-u", type=float, default=2.0)
    p_ad.add_argument("--zeta", type=float, default=0.0)

    p_sim = sub.add_parser("simulate", parents=[common], help="run an experiment config file")
    p_sim.add_argument("--config", required=True)

    return parser


def _cmd_mx(args) -> int:
    prior = parse_prior_spec(args.prior)
    curve = ShrinkageCurve(prior)
    table = ResultTable(["x", "m_x", "posterior_mean"])
    for x in _parse_x_values(args.x):
        m = curve.weight(x)
        table.append(x=x, m_x=m, posterior_mean=m * x)
    _emit(table, args.out)
    return EXIT_OK


def _cmd_threshold(args) -> int:
    curve = ShrinkageCurve(parse_prior_spec(args.prior))
    x_star = curve.decision_threshold(args.alpha)
    _emit_text(f"{x_star!r}\n", args.out)
    return EXIT_OK


def _cmd_test(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        data = [float(line) for line in fh if line.strip()]
    curve = ShrinkageCurve(parse_prior_spec(args.prior))
    decisions = threshold_test(curve, np.array(data), args.alpha)
    table = ResultTable(["index", "x", "decision"])
    for i, (x, d) in enumerate(zip(data, decisions.decisions)):
        table.append(index=i, x=x, decision=int(d))
    _emit(table, args.out)
    return EXIT_OK


def _cmd_check_prior(args) -> int:
    prior = parse_prior_spec(args.prior)
    records = [cert.to_record() for cert in certify_prior(prior)]
    _emit_text(json.dumps(records, indent=2, allow_nan=True) + "\n", args.out)
    return EXIT_OK


def _cmd_risk_bayes(args) -> int:
    prior = parse_prior_spec(args.prior)
    model = TwoGroupModel.from_c_psi(args.n, args.p, args.c_psi)
    curve = ShrinkageCurve(prior)
    x_star = curve.decision_threshold(args.alpha)
    analytic = bayes_risk_analytic(model, x_star)
    c = check_condition2(prior).estimated_constant
    big_c = check_condition3(prior).estimated_constant
    bound = bayes_risk_bound(prior, model, args.alpha, big_c, c)
    table = ResultTable(["row_type"] + RISK_COLUMNS)
    base = dict(n=model.n, p=model.p_n, alpha=args.alpha, x_star=x_star,
                oracle_risk=oracle_risk(model), bound=bound, seed=args.seed)
    table.append(
        row_type="analytic",
        type1=analytic.type1, type2=analytic.type2, bayes_risk=analytic.bayes_risk,
        se_type1=0.0, se_type2=0.0, se_bayes_risk=0.0, **base,
    )
    if args.draws > 0:
        mc = two_group_risk_mc(model, x_star, draws=args.draws, seed=args.seed,
                               threads=args.threads)
        table.append(
            row_type="mc",
            type1=mc.type1, type2=mc.type2, bayes_risk=mc.bayes_risk,
            se_type1=mc.se("type1"), se_type2=mc.se("type2"),
            se_bayes_risk=mc.se("bayes_risk"), **base,
        )
    _emit(table, args.out)
    return EXIT_OK


def _cmd_risk_minimax(args) -> int:
    prior = parse_prior_spec(args.prior)
    curve = ShrinkageCurve(prior)
    x_star = curve.decision_threshold(args.alpha)
    c = check_condition2(prior).estimated_constant
    big_c = check_condition3(prior).estimated_constant
    bound = minimax_risk_bound(args.lam, args.alpha, big_c, c, args.v_n)
    if args.magnitude is not None:
        rho = args.magnitude
    else:
        c1 = calibrate_signal_offset(curve, args.alpha) if args.c1 == "auto" else float(args.c1)
        rho = separation_rate(prior, c1=c1, v_n=args.v_n)
    n, p = prior.n, int(round(prior.p))
    report = fdr_fnr_mc(curve, flat_signal(n, p, rho), args.alpha,
                        replicates=args.replicates, seed=args.seed, threads=args.threads)
    table = ResultTable(["row_type", "magnitude"] + RISK_COLUMNS)
    table.append(
        row_type="aggregate", magnitude=rho,
        n=n, p=float(p), alpha=args.alpha, x_star=x_star,
        type1=null_rejection_rate(x_star), type2=miss_probability(x_star, rho),
        fdr=report.fdr, fnr=report.fnr, rsup=report.rsup, bound=bound,
        se_fdr=report.se("fdr"), se_fnr=report.se("fnr"), se_rsup=report.se("rsup"),
        seed=args.seed,
    )
    _emit(table, args.out)
    return EXIT_OK


def _cmd_adaptive(args) -> int:
    model = TwoGroupModel.from_c_psi(args.n, args.p, args.c_psi)
    prior = horseshoe_family(args.n, args.p)
    cond4 = verify_condition4(
        simple_count_estimator, model, c_u=args.c_u, zeta=args.zeta,
        replicates=args.replicates, seed=args.seed, threads=args.threads,
    )
    risk = adaptive_bayes_risk_mc(
        horseshoe_family, model, args.alpha,
        replicates=args.risk_replicates, seed=args.seed, threads=args.threads,
    )
    c = check_condition2(prior).estimated_constant
    big_c = check_condition3(prior).estimated_constant
    bound = adaptive_bayes_risk_bound(prior, model, args.alpha, big_c, c,
                                      args.c_u, args.zeta)
    record = {
        "condition4": cond4.to_record(),
        "risk": {
            "bayes_risk": risk.bayes_risk,
            "se_bayes_risk": risk.se("bayes_risk"),
            "replicates": risk.n_replicates,
            "bound": bound,
            "oracle_risk": oracle_risk(model),
        },
        "seed": args.seed,
    }
    _emit_text(json.dumps(record, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.out:
        from dataclasses import replace
        config = replace(config, out=args.out)
    table = run_experiment(config)
    if not config.out:
        sys.stdout.write(table.csv_text())
    return EXIT_OK


_COMMANDS = {
    "mx": _cmd_mx,
    "threshold": _cmd_threshold,
    "test": _cmd_test,
    "check-prior": _cmd_check_prior,
    "risk-bayes": _cmd_risk_bayes,
    "risk-minimax": _cmd_risk_minimax,
    "adaptive": _cmd_adaptive,
    "simulate": _cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
