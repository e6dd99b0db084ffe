"""Command-line surface: bound, simulate, select, plotdata.

Exit codes are a stable contract: 0 success, 2 config or input error,
3 vacuous-only output, 4 coverage violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .fixtures import build_bundle
from .measures import DiscreteDistribution, EmpiricalMeasure, Sample
from .montecarlo import (
    ROLE_PRIMARY,
    ROLE_SPLIT,
    StreamKey,
    build_bound_pipeline,
    build_selection_pipeline,
    convex_diagnostics,
    draw_sample,
    run_suite,
)
from .report import (
    build_bound_report,
    build_report,
    load_report,
    write_report,
    write_series_files,
    write_trial_stream,
)
from .selection import (
    fit_models,
    oracle_inequality_check,
    penalty_schedule,
    penalty_validity_event,
    select_model,
    split_event_check,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VACUOUS = 3
EXIT_VIOLATION = 4


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    seed = getattr(args, "seed", None)
    if seed is not None and seed < 0:
        raise ConfigError("seed must be nonnegative", "seed")
    trials = getattr(args, "trials", None)
    if trials is not None and trials < 1:
        raise ConfigError("trials must be at least 1", "trials")
    suites = getattr(args, "suite", None)
    return config.override(
        seed=seed, trials=trials, suites=tuple(suites) if suites else None
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_bound(args) -> int:
    config = _load(args)
    bundle = build_bundle(config)
    sim = config.simulation
    pipeline = build_bound_pipeline(
        bundle.distribution,
        bundle.function_class,
        bundle.params,
        sim.delta_grid.build(),
        sim.sigma_grid.build(),
        sim.reps,
        sim.master_seed,
    )
    convex = None
    if bundle.function_class.kind == "parametric":
        convex = convex_diagnostics(
            bundle.distribution,
            bundle.function_class,
            bundle.params.eta_n,
            pipeline.risk_bound.value,
        )
    doc = build_bound_report(config, bundle, pipeline, convex)
    out = _out_dir(args)
    write_report(doc, out / "report.json")

    rb = pipeline.risk_bound
    value = "inf" if rb.value == float("inf") else f"{rb.value:.6g}"
    print(f"excess risk bound: {value} (tail <= {rb.tail_prob:.6g}, vacuous={rb.vacuous})")
    if convex is not None:
        print(
            f"critical norm radius: {convex.critical_radius:.6g} "
            f"(eta_n/2 = {convex.eta_n / 2:.6g}, contraction_ok={convex.contraction_ok})"
        )
    print(f"wrote {out / 'report.json'}")
    if rb.vacuous:
        print("warning: bound is vacuous at these parameters", file=sys.stderr)
        return EXIT_VACUOUS
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load(args)
    if not config.suites:
        raise ConfigError("no suites enabled", "suites")
    result = run_suite(config, workers=args.workers)
    doc = build_report(result)
    out = _out_dir(args)
    write_report(doc, out / "report.json")
    write_trial_stream(result.records, out / "trials.jsonl")

    any_violation = False
    all_vacuous = True
    for name, cov in result.coverage.items():
        status = "PASS" if cov.passed else "FAIL"
        flag = " (vacuous)" if cov.vacuous else ""
        print(
            f"suite {name}: frequency={cov.frequency:.6g} "
            f"bound={cov.bound:.6g} +3se={cov.bound + 3 * cov.std_error:.6g} "
            f"{status}{flag}"
        )
        any_violation = any_violation or not cov.passed
        all_vacuous = all_vacuous and cov.vacuous
    print(f"wrote {out / 'report.json'} and {out / 'trials.jsonl'}")
    if any_violation:
        return EXIT_VIOLATION
    if all_vacuous:
        print("warning: every enabled bound is vacuous", file=sys.stderr)
        return EXIT_VACUOUS
    return EXIT_OK


def _read_sample_file(path: str, P: DiscreteDistribution) -> Sample:
    tokens = Path(path).read_text().split()
    if not tokens:
        raise ConfigError("sample file is empty", path)
    lookup = {str(s): i for i, s in enumerate(P.states)}
    indices = []
    for tok in tokens:
        if tok not in lookup:
            raise ConfigError(f"unknown state {tok!r}", path)
        indices.append(lookup[tok])
    return Sample(np.asarray(indices, dtype=np.int64), 0)


def cmd_select(args) -> int:
    config = _load(args)
    bundle = build_bundle(config)
    if bundle.family is None:
        raise ConfigError("a models section is required for selection", "models")
    P = bundle.distribution
    family = bundle.family
    n = bundle.params.n
    seed = config.simulation.master_seed

    if args.sample is not None:
        if args.sample2 is None:
            raise ConfigError("--sample2 is required when --sample is given", "sample2")
        s1 = _read_sample_file(args.sample, P)
        s2 = _read_sample_file(args.sample2, P)
    else:
        s1 = draw_sample(P, n, StreamKey(seed, 0, ROLE_PRIMARY))
        s2 = draw_sample(P, n, StreamKey(seed, 0, ROLE_SPLIT))
    if s1.n != s2.n:
        raise ConfigError("both samples must have the same size", "sample")

    Pn = EmpiricalMeasure.from_sample(s1, P.n_states)
    Pn2 = EmpiricalMeasure.from_sample(s2, P.n_states)
    pipeline = build_selection_pipeline(P, family, s1.n)
    fits = fit_models(family, Pn, Pn2, P)
    pens = penalty_schedule(
        family, fits, Pn, Pn2, pipeline.umbrella_conjugate, list(pipeline.model_conjugates)
    )
    sel = select_model(fits, pens, Pn)
    holds, lhs, rhs = oracle_inequality_check(P, family, fits, pens, sel.k_hat)
    split_ok = split_event_check(fits, pens, family.eps)
    valid = penalty_validity_event(fits, pens, family.eps)

    def fin(x):
        return None if np.isinf(x) else float(x)

    doc = {
        "config": config.to_dict(),
        "k_hat": sel.k_hat,
        "models": [
            {
                "k": fit.k,
                "objective": fin(sel.objective[fit.k]),
                "penalty": fin(pens.total[fit.k]),
                "alpha": fin(pens.alpha[fit.k]),
                "gamma": fin(pens.gamma[fit.k]),
                "split_gap": pens.split_gap[fit.k],
                "f_hat": fit.f_hat,
                "f_hat_prime": fit.f_hat_prime,
                "f_bar": fit.f_bar,
                "excess": fit.excess,
                "excess_prime": fit.excess_prime,
                "emp_excess": fit.emp_excess,
                "emp_excess_prime": fit.emp_excess_prime,
                "split_event_holds": split_ok[fit.k],
                "penalty_vacuous": pens.vacuous[fit.k],
            }
            for fit in fits
        ],
        "oracle": {"holds": holds, "lhs": lhs, "rhs": fin(rhs)},
        "penalty_valid": valid,
    }
    out = _out_dir(args)
    (out / "selection.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")

    print("k  objective    penalty      split_gap    excess")
    for row in doc["models"]:
        obj = "inf" if row["objective"] is None else f"{row['objective']:.6f}"
        pen = "inf" if row["penalty"] is None else f"{row['penalty']:.6f}"
        print(
            f"{row['k']}  {obj:<11}  {pen:<11}  {row['split_gap']:<11.6f}  "
            f"{row['excess']:.6f}"
        )
    print(f"selected k_hat = {sel.k_hat}")
    rhs_text = "inf" if doc["oracle"]["rhs"] is None else f"{doc['oracle']['rhs']:.6g}"
    print(f"oracle inequality: lhs={lhs:.6g} rhs={rhs_text} holds={holds}")
    print(f"wrote {out / 'selection.json'}")
    return EXIT_OK


def cmd_plotdata(args) -> int:
    try:
        doc = load_report(args.report)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args)
    written = write_series_files(doc, out)
    if args.figures:
        from .plots import render_figures

        written += render_figures(doc, out)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskbounds",
        description="Excess-risk bounds and Monte Carlo coverage on finite classes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, trials=False, suites=False):
        p.add_argument("--config", required=True, help="config JSON path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        if trials:
            p.add_argument("--trials", type=int, default=None, help="override trial count")
        if suites:
            p.add_argument(
                "--suite", action="append", default=None,
                help="suite to run (repeatable): ratio erm convex split oracle",
            )

    p_bound = sub.add_parser("bound", help="run the bound pipeline without trials")
    add_common(p_bound)
    p_bound.set_defaults(func=cmd_bound)

    p_sim = sub.add_parser("simulate", help="run coverage suites")
    add_common(p_sim, trials=True, suites=True)
    p_sim.add_argument("--workers", type=int, default=1,
                       help="worker processes (results are identical for any count)")
    p_sim.set_defaults(func=cmd_simulate)

    p_sel = sub.add_parser("select", help="single-shot penalized model selection")
    add_common(p_sel)
    p_sel.add_argument("--sample", default=None, help="file of state ids (first sample)")
    p_sel.add_argument("--sample2", default=None, help="file of state ids (second sample)")
    p_sel.set_defaults(func=cmd_select)

    p_plot = sub.add_parser("plotdata", help="emit plot series and figures from a report")
    p_plot.add_argument("--report", required=True, help="report JSON path")
    p_plot.add_argument("--out", default="out", help="output directory")
    p_plot.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                        help="also render PNG figures")
    p_plot.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
