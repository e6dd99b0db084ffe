"""Acceptance gate: every shipped guarantee at its stated tolerance.

Each test prints one pass/fail line (run with ``pytest -s`` to see them all).
The heavy Monte Carlo runs are shared module-scope fixtures so the whole
gate stays well inside its runtime budget.
"""

import json
import math
import time

import numpy as np
import pytest

from riskbounds import cli
from riskbounds.config import ExperimentConfig, SimulationSpec
from riskbounds.fixtures import build_bundle
from riskbounds.margin import invert_increasing, legendre_conjugate, majorant_knots
from riskbounds.measures import EmpiricalMeasure, mean, risk_minimizer
from riskbounds.montecarlo import (
    ROLE_PRIMARY,
    ROLE_SPLIT,
    StreamKey,
    build_selection_pipeline,
    draw_sample,
    estimate_EZ,
    run_suite,
)
from riskbounds.selection import fit_models, penalty_schedule, select_model
from riskbounds.tabulated import TabulatedFunction

TRIALS = 10_000
REPS = 10_000
SEED = 20060415


def check(num: int, name: str, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num} ({name}): {detail} -> {status}")
    assert ok, f"acceptance {num} ({name}): {detail}"


@pytest.fixture(scope="module")
def class_run():
    cfg = ExperimentConfig(
        fixture="random20",
        suites=("ratio", "erm"),
        simulation=SimulationSpec(trials=TRIALS, reps=REPS, master_seed=SEED),
    )
    start = time.monotonic()
    result = run_suite(cfg)
    return result, time.monotonic() - start


@pytest.fixture(scope="module")
def convex_run():
    cfg = ExperimentConfig(
        fixture="quadratic",
        suites=("convex",),
        simulation=SimulationSpec(trials=TRIALS, reps=REPS, master_seed=SEED),
    )
    start = time.monotonic()
    result = run_suite(cfg)
    return result, time.monotonic() - start


@pytest.fixture(scope="module")
def model_run():
    cfg = ExperimentConfig(
        fixture="nested3",
        suites=("split", "oracle"),
        simulation=SimulationSpec(trials=TRIALS, reps=2000, master_seed=SEED),
    )
    start = time.monotonic()
    result = run_suite(cfg)
    return result, time.monotonic() - start


def test_criterion_1_ratio_coverage(class_run):
    result, elapsed = class_run
    cov = result.coverage["ratio"]
    delta = cov.extra["delta"]
    # the level is at least the smallest nonzero excess of the fixture
    assert delta >= result.ratio_delta
    within = cov.frequency <= cov.bound + 3.0 * cov.std_error
    ok = (cov.vacuous or within) and elapsed <= 120.0
    check(
        1,
        "ratio coverage",
        ok,
        f"freq={cov.frequency:.5f} bound={cov.bound:.5f} se={cov.std_error:.5f} "
        f"vacuous={cov.vacuous} elapsed={elapsed:.1f}s",
    )


def test_criterion_2_erm_bound_coverage(class_run):
    result, elapsed = class_run
    cov = result.coverage["erm"]
    rb = result.pipeline.risk_bound
    # the level came through the full estimate -> budget -> majorant ->
    # conjugate pipeline, not from a shortcut
    assert cov.extra["excess_bound"] == pytest.approx(rb.value)
    assert rb.conjugate_at_inv_eps >= 0.0
    within = cov.vacuous or cov.frequency <= cov.bound + 3.0 * cov.std_error
    ok = within and elapsed <= 300.0
    check(
        2,
        "erm excess-risk coverage",
        ok,
        f"freq={cov.frequency:.5f} bound={cov.bound:.5f} level={rb.value:.5f} "
        f"vacuous={cov.vacuous} elapsed={elapsed:.1f}s",
    )


def test_criterion_3_convex_parametric_coverage(convex_run):
    result, _ = convex_run
    diag = result.convex
    cov = result.coverage["convex"]
    preconditions = (
        diag.deviation_check.ok and diag.margin_check.ok and diag.contraction_ok
    )
    within = cov.vacuous or cov.frequency <= cov.bound + 3.0 * cov.std_error
    ok = preconditions and within
    check(
        3,
        "convex-parametric coverage",
        ok,
        f"checks=(dev={diag.deviation_check.ok}, margin={diag.margin_check.ok}, "
        f"contraction={diag.contraction_ok}) freq={cov.frequency:.5f} "
        f"bound={cov.bound:.5f}",
    )


def test_criterion_4_split_penalty_coverage(model_run):
    result, _ = model_run
    cov = result.coverage["split"]
    sched = result.bundle.family.t_schedule
    assert sched == tuple(2.0 + math.log(3) for _ in range(3))
    assert cov.bound_raw == pytest.approx(math.exp(-2.0), abs=1e-12)
    ok = cov.vacuous or cov.frequency <= cov.bound + 3.0 * cov.std_error
    check(
        4,
        "split-penalty coverage",
        ok,
        f"freq={cov.frequency:.5f} bound={cov.bound:.5f} se={cov.std_error:.5f}",
    )


def test_criterion_5_oracle_inequality_coverage(model_run):
    result, _ = model_run
    cov = result.coverage["oracle"]
    vfreq = cov.extra["validity_failure_frequency"]
    limit = cov.extra["union_tail"] + vfreq + 3.0 * cov.std_error
    ok = cov.vacuous or cov.frequency <= limit
    check(
        5,
        "oracle-inequality coverage",
        ok,
        f"freq={cov.frequency:.5f} union={cov.extra['union_tail']:.5f} "
        f"validity_fail={vfreq:.5f}",
    )


def test_criterion_6_conjugate_oracle():
    rng = np.random.Generator(np.random.Philox(606))
    worst = 0.0
    for _ in range(10):
        m = int(rng.integers(3, 30))
        du = rng.uniform(0.02, 0.3, size=m)
        u = np.concatenate([[0.0], np.cumsum(du)])
        slopes = np.sort(rng.uniform(0.05, 3.0, size=m))
        g = np.concatenate([[0.0], np.cumsum(slopes * du)])
        G = TabulatedFunction(u, g)
        v = np.unique(np.concatenate([np.linspace(0, slopes[-1], 201), slopes]))
        H = legendre_conjugate(G, v)
        brute = np.array([max(ui * vj - gi for ui, gi in zip(u, g)) for vj in H.grid])
        gap = float(np.max(np.abs(H.values - brute)))
        tol = 2.0 * float(np.max(np.diff(u))) * slopes[-1]
        worst = max(worst, gap / max(tol, 1e-300))
        assert gap <= tol

    # analytic pairs at grid resolution
    u = np.linspace(0, 1, 257)
    h_sq = legendre_conjugate(TabulatedFunction(u, u**2), np.linspace(0, 1.8, 91))
    err_sq = float(np.max(np.abs(h_sq.values - h_sq.grid**2 / 4)))
    u2 = np.linspace(0, 2, 513)
    h_self = legendre_conjugate(TabulatedFunction(u2, u2**2 / 2), np.linspace(0, 1.9, 77))
    err_self = float(np.max(np.abs(h_self.values - h_self.grid**2 / 2)))
    h_lin = legendre_conjugate(TabulatedFunction(u, u.copy()), np.linspace(0, 0.9, 10))
    lin_ok = bool(np.all(np.abs(h_lin.values) <= 1e-12) and h_lin(2.0) == np.inf)
    step = u[1] - u[0]
    ok = err_sq <= step**2 and err_self <= (u2[1] - u2[0]) ** 2 and lin_ok
    check(
        6,
        "conjugate oracle",
        ok,
        f"brute-force worst ratio={worst:.3f} analytic errors=({err_sq:.2e}, "
        f"{err_self:.2e}) linear={lin_ok}",
    )


def test_criterion_7_exact_enumeration_oracle():
    from riskbounds.fixtures import two_state

    fx = two_state()
    n = 100
    grid = np.array([0.1, 0.2, 0.5, 1.0])
    est = estimate_EZ(fx.distribution, fx.function_class, n, grid, REPS, SEED)

    def exact(sigma: float) -> float:
        if sigma < 0.2:
            return 0.0
        return sum(
            math.comb(n, c) * 0.5**n * abs(0.4 * c / n - 0.2) for c in range(n + 1)
        )

    worst = 0.0
    ok = True
    for j, sig in enumerate(grid):
        gap = abs(est.mean[j] - exact(float(sig)))
        se = max(est.std_error[j], 1e-15)
        worst = max(worst, gap / se if se > 1e-14 else gap)
        ok = ok and gap <= 3.0 * se + 1e-14
    check(7, "exact enumeration oracle", ok, f"worst gap={worst:.2f} SE units")


def test_criterion_8_structural_identities(class_run):
    result, _ = class_run
    pipeline = result.pipeline

    # the majorant dominates its input pointwise on the grid
    dominates = bool(np.all(pipeline.majorant.values >= pipeline.budget_at_radius.values))

    # Fenchel-Young across the full grids of the inverse and its conjugate
    inverse = invert_increasing(majorant_knots(pipeline.budget_at_radius))
    H = pipeline.conjugate
    prod = inverse.grid[:, None] * H.grid[None, :]
    fy = bool(np.all(prod <= inverse.values[:, None] + H.values[None, :] + 1e-9))

    # penalty identity and excess decomposition, exact per trial
    cfg = ExperimentConfig(
        fixture="nested3",
        suites=("split", "oracle"),
        simulation=SimulationSpec(trials=300, reps=200, master_seed=SEED),
    )
    bundle = build_bundle(cfg)
    P, family = bundle.distribution, bundle.family
    n = bundle.params.n
    sel_pipe = build_selection_pipeline(P, family, n)
    f_star = risk_minimizer(P, family.umbrella)
    star_risk = mean(P, family.umbrella.member(f_star))
    identity_exact = True
    decomposition_gap = 0.0
    for i in range(300):
        Pn = EmpiricalMeasure.from_sample(
            draw_sample(P, n, StreamKey(SEED, i, ROLE_PRIMARY)), P.n_states
        )
        Pn2 = EmpiricalMeasure.from_sample(
            draw_sample(P, n, StreamKey(SEED, i, ROLE_SPLIT)), P.n_states
        )
        fits = fit_models(family, Pn, Pn2, P)
        pens = penalty_schedule(
            family, fits, Pn, Pn2,
            sel_pipe.umbrella_conjugate, list(sel_pipe.model_conjugates),
        )
        for k in range(family.n_models):
            if pens.total[k] != pens.split_gap[k] + pens.alpha[k] + 2.0 * pens.gamma[k]:
                identity_exact = False
        k_hat = select_model(fits, pens, Pn).k_hat
        fit = fits[k_hat]
        model = family.models[k_hat]
        overall = mean(P, model.member(fit.f_hat)) - star_risk
        bias = mean(P, model.member(fit.f_bar)) - star_risk
        decomposition_gap = max(decomposition_gap, abs(overall - (fit.excess + bias)))

    ok = dominates and fy and identity_exact and decomposition_gap <= 1e-14
    check(
        8,
        "structural identities",
        ok,
        f"dominates={dominates} fenchel_young={fy} penalty_identity={identity_exact} "
        f"decomposition_gap={decomposition_gap:.2e}",
    )


def test_criterion_9_byte_identical_runs(tmp_path):
    doc = {
        "fixture": "nested3",
        "simulation": {"trials": 600, "reps": 300, "master_seed": 17},
        "suites": ["split", "oracle"],
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(doc))
    outs = {}
    for name, workers in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / name
        rc = cli.main(["simulate", "--config", str(cfg), "--out", str(out),
                       "--workers", workers])
        assert rc == 0
        outs[name] = (
            (out / "report.json").read_bytes(),
            (out / "trials.jsonl").read_bytes(),
        )
    identical_rerun = outs["a"] == outs["b"]
    identical_workers = outs["a"] == outs["c"]
    ok = identical_rerun and identical_workers
    check(
        9,
        "deterministic byte-identical output",
        ok,
        f"rerun={identical_rerun} worker_count={identical_workers}",
    )
