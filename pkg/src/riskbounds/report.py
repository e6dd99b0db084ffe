"""Report assembly and persistence.

A report echoes its full effective configuration, every pipeline
tabulation, the coverage rows, and the per-level plot series, all in one
JSON document.  Serialization is canonical (sorted keys, shortest
round-trip float text, no timestamps) so identical runs produce identical
bytes.  The trial stream is one JSON record per line.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .config import ExperimentConfig, parse_config
from .montecarlo import (
    BoundPipeline,
    ConvexDiagnostics,
    RunResult,
    SelectionPipeline,
)


def _finite(x: float):
    return None if x is None or math.isinf(x) or math.isnan(x) else float(x)


def _pipeline_dict(pipeline: BoundPipeline) -> dict:
    return {
        "margin_radius": pipeline.radius.to_dict(),
        "ez": {
            "grid": pipeline.ez.grid.tolist(),
            "mean": pipeline.ez.mean.tolist(),
            "std_error": pipeline.ez.std_error.tolist(),
            "reps": pipeline.ez.reps,
        },
        "ez_inflated": pipeline.ez_inflated.to_dict(),
        "deviation_budget": pipeline.budget.to_dict(),
        "budget_at_radius": pipeline.budget_at_radius.to_dict(),
        "majorant": pipeline.majorant.to_dict(),
        "conjugate": pipeline.conjugate.to_dict(),
        "excess_risk_bound": pipeline.risk_bound.to_dict(),
        "envelope": pipeline.envelope.to_dict(),
        "envelope_conjugate": pipeline.envelope_conjugate.to_dict(),
    }


def _convex_dict(diag: ConvexDiagnostics) -> dict:
    return {
        "deviation_check": {
            "ok": diag.deviation_check.ok,
            "worst_member": diag.deviation_check.worst_member,
            "worst_state": diag.deviation_check.worst_state,
            "worst_gap": diag.deviation_check.worst_gap,
        },
        "margin_check": {
            "ok": diag.margin_check.ok,
            "worst_member": diag.margin_check.worst_member,
            "worst_gap": diag.margin_check.worst_gap,
        },
        "norm_radius": diag.radius_fn.to_dict(),
        "critical_radius": _finite(diag.critical_radius),
        "eta_n": diag.eta_n,
        "contraction_ok": diag.contraction_ok,
        "preconditions_ok": diag.ok,
    }


def _selection_dict(sel: SelectionPipeline) -> dict:
    return {
        "umbrella_envelope": sel.umbrella_envelope.to_dict(),
        "umbrella_conjugate": sel.umbrella_conjugate.to_dict(),
        "model_envelopes": [e.to_dict() for e in sel.model_envelopes],
        "model_conjugates": [c.to_dict() for c in sel.model_conjugates],
    }


def build_report(result: RunResult) -> dict:
    doc = {
        "config": result.config.to_dict(),
        "scale": result.bundle.scale,
        "pipeline": _pipeline_dict(result.pipeline),
        "convex": None if result.convex is None else _convex_dict(result.convex),
        "selection": None if result.selection is None else _selection_dict(result.selection),
        "suites": {name: cov.to_dict() for name, cov in result.coverage.items()},
        "series": result.series,
    }
    if result.z_sigma is not None:
        doc["trial_z_sigma"] = result.z_sigma.tolist()
    if result.bundle.family is not None:
        doc["t_schedule"] = list(result.bundle.family.t_schedule)
    return doc


def build_bound_report(config: ExperimentConfig, bundle, pipeline: BoundPipeline,
                       convex: ConvexDiagnostics | None = None) -> dict:
    return {
        "config": config.to_dict(),
        "scale": bundle.scale,
        "pipeline": _pipeline_dict(pipeline),
        "convex": None if convex is None else _convex_dict(convex),
        "selection": None,
        "suites": {},
        "series": {},
    }


def dumps_report(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_report(doc: dict, path: str | Path) -> None:
    Path(path).write_text(dumps_report(doc))


def load_report(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed report: {e.msg} (line {e.lineno})") from e
    for key in ("config", "pipeline", "suites", "series"):
        if key not in doc:
            raise ValueError(f"malformed report: missing {key!r}")
    return doc


def echoed_config(doc: dict) -> ExperimentConfig:
    """Rebuild the experiment configuration embedded in a report."""
    return parse_config(doc["config"])


def write_trial_stream(records, path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def write_series_files(doc: dict, out_dir: str | Path) -> list[Path]:
    """Emit the two-column plot series of a report; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, xs, ys):
        path = out / f"{name}.txt"
        with open(path, "w") as fh:
            for x, y in zip(xs, ys):
                fh.write(f"{float(x)!r} {float(y)!r}\n")
        written.append(path)

    pipeline = doc["pipeline"]
    emit("ez", pipeline["ez"]["grid"], pipeline["ez"]["mean"])
    emit("psi", pipeline["majorant"]["grid"], pipeline["majorant"]["values"])
    for suite, series in sorted(doc.get("series", {}).items()):
        emit(f"{suite}_bound", series["delta"], series["bound"])
        emit(f"{suite}_frequency", series["delta"], series["frequency"])
    return written
