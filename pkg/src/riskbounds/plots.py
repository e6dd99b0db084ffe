"""Figure rendering for report documents.

Renders the same series that go into the delimited text files: coverage
(bound vs empirical violation frequency per level), the expected-supremum
estimate, and the majorant over its input.  Files are PNG, one per figure.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_figures(doc: dict, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    pipeline = doc["pipeline"]

    fig, ax = plt.subplots(figsize=(6, 4))
    ez = pipeline["ez"]
    ax.plot(ez["grid"], ez["mean"], label="estimate")
    infl = pipeline["ez_inflated"]
    ax.plot(infl["grid"], infl["values"], "--", label="estimate + 2 SE")
    ax.set_xscale("log")
    ax.set_xlabel("sigma")
    ax.set_ylabel("expected supremum")
    ax.legend()
    fig.tight_layout()
    path = out / "ez.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    bar = pipeline["budget_at_radius"]
    psi = pipeline["majorant"]
    ax.plot(bar["grid"], bar["values"], label="deviation budget at radius")
    ax.plot(psi["grid"], psi["values"], label="concave majorant")
    ax.set_xscale("log")
    ax.set_xlabel("excess level")
    ax.legend()
    fig.tight_layout()
    path = out / "psi.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    for suite, series in sorted(doc.get("series", {}).items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(series["delta"], series["bound"], label="theoretical bound")
        ax.step(series["delta"], series["frequency"], where="post",
                label="empirical frequency")
        row = doc["suites"].get(suite, {})
        marker = row.get("excess_bound") if suite in ("erm", "convex") else row.get("delta")
        if marker is not None:
            ax.axvline(marker, color="gray", linestyle=":", label="bound level")
        ax.set_xscale("log")
        ax.set_xlabel("excess level")
        ax.set_ylabel("probability")
        ax.set_title(f"{suite} coverage")
        ax.legend()
        fig.tight_layout()
        path = out / f"{suite}_coverage.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    if doc.get("suites"):
        fig, ax = plt.subplots(figsize=(6, 4))
        names = sorted(doc["suites"])
        freqs = [doc["suites"][s]["frequency"] for s in names]
        bounds = [doc["suites"][s]["bound"] for s in names]
        xs = range(len(names))
        ax.bar([x - 0.2 for x in xs], freqs, width=0.4, label="frequency")
        ax.bar([x + 0.2 for x in xs], bounds, width=0.4, label="bound")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(names)
        ax.set_ylabel("probability")
        ax.legend()
        fig.tight_layout()
        path = out / "coverage_summary.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
