"""Figure rendering for experiment reports.

Each figure is drawn from one of the CSV tables written next to it, so the
images carry no information of their own; regenerate them from the tables
if a different style is needed.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def metric_figure(rows: list[dict], path: str) -> None:
    """Per-replication KS and WD with their means."""
    reps = [r["rep"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(8, 3))
    for ax, key, label in zip(axes, ("ks", "wd"), ("KS", "WD")):
        vals = [r[key] for r in rows]
        ax.plot(reps, vals, "o", ms=4, alpha=0.7)
        mean = sum(vals) / len(vals)
        ax.axhline(mean, color="C3", lw=1, label=f"mean {mean:.4f}")
        ax.set_xlabel("replication")
        ax.set_ylabel(label)
        ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def sweep_figures(summary: list[dict], path_accuracy: str, path_time: str) -> None:
    """Accuracy-vs-grid-size and fit-time breakdown across the sweep."""
    variants = sorted({r["variant"] for r in summary})
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for variant in variants:
        rows = [r for r in summary if r["variant"] == variant]
        rows.sort(key=lambda r: r["grid_points"])
        x = [r["grid_points"] for r in rows]
        y = [r["ks_mean"] for r in rows]
        err = [r["ks_se"] for r in rows]
        ax.errorbar(x, y, yerr=err, marker="o", ms=4, capsize=2, label=variant)
    ax.set_xlabel("grid points")
    ax.set_ylabel("KS")
    ax.legend(frameon=False)
    _save(fig, path_accuracy)

    fig, ax = plt.subplots(figsize=(5, 3.4))
    herm = sorted(
        (r for r in summary if r["variant"] == "hermite"), key=lambda r: r["grid_points"]
    )
    lin = sorted(
        (r for r in summary if r["variant"] == "linear"), key=lambda r: r["grid_points"]
    )
    if herm:
        x = [r["grid_points"] for r in herm]
        reg = [r["regression_seconds_mean"] for r in herm]
        grad = [r["gradient_seconds_mean"] for r in herm]
        ax.bar(x, reg, width=[max(1.0, 0.04 * v) for v in x], label="hermite: regression")
        ax.bar(
            x,
            grad,
            bottom=reg,
            width=[max(1.0, 0.04 * v) for v in x],
            label="hermite: gradient",
        )
    if lin:
        ax.plot(
            [r["grid_points"] for r in lin],
            [r["fit_seconds_mean"] for r in lin],
            "o--",
            color="C3",
            ms=4,
            label="linear: total",
        )
    ax.set_xlabel("grid points")
    ax.set_ylabel("fit seconds")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path_time)


def interval_figure(rows: list[dict], summary: list[dict], path: str) -> None:
    """Replication intervals per estimand with the ground truth line."""
    labels = [s["estimand"] for s in summary]
    truth = {s["estimand"]: s["truth"] for s in summary}
    fig, axes = plt.subplots(1, len(labels), figsize=(3.2 * len(labels), 3.2), squeeze=False)
    for ax, label in zip(axes[0], labels):
        batch = [r for r in rows if r["estimand"] == label][:50]
        reps = [r["rep"] for r in batch]
        lo = [r["lower"] for r in batch]
        hi = [r["upper"] for r in batch]
        mid = [(a + b) / 2 for a, b in zip(lo, hi)]
        err = [(b - a) / 2 for a, b in zip(lo, hi)]
        ax.errorbar(reps, mid, yerr=err, fmt="none", ecolor="C0", elinewidth=1.2, capsize=2)
        ax.axhline(truth[label], color="C3", lw=1.2, label="truth")
        ax.set_title(label, fontsize=9)
        ax.set_xlabel("replication")
        ax.legend(frameon=False, fontsize=8)
    _save(fig, path)
