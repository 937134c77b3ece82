"""Replicated experiment runners and report writing.

Three experiment shapes, each replicated ``reps`` times with per-replication
derived seeds so results are independent of worker count:

* metrics: generate data, fit, sample at the covariate point of interest,
  score KS/WD against a reference sample, record stage timings;
* coverage: build bootstrap intervals for one or more estimands per
  replication and compare against the ground truth (analytic for synthetic
  families, a large pool of extra simulator runs for the inventory case);
* grid sweep: metrics for both generator variants across a list of grid
  densities at matched grid-point counts (the accuracy/time trade-off data).

Reports are a directory: the echoed config, per-replication CSV tables,
summary CSV tables, a ``run.json`` with everything, and rendered figures
next to the delimited output (disable with ``figures=False``).  For a
fixed seed everything is byte-deterministic except the declared volatile
parts: the ``timing`` block of ``run.json`` and the measured
``*_seconds`` columns of the metric/sweep tables.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bootstrap import FitParams, bootstrap_ci, estimate
from .config import RunConfig, echo_lines
from .dataset import Dataset
from .errors import ParameterError
from .evaluate import coverage_width, ks_statistic, wasserstein_1d
from .metamodel import generate
from .rng import subseed
from .simulate import (
    family,
    gen_synthetic,
    inventory_config_at,
    inventory_dataset,
    reference_inventory,
    reference_synthetic,
    true_estimand,
)

__all__ = [
    "MetricTask",
    "CoverageTask",
    "run_metric_experiment",
    "run_coverage_experiment",
    "run_grid_sweep",
    "summarize",
    "write_report",
]

DEFAULT_X_SYNTHETIC = (4.0, -1.0, 3.0)
DEFAULT_X_INVENTORY = (320.0, 420.0, 330.0)


def _make_data(kind: str, fam_name: str | None, n: int, seed: int) -> Dataset:
    if kind == "synthetic":
        return gen_synthetic(family(fam_name), n, seed)
    if kind == "inventory":
        return inventory_dataset(n, seed)
    raise ParameterError(f"unknown experiment kind {kind!r}")


def _make_reference(kind: str, fam_name: str | None, x_star, size: int, seed: int) -> np.ndarray:
    if kind == "synthetic":
        return reference_synthetic(family(fam_name), x_star, size, seed)
    return reference_inventory(inventory_config_at(x_star), size, seed)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricTask:
    kind: str
    fam_name: str | None
    n: int
    x_star: tuple
    k: int
    ref_size: int
    seed: int
    params: FitParams


def _metric_replication(task: MetricTask, rep: int) -> dict:
    data = _make_data(task.kind, task.fam_name, task.n, subseed(task.seed, "experiment", rep, "data"))
    ref = _make_reference(
        task.kind, task.fam_name, task.x_star, task.ref_size,
        subseed(task.seed, "experiment", rep, "reference"),
    )
    model = task.params.fit(data)
    sample = generate(model, task.x_star, task.k, subseed(task.seed, "experiment", rep, "generate"))
    t = model.fit_meta.timings
    return {
        "rep": rep,
        "ks": ks_statistic(sample, ref),
        "wd": wasserstein_1d(sample, ref),
        "fit_seconds": t["total"],
        "regression_seconds": t["regression"],
        "gradient_seconds": t["gradient"],
        "assembly_seconds": t["assembly"],
    }


_CTX = None


def _init_ctx(payload):
    global _CTX
    _CTX = payload


def _metric_worker(rep: int) -> dict:
    return _metric_replication(_CTX, rep)


def _map_replications(worker, task, reps: int, workers: int, runner):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_ctx, initargs=(task,)) as pool:
            return list(pool.map(worker, range(reps)))
    return [runner(task, rep) for rep in range(reps)]


def run_metric_experiment(task: MetricTask, reps: int, workers: int = 1) -> list[dict]:
    """Per-replication KS/WD/timing rows; deterministic per seed."""
    return _map_replications(_metric_worker, task, reps, workers, _metric_replication)


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverageTask:
    kind: str
    fam_name: str | None
    n: int
    x_star: tuple
    estimands: tuple
    b: int
    k: int
    alpha: float
    seed: int
    params: FitParams


def _coverage_replication(task: CoverageTask, rep: int) -> list[dict]:
    data = _make_data(task.kind, task.fam_name, task.n, subseed(task.seed, "coverage", rep, "data"))
    rows = []
    for est in task.estimands:
        ci = bootstrap_ci(
            data,
            task.params,
            task.x_star,
            est,
            b_count=task.b,
            k=task.k,
            alpha=task.alpha,
            seed=subseed(task.seed, "coverage", rep),
            workers=1,
        )
        rows.append(
            {"rep": rep, "estimand": est.label(), "lower": ci.lower, "upper": ci.upper}
        )
    return rows


def _coverage_worker(rep: int) -> list[dict]:
    return _coverage_replication(_CTX, rep)


def coverage_truths(task: CoverageTask, truth_size: int = 100_000) -> dict:
    """Ground-truth estimand values: analytic or self-generated."""
    truths = {}
    if task.kind == "synthetic":
        fam = family(task.fam_name)
        for est in task.estimands:
            truths[est.label()] = true_estimand(fam, est, task.x_star)
    else:
        pool = reference_inventory(
            inventory_config_at(task.x_star), truth_size, subseed(task.seed, "truth")
        )
        for est in task.estimands:
            truths[est.label()] = estimate(est, pool)
    return truths


def run_coverage_experiment(
    task: CoverageTask, reps: int, workers: int = 1, truth_size: int = 100_000
) -> tuple[list[dict], list[dict]]:
    """Returns (per-replication interval rows, per-estimand summary rows)."""
    nested = _map_replications(_coverage_worker, task, reps, workers, _coverage_replication)
    rows = [row for batch in nested for row in batch]
    truths = coverage_truths(task, truth_size)
    summary = []
    for est in task.estimands:
        label = est.label()
        ivs = [(r["lower"], r["upper"]) for r in rows if r["estimand"] == label]
        rep_report = coverage_width(ivs, truths[label])
        summary.append(
            {
                "estimand": label,
                "coverage": rep_report.coverage,
                "width": rep_report.width,
                "truth": truths[label],
                "reps": rep_report.n_replications,
            }
        )
    return rows, summary


# ---------------------------------------------------------------------------
# grid sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepTask:
    base: MetricTask
    ms: tuple


def _sweep_replication(task: SweepTask, item: int) -> list[dict]:
    from .grid import build_grid  # local import keeps module import light

    base = task.base
    n_ms = len(task.ms)
    m = task.ms[item % n_ms]
    rep = item // n_ms
    data = _make_data(base.kind, base.fam_name, base.n, subseed(base.seed, "sweep", rep, "data"))
    ref = _make_reference(
        base.kind, base.fam_name, base.x_star, base.ref_size,
        subseed(base.seed, "sweep", rep, "reference"),
    )
    rows = []
    mixed_points = build_grid(m, base.params.c, base.params.tau_lo, base.params.tau_hi).size
    for variant, m_eff in (("hermite", m), ("linear", mixed_points + 1)):
        params = FitParams(
            variant=variant,
            m=m_eff,
            c=base.params.c,
            tau_lo=base.params.tau_lo,
            tau_hi=base.params.tau_hi,
            delta=base.params.delta,
            basis=base.params.basis,
        )
        model = params.fit(data)
        sample = generate(
            model, base.x_star, base.k, subseed(base.seed, "sweep", rep, "generate", variant, m)
        )
        t = model.fit_meta.timings
        rows.append(
            {
                "variant": variant,
                "m": m,
                "grid_points": model.fit_meta.regressions,
                "rep": rep,
                "ks": ks_statistic(sample, ref),
                "wd": wasserstein_1d(sample, ref),
                "fit_seconds": t["total"],
                "regression_seconds": t["regression"],
                "gradient_seconds": t["gradient"],
            }
        )
    return rows


def _sweep_worker(item: int) -> list[dict]:
    return _sweep_replication(_CTX, item)


def run_grid_sweep(task: SweepTask, reps: int, workers: int = 1) -> list[dict]:
    """Both variants at matched grid-point counts for every m in the sweep."""
    items = len(task.ms) * reps
    nested = _map_replications(_sweep_worker, task, items, workers, _sweep_replication)
    return [row for batch in nested for row in batch]


# ---------------------------------------------------------------------------
# summaries and report files
# ---------------------------------------------------------------------------


def summarize(rows: list[dict], group_keys: tuple, value_keys: tuple) -> list[dict]:
    """Mean and standard error of value columns per group."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in group_keys), []).append(row)
    out = []
    for key in sorted(groups):
        batch = groups[key]
        entry = dict(zip(group_keys, key))
        entry["reps"] = len(batch)
        for vk in value_keys:
            vals = np.array([r[vk] for r in batch], dtype=float)
            entry[f"{vk}_mean"] = float(vals.mean())
            entry[f"{vk}_se"] = (
                float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            )
        out.append(entry)
    return out


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        return
    fieldnames = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def write_report(
    outdir: str,
    cfg: RunConfig,
    tables: dict,
    timing: dict,
    figures: bool = True,
) -> None:
    """Write config echo, CSV tables, run.json and (optionally) figures.

    ``tables`` maps a table name to its list-of-dicts rows; every table is
    written as ``<name>.csv`` and embedded in ``run.json``.
    """
    os.makedirs(outdir, exist_ok=True)
    cfg_lines = echo_lines(cfg)
    with open(os.path.join(outdir, "config.txt"), "w") as fh:
        fh.write("\n".join(cfg_lines) + "\n")
    for name, rows in tables.items():
        write_csv(os.path.join(outdir, f"{name}.csv"), rows)
    doc = {
        "config": {line.split(" = ")[0]: line.split(" = ")[1] for line in cfg_lines},
        "tables": tables,
        "timing": timing,
    }
    with open(os.path.join(outdir, "run.json"), "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    if figures:
        from . import figures as figmod

        figdir = os.path.join(outdir, "figures")
        os.makedirs(figdir, exist_ok=True)
        if "metrics" in tables:
            figmod.metric_figure(tables["metrics"], os.path.join(figdir, "metrics.png"))
        if "sweep_summary" in tables:
            figmod.sweep_figures(
                tables["sweep_summary"],
                os.path.join(figdir, "sweep_accuracy.png"),
                os.path.join(figdir, "sweep_time.png"),
            )
        if "coverage_intervals" in tables and "coverage_summary" in tables:
            figmod.interval_figure(
                tables["coverage_intervals"],
                tables["coverage_summary"],
                os.path.join(figdir, "intervals.png"),
            )


def elapsed_since(t0: float) -> dict:
    return {"wall_seconds": time.perf_counter() - t0}
