"""Command-line surface.

Commands print their effective configuration (defaults resolved, config
file and flags merged) before doing any work, so every run is reproducible
from its own output.  Exit codes: 0 success, 2 parse failure, 3 validation
failure, 4 numeric failure, 5 I/O failure.
"""

from __future__ import annotations

import functools
import json
import sys
import time

import click
import numpy as np

from .bootstrap import bootstrap_ci, parse_estimand
from .config import RunConfig, echo_lines, merge_config, read_config_file
from .dataset import (
    Dataset,
    load_dataset_csv,
    load_samples_csv,
    save_dataset_csv,
    save_samples_csv,
)
from .errors import (
    ConvergenceError,
    CsvFormatError,
    DataError,
    DegenerateDesignError,
    DegenerateWindowError,
    LevelError,
    ModelFormatError,
    ParameterError,
    QuantgenError,
    ReplicateError,
    ShapeError,
    UnsupportedOracleError,
)
from .evaluate import gradient_stability_study, ks_statistic, wasserstein_1d
from .metamodel import generate, load_model, save_model
from .basis import with_intercept
from . import experiment as xp
from .simulate import (
    family,
    gen_synthetic,
    inventory_config_at,
    inventory_dataset,
    reference_inventory,
    reference_synthetic,
)

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_IO = 5


def _fail(code: int, exc: BaseException) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def guarded(fn):
    """Map package errors onto the documented exit-code classes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (CsvFormatError, ModelFormatError) as exc:
            _fail(EXIT_PARSE, exc)
        except (ParameterError, ShapeError, DataError, UnsupportedOracleError) as exc:
            _fail(EXIT_VALIDATION, exc)
        except (
            ConvergenceError,
            DegenerateDesignError,
            DegenerateWindowError,
            LevelError,
            ReplicateError,
            np.linalg.LinAlgError,
        ) as exc:
            _fail(EXIT_NUMERIC, exc)
        except QuantgenError as exc:
            _fail(EXIT_VALIDATION, exc)
        except OSError as exc:
            _fail(EXIT_IO, exc)

    return wrapper


def _parse_xs(_ctx, _param, value):
    if value is None:
        return None
    try:
        return tuple(float(v) for v in value.split(","))
    except ValueError:
        raise click.UsageError(f"--x expects comma-separated numbers; got {value!r}")


def _config_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                     help="Flat key=value config file; flags override it."),
        click.option("--m", type=int, default=None, help="Tail grid density (default sqrt(n))."),
        click.option("--c", type=float, default=None, help="Central grid density constant."),
        click.option("--tau-lo", type=float, default=None, help="Lower central bound."),
        click.option("--tau-hi", type=float, default=None, help="Upper central bound."),
        click.option("--delta", type=float, default=None, help="Derivative window half-width."),
        click.option("--b", type=int, default=None, help="Bootstrap replicates."),
        click.option("--k", type=int, default=None, help="Generated observations per model."),
        click.option("--alpha", type=float, default=None, help="Interval miss probability."),
        click.option("--reps", type=int, default=None, help="Outer experiment replications."),
        click.option("--seed", type=int, default=None, help="Master seed."),
        click.option("--workers", type=int, default=None, help="Worker process count."),
        click.option("--variant", type=click.Choice(["hermite", "linear"]), default=None),
        click.option("--basis", type=click.Choice(["identity", "inventory"]), default=None),
        click.option("--clamp-negative-slopes", "clamp_negative_slopes",
                     is_flag=True, default=None, help="Clamp negative node derivatives to zero."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


_CFG_KEYS = (
    "m", "c", "tau_lo", "tau_hi", "delta", "b", "k", "alpha", "reps",
    "seed", "workers", "variant", "basis", "clamp_negative_slopes",
)


def _merged_config(kwargs: dict) -> RunConfig:
    path = kwargs.pop("config_path", None)
    file_overrides = read_config_file(path) if path else None
    cli_overrides = {key: kwargs.pop(key) for key in _CFG_KEYS if key in kwargs}
    return merge_config(file_overrides, cli_overrides)


def _echo_config(cfg: RunConfig) -> None:
    click.echo("# effective configuration")
    for line in echo_lines(cfg):
        click.echo(line)


@click.group()
def main():
    """Conditional generative metamodeling with bootstrap intervals."""


@main.command("fit")
@click.argument("data_path", type=click.Path(exists=True))
@click.option("-o", "--output", "model_path", required=True, type=click.Path())
@_config_options
@guarded
def cmd_fit(data_path, model_path, **kwargs):
    """Fit a generator on a dataset CSV and write the model file."""
    cfg = _merged_config(kwargs)
    _echo_config(cfg)
    x_raw, y = load_dataset_csv(data_path)
    data = Dataset(with_intercept(x_raw), y)
    params = cfg.fit_params()
    model = params.fit(data)
    save_model(model, model_path)
    t = model.fit_meta.timings
    click.echo(
        f"fitted variant={model.variant} grid levels={model.fit_meta.regressions} "
        f"gradients={model.fit_meta.gradients}"
    )
    click.echo(
        "stage seconds: regression={regression:.4f} gradient={gradient:.4f} "
        "assembly={assembly:.4f} total={total:.4f}".format(**t)
    )
    click.echo(f"model written to {model_path}")


@main.command("generate")
@click.argument("model_path", type=click.Path(exists=True))
@click.option("--x", "x_star", required=True, callback=_parse_xs,
              help="Raw covariates, comma separated.")
@click.option("--k", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", "out_path", required=True, type=click.Path())
@guarded
def cmd_generate(model_path, x_star, k, seed, out_path):
    """Draw conditional observations from a fitted model into a CSV."""
    model = load_model(model_path)
    sample = generate(model, x_star, k, seed)
    save_samples_csv(out_path, sample)
    click.echo(f"# x_star = {','.join(repr(v) for v in x_star)}; k = {k}; seed = {seed}")
    click.echo(f"{sample.size} observations written to {out_path}")


@main.command("ci")
@click.argument("data_path", type=click.Path(exists=True))
@click.option("--x", "x_star", required=True, callback=_parse_xs)
@click.option("--estimand", "estimand_spec", required=True,
              help="mean | quantile:<level> | survival:<threshold>")
@click.option("-o", "--output", "out_path", required=True, type=click.Path())
@click.option("--retry-degenerate", is_flag=True, default=False,
              help="Retry degenerate resamples with fresh substreams (max 3).")
@_config_options
@guarded
def cmd_ci(data_path, x_star, estimand_spec, out_path, retry_degenerate, **kwargs):
    """Bootstrap percentile interval for an estimand at a covariate point."""
    cfg = _merged_config(kwargs)
    _echo_config(cfg)
    try:
        est = parse_estimand(estimand_spec)
    except ParameterError as exc:
        raise click.UsageError(str(exc)) from None  # grammar problem: parse class
    x_raw, y = load_dataset_csv(data_path)
    data = Dataset(with_intercept(x_raw), y)
    t0 = time.perf_counter()
    ci = bootstrap_ci(
        data,
        cfg.fit_params(),
        x_star,
        est,
        b_count=cfg.b,
        k=cfg.k,
        alpha=cfg.alpha,
        seed=cfg.seed,
        workers=cfg.workers,
        retry_degenerate=retry_degenerate,
    )
    wall = time.perf_counter() - t0
    report = {
        "format": "quantgen-ci",
        "version": 1,
        "config": dict(line.split(" = ") for line in echo_lines(cfg)),
        "x_star": list(x_star),
        "estimand": est.label(),
        "alpha": ci.alpha,
        "b": ci.b_count,
        "k": cfg.k,
        "seed": ci.seed,
        "lower": ci.lower,
        "upper": ci.upper,
        "estimates": [float(v) for v in ci.estimates],
        "timing": {"wall_seconds": wall},
    }
    with open(out_path, "w") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    click.echo(f"[{ci.lower:.6g}, {ci.upper:.6g}] alpha={ci.alpha} b={ci.b_count}")
    click.echo(f"report written to {out_path}")


@main.group("simulate")
def cmd_simulate():
    """Emit datasets and reference samples as CSV."""


@cmd_simulate.command("synthetic")
@click.option("--family", "family_name", type=click.Choice(["normal", "halfnormal", "student-t"]),
              default="normal", show_default=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", "out_path", required=True, type=click.Path())
@guarded
def cmd_sim_synth(family_name, n, seed, out_path):
    """Location-scale family dataset with covariates x1, x2, x3."""
    data = gen_synthetic(family(family_name), n, seed)
    save_dataset_csv(out_path, data.covariates[:, 1:], data.responses)
    click.echo(f"# family = {family_name}; n = {n}; seed = {seed}")
    click.echo(f"dataset written to {out_path}")


@cmd_simulate.command("inventory")
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", "out_path", required=True, type=click.Path())
@guarded
def cmd_sim_inventory(n, seed, out_path):
    """Reorder-policy dataset with covariates s, S, mu and cost responses."""
    data = inventory_dataset(n, seed)
    save_dataset_csv(out_path, data.covariates[:, 1:], data.responses)
    click.echo(f"# n = {n}; seed = {seed}")
    click.echo(f"dataset written to {out_path}")


@cmd_simulate.command("reference")
@click.option("--family", "family_name",
              type=click.Choice(["normal", "halfnormal", "student-t"]), default=None)
@click.option("--inventory", "use_inventory", is_flag=True, default=False)
@click.option("--x", "x_star", required=True, callback=_parse_xs)
@click.option("--k", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", "out_path", required=True, type=click.Path())
@guarded
def cmd_sim_reference(family_name, use_inventory, x_star, k, seed, out_path):
    """Reference sample at one covariate point (analytic or simulator runs)."""
    if use_inventory == (family_name is not None):
        raise click.UsageError("pass exactly one of --family or --inventory")
    if use_inventory:
        sample = reference_inventory(inventory_config_at(x_star), k, seed)
    else:
        sample = reference_synthetic(family(family_name), x_star, k, seed)
    save_samples_csv(out_path, sample)
    click.echo(f"# x_star = {','.join(repr(v) for v in x_star)}; k = {k}; seed = {seed}")
    click.echo(f"reference sample written to {out_path}")


@main.command("eval")
@click.option("--sample", "sample_path", required=True, type=click.Path(exists=True))
@click.option("--reference", "reference_path", required=True, type=click.Path(exists=True))
@click.option("-o", "--output", "out_path", required=True, type=click.Path())
@guarded
def cmd_eval(sample_path, reference_path, out_path):
    """Two-sample KS and Wasserstein distance between CSV samples."""
    sample = load_samples_csv(sample_path)
    reference = load_samples_csv(reference_path)
    report = {
        "format": "quantgen-eval",
        "version": 1,
        "ks": ks_statistic(sample, reference),
        "wd": wasserstein_1d(sample, reference),
        "n_sample": int(sample.size),
        "n_reference": int(reference.size),
    }
    with open(out_path, "w") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    click.echo(f"ks = {report['ks']:.6g}; wd = {report['wd']:.6g}")
    click.echo(f"report written to {out_path}")


@main.command("stability")
@click.option("--family", "family_name",
              type=click.Choice(["normal", "halfnormal", "student-t"]),
              default="normal", show_default=True)
@click.option("--n-values", default="1000,10000", show_default=True,
              help="Comma-separated dataset sizes.")
@click.option("--levels", default="0.01,0.05,0.1,0.2,0.3,0.5,0.7,0.8,0.9,0.95,0.99",
              show_default=True, help="Comma-separated quantile levels.")
@click.option("--reps", type=int, default=30, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", "out_path", required=True, type=click.Path())
@guarded
def cmd_stability(family_name, n_values, levels, reps, delta, seed, out_path):
    """Spread of the relative L1 derivative error per (n, level) cell.

    Emits a wide CSV (one row per n, one column per level), the layout of
    the tail-instability diagnostic table.
    """
    try:
        sizes = [int(v) for v in n_values.split(",")]
        taus = [float(v) for v in levels.split(",")]
    except ValueError:
        raise click.UsageError("--n-values and --levels expect comma-separated numbers")
    click.echo(f"# family = {family_name}; n_values = {n_values}; levels = {levels}; "
               f"reps = {reps}; delta = {delta}; seed = {seed}")
    study = gradient_stability_study(family(family_name), sizes, taus, reps, seed, delta=delta)
    import csv as _csv

    with open(out_path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["n"] + [f"tau_{t:g}" for t in study.levels])
        for i, n in enumerate(study.n_values):
            writer.writerow([n] + [repr(float(v)) for v in study.std[i]])
    if study.single_rep:
        click.echo("warning: a single repetition gives a degenerate spread of 0", err=True)
    click.echo(f"stability table written to {out_path}")


@main.command("experiment")
@click.argument("kind", type=click.Choice(["synthetic", "inventory"]))
@click.option("--family", "family_name",
              type=click.Choice(["normal", "halfnormal", "student-t"]),
              default="normal", show_default=True, help="Synthetic family (synthetic kind only).")
@click.option("--n", type=int, default=10_000, show_default=True, help="Training rows per replication.")
@click.option("--x", "x_star", callback=_parse_xs, default=None,
              help="Covariate point (defaults to the standard evaluation point).")
@click.option("--ref-size", type=int, default=None,
              help="Reference sample size (default: k for synthetic, 10000 for inventory).")
@click.option("--coverage", is_flag=True, default=False,
              help="Also run the bootstrap-interval coverage loop.")
@click.option("--estimands", "estimand_specs", default="mean", show_default=True,
              help="Comma-separated estimand specs for --coverage.")
@click.option("--truth-size", type=int, default=100_000, show_default=True,
              help="Simulator runs for the self-generated inventory ground truth.")
@click.option("--grid-sweep", "grid_sweep", default=None,
              help="Comma-separated m values: run the grid sweep instead of plain metrics.")
@click.option("--figures/--no-figures", "figures", default=True, show_default=True)
@click.option("--outdir", required=True, type=click.Path())
@_config_options
@guarded
def cmd_experiment(kind, family_name, n, x_star, ref_size, coverage, estimand_specs,
                   truth_size, grid_sweep, figures, outdir, **kwargs):
    """Replicated experiment: metrics / coverage / grid sweep, with report."""
    cfg = _merged_config(kwargs)
    if kind == "inventory":
        # paper-protocol defaults for the inventory pipeline
        overrides = {}
        if cfg.m is None:
            overrides["m"] = 300
        if cfg.basis == "identity":
            overrides["basis"] = "inventory"
        if overrides:
            cfg = merge_config({k: getattr(cfg, k) for k in _CFG_KEYS if getattr(cfg, k) is not None},
                               overrides)
    _echo_config(cfg)
    fam_name = family_name if kind == "synthetic" else None
    if x_star is None:
        x_star = xp.DEFAULT_X_SYNTHETIC if kind == "synthetic" else xp.DEFAULT_X_INVENTORY
    if ref_size is None:
        ref_size = cfg.k if kind == "synthetic" else 10_000

    t0 = time.perf_counter()
    params = cfg.fit_params()
    tables: dict = {}
    base = xp.MetricTask(
        kind=kind, fam_name=fam_name, n=n, x_star=tuple(x_star),
        k=cfg.k, ref_size=ref_size, seed=cfg.seed, params=params,
    )
    if grid_sweep:
        try:
            ms = tuple(int(v) for v in grid_sweep.split(","))
        except ValueError:
            raise click.UsageError(f"--grid-sweep expects comma-separated integers; got {grid_sweep!r}")
        rows = xp.run_grid_sweep(xp.SweepTask(base=base, ms=ms), cfg.reps, cfg.workers)
        tables["sweep"] = rows
        tables["sweep_summary"] = xp.summarize(
            rows, ("variant", "m", "grid_points"),
            ("ks", "wd", "fit_seconds", "regression_seconds", "gradient_seconds"),
        )
    else:
        rows = xp.run_metric_experiment(base, cfg.reps, cfg.workers)
        tables["metrics"] = rows
        tables["metrics_summary"] = xp.summarize(
            rows, (), ("ks", "wd", "fit_seconds", "regression_seconds", "gradient_seconds"),
        )
    if coverage:
        try:
            estimands = tuple(parse_estimand(s) for s in estimand_specs.split(","))
        except ParameterError as exc:
            raise click.UsageError(str(exc)) from None
        ctask = xp.CoverageTask(
            kind=kind, fam_name=fam_name, n=n, x_star=tuple(x_star),
            estimands=estimands, b=cfg.b, k=cfg.k, alpha=cfg.alpha,
            seed=cfg.seed, params=params,
        )
        interval_rows, summary_rows = xp.run_coverage_experiment(
            ctask, cfg.reps, cfg.workers, truth_size=truth_size
        )
        tables["coverage_intervals"] = interval_rows
        tables["coverage_summary"] = summary_rows
    timing = {"wall_seconds": time.perf_counter() - t0}
    xp.write_report(outdir, cfg, tables, timing, figures=figures)
    for name in tables:
        click.echo(f"table: {name} ({len(tables[name])} rows)")
    click.echo(f"report written to {outdir}")


if __name__ == "__main__":
    main()
