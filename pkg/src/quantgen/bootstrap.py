"""Percentile bootstrap confidence intervals for conditional estimands.

Each replicate resamples the dataset with replacement, refits the
generator, draws ``k`` conditional observations at the covariate point of
interest, and evaluates the estimand on them; the interval is formed by
the ``alpha/2`` and ``1 - alpha/2`` empirical quantiles of the replicate
estimates.

One empirical-quantile convention is used everywhere (for the quantile
estimand and for the percentile bounds): linear interpolation of the order
statistics at position ``(k - 1) q + 1``, i.e. ``numpy.quantile`` with the
default ``linear`` method.

Stream discipline: replicate ``b`` draws its resampling indices from the
``(seed, "bootstrap", b, "resample")`` stream and its generator uniforms
from ``(seed, "bootstrap", b, "generate")``.  Replicates therefore never
share randomness, their results do not depend on scheduling, and the
interval is identical for any worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .basis import Basis
from .dataset import Dataset
from .errors import (
    DegenerateDesignError,
    LevelError,
    ParameterError,
    ReplicateError,
)
from .metamodel import FittedProcess, fit_hermite, fit_linear, generate
from .rng import substream

__all__ = [
    "Estimand",
    "parse_estimand",
    "empirical_quantile",
    "estimate",
    "resample",
    "FitParams",
    "ConfidenceInterval",
    "bootstrap_ci",
]

logger = logging.getLogger(__name__)

_MAX_RETRIES = 3


@dataclass(frozen=True)
class Estimand:
    """Scalar functional of the conditional law: mean, quantile or survival."""

    kind: str
    level: float | None = None
    threshold: float | None = None

    def __post_init__(self):
        if self.kind == "mean":
            return
        if self.kind == "quantile":
            if self.level is None or not 0.0 < self.level < 1.0:
                raise ParameterError(f"quantile level must lie in (0, 1); got {self.level!r}")
        elif self.kind == "survival":
            if self.threshold is None or not np.isfinite(self.threshold):
                raise ParameterError(f"survival threshold must be finite; got {self.threshold!r}")
        else:
            raise ParameterError(f"unknown estimand kind {self.kind!r}")

    def label(self) -> str:
        if self.kind == "mean":
            return "mean"
        if self.kind == "quantile":
            return f"quantile:{self.level:g}"
        return f"survival:{self.threshold:g}"


def parse_estimand(spec: str) -> Estimand:
    """Grammar: ``mean`` | ``quantile:<level>`` | ``survival:<threshold>``."""
    text = spec.strip()
    if text == "mean":
        return Estimand("mean")
    head, sep, arg = text.partition(":")
    if not sep:
        raise ParameterError(f"cannot parse estimand {spec!r}")
    try:
        value = float(arg)
    except ValueError:
        raise ParameterError(f"cannot parse estimand argument in {spec!r}") from None
    if head == "quantile":
        return Estimand("quantile", level=value)
    if head == "survival":
        return Estimand("survival", threshold=value)
    raise ParameterError(f"unknown estimand kind {head!r}")


def empirical_quantile(sample: np.ndarray, q: float) -> float:
    """Order statistics linearly interpolated at position (k-1)q + 1."""
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise ParameterError("sample must be non-empty")
    return float(np.quantile(sample, q, method="linear"))


def estimate(est: Estimand, sample: np.ndarray) -> float:
    """Evaluate an estimand on a sample of generated observations."""
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise ParameterError("sample must be non-empty")
    if est.kind == "mean":
        return float(np.mean(sample))
    if est.kind == "quantile":
        return empirical_quantile(sample, est.level)
    return float(np.mean(sample > est.threshold))


def resample(data: Dataset, seed) -> Dataset:
    """n rows drawn i.i.d. with replacement, (x, y) pairs kept intact."""
    rng = seed if isinstance(seed, np.random.Generator) else substream(int(seed), "resample")
    idx = rng.integers(0, data.n, size=data.n)
    return data.take(idx)


@dataclass(frozen=True)
class FitParams:
    """Everything needed to refit the generator on a resampled dataset."""

    variant: str = "hermite"
    m: int | None = None
    c: float = 2.0
    tau_lo: float = 0.1
    tau_hi: float = 0.9
    delta: float = 0.1
    basis: Basis | None = None
    clamp_negative_slopes: bool = False

    def fit(self, data: Dataset) -> FittedProcess:
        if self.variant == "hermite":
            return fit_hermite(
                data,
                m=self.m,
                c=self.c,
                tau_lo=self.tau_lo,
                tau_hi=self.tau_hi,
                delta=self.delta,
                basis=self.basis,
                clamp_negative_slopes=self.clamp_negative_slopes,
            )
        if self.variant == "linear":
            return fit_linear(data, m=self.m, basis=self.basis)
        raise ParameterError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class ConfidenceInterval:
    """Percentile interval with the replicate estimates that produced it."""

    lower: float
    upper: float
    alpha: float
    b_count: int
    estimates: np.ndarray
    seed: int


def _one_replicate(
    data: Dataset,
    params: FitParams,
    x_star,
    est: Estimand,
    k: int,
    seed: int,
    b: int,
    retry_degenerate: bool,
) -> float:
    attempts = _MAX_RETRIES + 1 if retry_degenerate else 1
    for attempt in range(attempts):
        labels = ("bootstrap", b, "resample") if attempt == 0 else (
            "bootstrap", b, "resample", attempt)
        boot = resample(data, substream(seed, *labels))
        try:
            model = params.fit(boot)
        except (DegenerateDesignError, LevelError) as exc:
            if attempt < attempts - 1:
                logger.warning(
                    "replicate %d resample was degenerate (%s); retry %d",
                    b, exc, attempt + 1,
                )
                continue
            raise ReplicateError(b, exc) from exc
        except Exception as exc:
            raise ReplicateError(b, exc) from exc
        sample = generate(model, x_star, k, substream(seed, "bootstrap", b, "generate"))
        return estimate(est, sample)
    raise AssertionError("unreachable")


_CTX = None


def _init_worker(data, params, x_star, est, k, seed, retry):
    global _CTX
    _CTX = (data, params, x_star, est, k, seed, retry)


def _worker_replicate(b: int) -> float:
    data, params, x_star, est, k, seed, retry = _CTX
    return _one_replicate(data, params, x_star, est, k, seed, b, retry)


def bootstrap_ci(
    data: Dataset,
    params: FitParams,
    x_star,
    est: Estimand,
    b_count: int = 100,
    k: int = 100_000,
    alpha: float = 0.1,
    seed: int = 0,
    workers: int = 1,
    retry_degenerate: bool = False,
) -> ConfidenceInterval:
    """Run the full resample/refit/generate/estimate loop and form the CI.

    A replicate failure aborts the whole run, wrapped with the replicate
    index; ``retry_degenerate`` allows up to three logged retries with
    fresh resampling substreams when the resampled design is degenerate.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1); got {alpha}")
    if b_count < 2:
        raise ParameterError(f"need at least 2 replicates; got {b_count}")
    if k < 1:
        raise ParameterError(f"need at least one generated observation; got {k}")

    if workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(data, params, x_star, est, k, seed, retry_degenerate),
        ) as pool:
            chunk = max(1, b_count // (4 * workers))
            estimates = np.fromiter(
                pool.map(_worker_replicate, range(b_count), chunksize=chunk),
                dtype=float,
                count=b_count,
            )
    else:
        estimates = np.fromiter(
            (
                _one_replicate(data, params, x_star, est, k, seed, b, retry_degenerate)
                for b in range(b_count)
            ),
            dtype=float,
            count=b_count,
        )

    lower = empirical_quantile(estimates, alpha / 2.0)
    upper = empirical_quantile(estimates, 1.0 - alpha / 2.0)
    return ConfidenceInterval(
        lower=lower,
        upper=upper,
        alpha=alpha,
        b_count=b_count,
        estimates=estimates,
        seed=seed,
    )
