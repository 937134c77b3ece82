"""Finite-window gradient of the conditional quantile process in tau.

At a level with coefficients ``beta``, the derivative of the quantile
process satisfies ``d/dtau Q(tau|x) = x' Lambda(tau)^{-1} E[x]`` with
``Lambda`` the density-weighted second moment of the covariates.  Its
plug-in estimate counts observations whose residual falls inside a window
of half-width ``delta``:

    Lambda_hat = (1 / (2 delta n)) sum_i x_i x_i' 1{|y_i - x_i' beta| < delta}

The coefficient vector ``g = Lambda_hat^{-1} x_bar`` turns any covariate
vector into a derivative via ``x' g``.  Gradients are only computed on the
central levels of a grid: tail windows hold too few points and produce
wildly unstable estimates (the evaluation module exposes a diagnostic that
quantifies this).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DegenerateWindowError, LevelError, ParameterError
from .grid import GridDesign
from .quantreg import QuantileCoefficients

__all__ = [
    "GradientCoefficients",
    "estimate_lambda",
    "gradient_vector",
    "gradient_table",
    "default_delta",
]

# Relative ridge applied before inverting a sparse-window moment matrix.
_RIDGE = 1e-8


@dataclass(frozen=True)
class GradientCoefficients:
    """Per-level derivative coefficient rows with window bookkeeping."""

    levels: np.ndarray
    g: np.ndarray
    delta: float
    window_counts: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        counts = np.asarray(self.window_counts, dtype=int)
        if g.shape[0] != levels.shape[0] or counts.shape[0] != levels.shape[0]:
            raise ParameterError("levels, g rows and window_counts must align")
        if not np.all(np.isfinite(g)):
            raise ParameterError("gradient rows must be finite")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "window_counts", counts)

    @property
    def empty(self) -> bool:
        return self.levels.size == 0

    @staticmethod
    def none() -> "GradientCoefficients":
        return GradientCoefficients(
            levels=np.empty(0), g=np.empty((0, 1)), delta=0.0, window_counts=np.empty(0, int)
        )


def default_delta(data: Dataset, fixed: float | None = 0.1) -> float:
    """Window half-width: fixed 0.1 on the native response scale by default.

    Passing ``fixed=None`` switches to the data-driven rule
    ``1.06 * sd(median-fit residuals) * n^(-1/5)``, useful when responses
    live on a very different scale than the default assumes.
    """
    if fixed is not None:
        if fixed <= 0:
            raise ParameterError(f"delta must be positive; got {fixed}")
        return float(fixed)
    from .quantreg import fit_quantile  # local import to avoid cycle at import time

    beta_med = fit_quantile(data, 0.5)
    resid = data.responses - data.covariates @ beta_med
    sd = float(np.std(resid))
    if sd == 0.0:
        sd = 1.0  # degenerate responses; any positive window works
    return 1.06 * sd * data.n ** (-0.2)


def estimate_lambda(data: Dataset, beta: np.ndarray, delta: float) -> np.ndarray:
    """Windowed second-moment matrix; exactly symmetric, PSD by construction."""
    if delta <= 0:
        raise ParameterError(f"delta must be positive; got {delta}")
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise ParameterError("beta must be finite")
    res = data.responses - data.covariates @ beta
    inside = np.abs(res) < delta
    Xw = data.covariates[inside]
    lam = (Xw.T @ Xw) / (2.0 * delta * data.n)
    return 0.5 * (lam + lam.T)


def _window_count(data: Dataset, beta: np.ndarray, delta: float) -> int:
    res = data.responses - data.covariates @ np.asarray(beta, dtype=float)
    return int(np.count_nonzero(np.abs(res) < delta))


def gradient_vector(data: Dataset, beta: np.ndarray, delta: float) -> np.ndarray:
    """Derivative coefficient vector ``g = Lambda_hat^{-1} x_bar``.

    A small ridge proportional to the trace keeps near-singular windows
    invertible; windows holding fewer than ``p`` observations are refused
    with :class:`DegenerateWindowError` instead of silently producing
    garbage derivatives.
    """
    lam = estimate_lambda(data, beta, delta)
    count = _window_count(data, beta, delta)
    if count < data.p:
        raise DegenerateWindowError(count)
    x_bar = data.covariates.mean(axis=0)
    ridge = _RIDGE * np.trace(lam) / data.p
    lam_r = lam + ridge * np.eye(data.p)
    try:
        g = np.linalg.solve(lam_r, x_bar)
    except np.linalg.LinAlgError:
        raise DegenerateWindowError(count) from None
    if not np.all(np.isfinite(g)):
        raise DegenerateWindowError(count)
    return g


def gradient_table(
    data: Dataset,
    coeffs: QuantileCoefficients,
    grid: GridDesign,
    delta: float,
) -> GradientCoefficients:
    """Gradient rows for every central grid level; tail levels are skipped."""
    central = grid.central_levels
    fitted = coeffs.levels
    idx = np.searchsorted(fitted, central)
    if np.any(idx >= fitted.size) or np.any(np.abs(fitted[np.minimum(idx, fitted.size - 1)] - central) > 1e-12):
        raise ParameterError("coefficients do not cover the central grid levels")
    g = np.empty((central.size, data.p))
    counts = np.empty(central.size, dtype=int)
    for j, (tau, row) in enumerate(zip(central, idx)):
        beta = coeffs.betas[row]
        try:
            g[j] = gradient_vector(data, beta, delta)
        except DegenerateWindowError as exc:
            raise LevelError(float(tau), DegenerateWindowError(exc.window_count, float(tau))) from exc
        counts[j] = _window_count(data, beta, delta)
    return GradientCoefficients(levels=central, g=g, delta=float(delta), window_counts=counts)
