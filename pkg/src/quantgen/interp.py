"""Quantile-process evaluation: linear tails, cubic Hermite centre.

Three layers build on each other:

* :func:`eval_linear`: piecewise-linear interpolation with constant
  plateaus below the first and above the last node (the baseline
  generator's estimator, and the tail estimator of the mixed one);
* :func:`eval_cubic` / :func:`hermite_basis`: one cubic Hermite segment
  matching values and derivatives at its two nodes;
* curves: for a fixed covariate vector, a precomputed node table that
  evaluates whole arrays of levels at once.  The mixed curve uses the
  cubic segments on ``[tau_lo, tau_hi]`` and linear/plateau evaluation
  outside, with the boundary nodes shared by both branches so the curve
  is continuous at the seams.

Estimated derivatives may be negative at finite sample sizes, so the
interpolant is not forced to be monotone; an optional clamp sets negative
node derivatives to zero for callers that prefer a safeguard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "hermite_basis",
    "eval_linear",
    "eval_cubic",
    "LinearCurve",
    "MixedCurve",
    "curve_for",
    "eval_process",
]


def hermite_basis(xi):
    """The four cubic Hermite basis polynomials at ``xi`` in [0, 1]."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0.0) or np.any(xi > 1.0):
        raise ParameterError("hermite basis argument must lie in [0, 1]")
    xi2 = xi * xi
    xi3 = xi2 * xi
    h00 = 2.0 * xi3 - 3.0 * xi2 + 1.0
    h10 = xi3 - 2.0 * xi2 + xi
    h01 = -2.0 * xi3 + 3.0 * xi2
    h11 = xi3 - xi2
    if xi.ndim == 0:
        return float(h00), float(h10), float(h01), float(h11)
    return h00, h10, h01, h11


def eval_linear(tau, levels, values):
    """Piecewise-linear between nodes, constant plateau outside them."""
    levels = np.asarray(levels, dtype=float)
    values = np.asarray(values, dtype=float)
    if levels.size == 0:
        raise ParameterError("need at least one interpolation node")
    out = np.interp(np.asarray(tau, dtype=float), levels, values)
    return float(out) if out.ndim == 0 else out


def eval_cubic(tau, tau_j, qj, dj, tau_j1, qj1, dj1):
    """One Hermite segment: values ``qj, qj1`` and slopes ``dj, dj1``."""
    tau_j, tau_j1 = float(tau_j), float(tau_j1)
    if not tau_j < tau_j1:
        raise ParameterError("segment endpoints must satisfy tau_j < tau_j1")
    h = tau_j1 - tau_j
    xi = (np.asarray(tau, dtype=float) - tau_j) / h
    h00, h10, h01, h11 = hermite_basis(xi)
    out = h00 * qj + h10 * h * dj + h01 * qj1 + h11 * h * dj1
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LinearCurve:
    """Node table for the uniform-grid generator at one covariate vector."""

    levels: np.ndarray
    values: np.ndarray

    def values_at(self, tau):
        return eval_linear(tau, self.levels, self.values)


@dataclass(frozen=True)
class MixedCurve:
    """Node table for the mixed generator at one covariate vector.

    ``lower_*``/``upper_*`` include the central boundary node on their
    inner side, so the linear branch meets the cubic branch exactly.
    """

    tau_lo: float
    tau_hi: float
    lower_levels: np.ndarray
    lower_values: np.ndarray
    upper_levels: np.ndarray
    upper_values: np.ndarray
    central_levels: np.ndarray
    central_values: np.ndarray
    central_derivs: np.ndarray

    def values_at(self, tau):
        tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
        out = np.empty_like(tau_arr)
        low = tau_arr < self.tau_lo
        high = tau_arr > self.tau_hi
        mid = ~(low | high)
        if np.any(low):
            out[low] = np.interp(tau_arr[low], self.lower_levels, self.lower_values)
        if np.any(high):
            out[high] = np.interp(tau_arr[high], self.upper_levels, self.upper_values)
        if np.any(mid):
            t = tau_arr[mid]
            lv, vals, der = self.central_levels, self.central_values, self.central_derivs
            j = np.clip(np.searchsorted(lv, t, side="right") - 1, 0, lv.size - 2)
            t0 = lv[j]
            h = lv[j + 1] - t0
            h00, h10, h01, h11 = hermite_basis((t - t0) / h)
            out[mid] = (
                h00 * vals[j]
                + h10 * h * der[j]
                + h01 * vals[j + 1]
                + h11 * h * der[j + 1]
            )
        return float(out[0]) if np.ndim(tau) == 0 else out


def curve_for(model, x: np.ndarray):
    """Precompute the node table of a fitted model at one model-space x.

    ``model`` carries ``grid``, ``coeffs``, ``grads``, ``variant`` and the
    optional ``clamp_negative_slopes`` flag; ``x`` must already be basis
    expanded.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != model.coeffs.p:
        raise ParameterError(f"expected a vector of length {model.coeffs.p}; got {x.size}")
    values = model.coeffs.betas @ x
    levels = model.coeffs.levels
    if model.variant == "linear":
        return LinearCurve(levels=levels, values=values)

    grid = model.grid
    derivs = model.grads.g @ x
    if getattr(model, "clamp_negative_slopes", False):
        derivs = np.maximum(derivs, 0.0)
    central = grid.central_mask
    lower = levels <= grid.tau_lo + 1e-15
    upper = levels >= grid.tau_hi - 1e-15
    return MixedCurve(
        tau_lo=grid.tau_lo,
        tau_hi=grid.tau_hi,
        lower_levels=levels[lower],
        lower_values=values[lower],
        upper_levels=levels[upper],
        upper_values=values[upper],
        central_levels=levels[central],
        central_values=values[central],
        central_derivs=derivs,
    )


def eval_process(tau, x: np.ndarray, model):
    """Evaluate the fitted quantile process at level(s) ``tau`` and model-space ``x``."""
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr <= 0.0) or np.any(tau_arr >= 1.0):
        raise ParameterError("levels must lie in (0, 1)")
    return curve_for(model, x).values_at(tau)
