"""Fit conditional generators and draw observations by inverse transform.

Two variants share one model type:

* ``hermite``: quantile regressions on the mixed grid, finite-window
  derivative estimates on its central levels, cubic Hermite interpolation
  in the centre and linear/plateau tails;
* ``linear``: the baseline: regressions on the full uniform ``{j/m}``
  grid and linear/plateau interpolation everywhere, no derivatives.

Given covariates, a fitted model turns uniform draws into conditional
observations through its quantile curve.  Models serialize to a versioned
JSON container (see :func:`save_model`); mean-field timings are runtime
metadata and are deliberately not serialized, so model files are
byte-identical across reruns.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .basis import Basis, IdentityBasis, basis_from_spec
from .dataset import Dataset
from .errors import ModelFormatError, ParameterError, ShapeError
from .gradient import GradientCoefficients, gradient_table
from .grid import GridDesign, UniformGrid, build_grid, uniform_grid
from .interp import curve_for
from .quantreg import QuantileCoefficients, fit_path
from .rng import substream

__all__ = [
    "FitMeta",
    "FittedProcess",
    "fit_hermite",
    "fit_linear",
    "generate",
    "save_model",
    "load_model",
    "default_m",
]

MODEL_FORMAT = "quantgen-model"
MODEL_VERSION = 1


def default_m(n: int) -> int:
    """Tail grid density when unspecified: sqrt(n) rounded to nearest."""
    return max(2, int(round(float(n) ** 0.5)))


@dataclass
class FitMeta:
    """Sizes and per-stage wall times of one fit."""

    n: int
    p: int
    regressions: int
    gradients: int
    timings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FittedProcess:
    """Everything needed to evaluate and sample the fitted quantile process."""

    variant: str
    grid: GridDesign | UniformGrid
    coeffs: QuantileCoefficients
    grads: GradientCoefficients
    basis: Basis
    fit_meta: FitMeta
    clamp_negative_slopes: bool = False

    def curve(self, x_model: np.ndarray):
        """Node table at one basis-expanded covariate vector."""
        return curve_for(self, x_model)

    def expand(self, x_star) -> np.ndarray:
        """Basis-expand one raw covariate vector, checking its arity."""
        x_star = np.asarray(x_star, dtype=float).reshape(-1)
        row = self.basis.expand_raw(x_star[None, :])[0]
        if row.size != self.coeffs.p:
            raise ShapeError(
                f"basis produced {row.size} features but the model has {self.coeffs.p}"
            )
        return row


def _fit(
    data: Dataset,
    variant: str,
    grid,
    basis: Basis | None,
    delta: float | None,
    clamp_negative_slopes: bool,
) -> FittedProcess:
    t_start = time.perf_counter()
    if basis is None:
        basis = IdentityBasis(input_dim=data.p - 1)
    design = basis.expand(data.covariates)
    model_data = (
        data if design is data.covariates else Dataset(design, data.responses)
    )
    t_reg0 = time.perf_counter()
    coeffs = fit_path(model_data, grid.levels)
    t_reg1 = time.perf_counter()
    if variant == "hermite":
        grads = gradient_table(model_data, coeffs, grid, delta)
    else:
        grads = GradientCoefficients.none()
    t_grad1 = time.perf_counter()
    meta = FitMeta(
        n=model_data.n,
        p=model_data.p,
        regressions=grid.size,
        gradients=int(grads.levels.size),
    )
    model = FittedProcess(
        variant=variant,
        grid=grid,
        coeffs=coeffs,
        grads=grads,
        basis=basis,
        fit_meta=meta,
        clamp_negative_slopes=clamp_negative_slopes,
    )
    t_end = time.perf_counter()
    meta.timings = {
        "regression": t_reg1 - t_reg0,
        "gradient": t_grad1 - t_reg1,
        "assembly": (t_reg0 - t_start) + (t_end - t_grad1),
        "total": t_end - t_start,
    }
    return model


def fit_hermite(
    data: Dataset,
    m: int | None = None,
    *,
    c: float = 2.0,
    tau_lo: float = 0.1,
    tau_hi: float = 0.9,
    delta: float = 0.1,
    basis: Basis | None = None,
    clamp_negative_slopes: bool = False,
) -> FittedProcess:
    """Fit the mixed-grid generator with derivative-informed interpolation.

    ``m`` defaults to ``sqrt(n)`` rounded; ``delta`` is the derivative
    window half-width on the native response scale (pass
    ``gradient.default_delta(data, fixed=None)`` for the data-driven rule).
    """
    if m is None:
        m = default_m(data.n)
    grid = build_grid(m, c, tau_lo, tau_hi)
    return _fit(data, "hermite", grid, basis, delta, clamp_negative_slopes)


def fit_linear(
    data: Dataset,
    m: int | None = None,
    *,
    basis: Basis | None = None,
) -> FittedProcess:
    """Fit the uniform-grid baseline generator (linear interpolation only)."""
    if m is None:
        m = default_m(data.n)
    grid = uniform_grid(m)
    return _fit(data, "linear", grid, basis, None, False)


def generate(model: FittedProcess, x_star, k: int, seed) -> np.ndarray:
    """Draw ``k`` conditional observations at raw covariates ``x_star``.

    ``seed`` may be an integer (a dedicated ``(seed, "generate")`` stream
    is derived) or a ready ``numpy.random.Generator`` when the caller
    manages stream labels itself.  Deterministic given
    ``(model, x_star, k, seed)``.
    """
    if k < 0:
        raise ParameterError(f"k must be non-negative; got {k}")
    rng = seed if isinstance(seed, np.random.Generator) else substream(int(seed), "generate")
    curve = model.curve(model.expand(x_star))
    u = rng.random(int(k))
    out = curve.values_at(u)
    return np.atleast_1d(np.asarray(out, dtype=float))


def _grid_to_spec(grid) -> dict:
    return grid.to_spec()


def _grid_from_spec(spec: dict):
    if spec["kind"] == "mixed":
        return GridDesign.from_spec(spec)
    if spec["kind"] == "uniform":
        return UniformGrid.from_spec(spec)
    raise ModelFormatError(f"unknown grid kind {spec.get('kind')!r}")


def model_to_dict(model: FittedProcess) -> dict:
    """JSON-ready dict; floats round-trip exactly through ``json``."""
    grads = None
    if not model.grads.empty:
        grads = {
            "levels": [float(v) for v in model.grads.levels],
            "g": [[float(v) for v in row] for row in model.grads.g],
            "delta": float(model.grads.delta),
            "window_counts": [int(v) for v in model.grads.window_counts],
        }
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "variant": model.variant,
        "basis": model.basis.to_spec(),
        "clamp_negative_slopes": bool(model.clamp_negative_slopes),
        "grid": _grid_to_spec(model.grid),
        "coefficients": {
            "levels": [float(v) for v in model.coeffs.levels],
            "betas": [[float(v) for v in row] for row in model.coeffs.betas],
        },
        "gradients": grads,
        "fit": {
            "n": model.fit_meta.n,
            "p": model.fit_meta.p,
            "regressions": model.fit_meta.regressions,
            "gradients": model.fit_meta.gradients,
        },
    }


def model_from_dict(doc: dict) -> FittedProcess:
    if doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"not a model file (format {doc.get('format')!r})")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc.get('version')!r} (this build reads {MODEL_VERSION})"
        )
    coeffs = QuantileCoefficients(
        levels=np.asarray(doc["coefficients"]["levels"], dtype=float),
        betas=np.asarray(doc["coefficients"]["betas"], dtype=float),
    )
    gspec = doc.get("gradients")
    if gspec is None:
        grads = GradientCoefficients.none()
    else:
        grads = GradientCoefficients(
            levels=np.asarray(gspec["levels"], dtype=float),
            g=np.asarray(gspec["g"], dtype=float),
            delta=float(gspec["delta"]),
            window_counts=np.asarray(gspec["window_counts"], dtype=int),
        )
    fit = doc.get("fit", {})
    meta = FitMeta(
        n=int(fit.get("n", 0)),
        p=int(fit.get("p", coeffs.p)),
        regressions=int(fit.get("regressions", coeffs.levels.size)),
        gradients=int(fit.get("gradients", grads.levels.size)),
    )
    return FittedProcess(
        variant=doc["variant"],
        grid=_grid_from_spec(doc["grid"]),
        coeffs=coeffs,
        grads=grads,
        basis=basis_from_spec(doc["basis"]),
        fit_meta=meta,
        clamp_negative_slopes=bool(doc.get("clamp_negative_slopes", False)),
    )


def save_model(model: FittedProcess, path: str) -> None:
    """Write the versioned JSON container (layout documented in the README)."""
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path: str) -> FittedProcess:
    """Read a model file written by :func:`save_model`."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
    return model_from_dict(doc)
