"""Mixed fine-tail / coarse-central quantile level grids.

The grid keeps the uniform ``j/m`` levels in both tails, where gradient
estimates are unreliable anyway, and replaces the central block
``[tau_lo, tau_hi]`` with only ``m' + 1`` equispaced levels,
``m' = ceil(c * m^(2/5))``.  Cubic interpolation with estimated derivatives
makes the sparse centre as accurate as the dense uniform grid, which is
where the training savings come from.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import ParameterError

__all__ = ["GridDesign", "UniformGrid", "build_grid", "uniform_grid"]

# Levels closer than this are considered the same grid node; the union of
# tail and central sets is set-theoretic, floating point needs a tolerance.
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class GridDesign:
    """Sorted levels with the central-region mask and its parameters."""

    m: int
    c: float
    tau_lo: float
    tau_hi: float
    m_prime: int
    levels: np.ndarray
    central_mask: np.ndarray

    @property
    def size(self) -> int:
        return int(self.levels.size)

    @property
    def central_levels(self) -> np.ndarray:
        return self.levels[self.central_mask]

    def to_spec(self) -> dict:
        return {
            "kind": "mixed",
            "m": self.m,
            "c": self.c,
            "tau_lo": self.tau_lo,
            "tau_hi": self.tau_hi,
            "m_prime": self.m_prime,
            "levels": [float(v) for v in self.levels],
            "central_mask": [bool(v) for v in self.central_mask],
        }

    @staticmethod
    def from_spec(spec: dict) -> "GridDesign":
        return GridDesign(
            m=int(spec["m"]),
            c=float(spec["c"]),
            tau_lo=float(spec["tau_lo"]),
            tau_hi=float(spec["tau_hi"]),
            m_prime=int(spec["m_prime"]),
            levels=np.asarray(spec["levels"], dtype=float),
            central_mask=np.asarray(spec["central_mask"], dtype=bool),
        )


@dataclass(frozen=True)
class UniformGrid:
    """Plain ``{j/m}`` grid used by the linear-interpolation baseline."""

    m: int
    levels: np.ndarray

    @property
    def size(self) -> int:
        return int(self.levels.size)

    def to_spec(self) -> dict:
        return {"kind": "uniform", "m": self.m, "levels": [float(v) for v in self.levels]}

    @staticmethod
    def from_spec(spec: dict) -> "UniformGrid":
        return UniformGrid(m=int(spec["m"]), levels=np.asarray(spec["levels"], dtype=float))


def _check_bounds(tau_lo: float, tau_hi: float) -> tuple[float, float]:
    tau_lo, tau_hi = float(tau_lo), float(tau_hi)
    if not (0.0 < tau_lo < tau_hi < 1.0):
        raise ParameterError(
            f"central bounds must satisfy 0 < tau_lo < tau_hi < 1; got ({tau_lo}, {tau_hi})"
        )
    return tau_lo, tau_hi


def build_grid(m: int, c: float, tau_lo: float, tau_hi: float) -> GridDesign:
    """Union of the uniform tail levels and the sparse central levels.

    Tail levels are exactly ``{j/m in (0,1) \\ [tau_lo, tau_hi]}``; central
    levels are ``tau_lo + k (tau_hi - tau_lo)/m'`` for ``k = 0..m'``.
    Near-coincident levels are merged keeping the central classification.
    """
    m = int(m)
    if m < 2:
        raise ParameterError(f"m must be >= 2; got {m}")
    c = float(c)
    if not c > 0:
        raise ParameterError(f"c must be positive; got {c}")
    tau_lo, tau_hi = _check_bounds(tau_lo, tau_hi)

    tails = np.arange(1, m) / m
    tails = tails[(tails < tau_lo - MERGE_TOL) | (tails > tau_hi + MERGE_TOL)]
    m_prime = ceil(c * m ** 0.4)
    central = tau_lo + np.arange(m_prime + 1) * ((tau_hi - tau_lo) / m_prime)
    central[-1] = tau_hi  # exact endpoint regardless of rounding

    levels = np.concatenate([tails, central])
    mask = np.concatenate([np.zeros(tails.size, dtype=bool), np.ones(central.size, dtype=bool)])
    order = np.argsort(levels, kind="stable")
    levels, mask = levels[order], mask[order]

    keep_levels = [levels[0]]
    keep_mask = [mask[0]]
    for lv, mk in zip(levels[1:], mask[1:]):
        if lv - keep_levels[-1] <= MERGE_TOL:
            keep_mask[-1] = keep_mask[-1] or mk
        else:
            keep_levels.append(lv)
            keep_mask.append(mk)
    return GridDesign(
        m=m,
        c=c,
        tau_lo=tau_lo,
        tau_hi=tau_hi,
        m_prime=m_prime,
        levels=np.asarray(keep_levels),
        central_mask=np.asarray(keep_mask, dtype=bool),
    )


def uniform_grid(m: int) -> UniformGrid:
    """The ``{j/m : j = 1..m-1}`` grid of the linear baseline."""
    m = int(m)
    if m < 2:
        raise ParameterError(f"m must be >= 2; got {m}")
    return UniformGrid(m=m, levels=np.arange(1, m) / m)
