"""Data generators: synthetic location-scale families and an (s,S) inventory.

Synthetic families share the covariate law ``x1 ~ U(0,10)``,
``x2 ~ U(-5,5)``, ``x3 ~ U(0,5)`` (independent), the location rule
``mu(x) = 5 + x1 + 2 x2 + 0.5 x3`` and the scale rule
``sigma(x) = 1 + 0.1 x1 + 0.2 x2 + 0.05 x3``; they differ in the base law
of ``z`` in ``y = mu(x) + sigma(x) z``:

* normal      : z standard normal;
* halfnormal  : z = |Z|, so mu(x) is the left support endpoint and sigma
                 the scale (one of several plausible parameterizations; we
                 fix this one and use it consistently in the oracles);
* student_t   : z ~ t with 5 degrees of freedom (sigma is the scale
                 multiplier, not the standard deviation).

The inventory simulator is a discrete-time periodic-review (s,S) system:
each period the inventory position (on-hand + on-order, backorders
negative) is reviewed first; if it fell below ``s`` an order up to ``S``
is placed, paying a fixed cost plus a per-unit cost, and arrives after a
Poisson lead time, before demand of its arrival period.  Demand is
exponential; unmet demand is fully backlogged (no explicit backorder
penalty); holding cost accrues on positive end-of-period on-hand.  The
output is average cost per period.

Randomness convention: each simulator run consumes one stream, drawing a
horizon-length block of demand uniforms followed by a horizon-length block
of lead-time uniforms (a lead draw is allocated every period and discarded
when no order is placed).  This keeps trajectories identical whether runs
execute one at a time or vectorized in batches.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .bootstrap import Estimand
from .dataset import Dataset
from .errors import DataError, ParameterError, UnsupportedOracleError
from .rng import substream

__all__ = [
    "SyntheticFamily",
    "family",
    "MU_COEF",
    "SIGMA_COEF",
    "location_scale",
    "gen_synthetic",
    "true_quantile",
    "true_gradient_coeffs",
    "true_beta",
    "true_estimand",
    "reference_synthetic",
    "InventoryConfig",
    "inventory_simulate",
    "inventory_dataset",
    "reference_inventory",
]

MU_COEF = np.array([5.0, 1.0, 2.0, 0.5])
SIGMA_COEF = np.array([1.0, 0.1, 0.2, 0.05])

_COV_LOW = np.array([0.0, -5.0, 0.0])
_COV_HIGH = np.array([10.0, 5.0, 5.0])

_BATCH_ROWS = 2048  # lockstep batch width for the inventory engine


@dataclass(frozen=True)
class SyntheticFamily:
    kind: str  # normal | halfnormal | student_t
    nu: int = 5

    def base(self):
        """The base law of z as a frozen scipy distribution."""
        if self.kind == "normal":
            return stats.norm
        if self.kind == "halfnormal":
            return stats.halfnorm
        if self.kind == "student_t":
            return stats.t(df=self.nu)
        raise ParameterError(f"unknown family kind {self.kind!r}")


def family(name: str) -> SyntheticFamily:
    """Parse a family name; accepts 'normal', 'halfnormal', 'student-t'."""
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    if key in ("normal", "gaussian"):
        return SyntheticFamily("normal")
    if key == "halfnormal":
        return SyntheticFamily("halfnormal")
    if key in ("student_t", "t", "students_t"):
        return SyntheticFamily("student_t")
    raise ParameterError(f"unknown family {name!r}")


def location_scale(design: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """mu(x) and sigma(x) for design rows (1, x1, x2, x3)."""
    design = np.atleast_2d(np.asarray(design, dtype=float))
    mu = design @ MU_COEF
    sigma = design @ SIGMA_COEF
    if np.any(sigma <= 0):
        raise DataError("sigma(x) must be positive at every sampled covariate point")
    return mu, sigma


def _draw_base(fam: SyntheticFamily, rng: np.random.Generator, n: int) -> np.ndarray:
    if fam.kind == "normal":
        return rng.standard_normal(n)
    if fam.kind == "halfnormal":
        return np.abs(rng.standard_normal(n))
    if fam.kind == "student_t":
        return rng.standard_t(fam.nu, size=n)
    raise ParameterError(f"unknown family kind {fam.kind!r}")


def gen_synthetic(fam: SyntheticFamily, n: int, seed) -> Dataset:
    """Draw n rows (1, x1, x2, x3) with conditional responses; deterministic.

    ``seed`` is an integer (a ``(seed, "synthetic")`` stream is derived) or
    a ready ``numpy.random.Generator``.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1; got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else substream(int(seed), "synthetic")
    cols = [rng.uniform(lo, hi, n) for lo, hi in zip(_COV_LOW, _COV_HIGH)]
    design = np.column_stack([np.ones(n)] + cols)
    mu, sigma = location_scale(design)
    y = mu + sigma * _draw_base(fam, rng, n)
    return Dataset(design, y)


def _design_row(x_raw) -> np.ndarray:
    x_raw = np.asarray(x_raw, dtype=float).reshape(-1)
    if x_raw.size != 3:
        raise ParameterError(f"expected raw covariates (x1, x2, x3); got {x_raw.size}")
    return np.concatenate([[1.0], x_raw])


def true_quantile(fam: SyntheticFamily, tau: float, x_raw) -> float:
    """Analytic conditional quantile mu(x) + sigma(x) * q_base(tau)."""
    if not 0.0 < tau < 1.0:
        raise ParameterError(f"quantile level must lie in (0, 1); got {tau}")
    mu, sigma = location_scale(_design_row(x_raw))
    return float(mu[0] + sigma[0] * fam.base().ppf(tau))


def true_beta(fam: SyntheticFamily, tau: float) -> np.ndarray:
    """Analytic coefficient vector of the conditional quantile plane."""
    return MU_COEF + fam.base().ppf(tau) * SIGMA_COEF


def true_gradient_coeffs(fam: SyntheticFamily, tau: float) -> np.ndarray:
    """Analytic derivative of the coefficient vector in tau."""
    base = fam.base()
    z = base.ppf(tau)
    dens = base.pdf(z)
    if dens <= 0:
        raise UnsupportedOracleError(f"base density vanishes at level {tau}")
    return SIGMA_COEF / dens


def true_estimand(fam: SyntheticFamily, est: Estimand, x_raw) -> float:
    """Analytic value of an estimand of the conditional law at x."""
    mu, sigma = location_scale(_design_row(x_raw))
    mu, sigma = float(mu[0]), float(sigma[0])
    base = fam.base()
    if est.kind == "mean":
        return mu + sigma * float(base.mean())
    if est.kind == "quantile":
        return mu + sigma * float(base.ppf(est.level))
    if est.kind == "survival":
        return float(base.sf((est.threshold - mu) / sigma))
    raise ParameterError(f"unknown estimand kind {est.kind!r}")


def reference_synthetic(fam: SyntheticFamily, x_raw, k: int, seed: int) -> np.ndarray:
    """Draw k observations from the analytic conditional law at x."""
    if k < 0:
        raise ParameterError(f"k must be non-negative; got {k}")
    mu, sigma = location_scale(_design_row(x_raw))
    rng = substream(seed, "reference")
    return float(mu[0]) + float(sigma[0]) * _draw_base(fam, rng, int(k))


# ---------------------------------------------------------------------------
# (s,S) inventory simulator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InventoryConfig:
    """Policy point, demand / lead-time laws and cost rates."""

    s: float = 320.0
    S: float = 420.0
    mu: float = 330.0
    theta: float = 6.0
    holding: float = 0.5
    fixed_cost: float = 36.0
    unit_cost: float = 1.0
    horizon: int = 1000
    initial_inventory: float = 1000.0

    def __post_init__(self):
        if not self.s < self.S:
            raise ParameterError(f"need s < S; got s={self.s}, S={self.S}")
        if not self.mu > 0:
            raise ParameterError(f"mean demand must be positive; got {self.mu}")
        if self.theta < 0:
            raise ParameterError(f"mean lead time must be >= 0; got {self.theta}")
        if self.horizon < 1:
            raise ParameterError(f"horizon must be >= 1; got {self.horizon}")


def _poisson_cdf_table(theta: float, cap: int = 350) -> np.ndarray:
    """CDF table built by the sequential pmf recurrence (exact inversion)."""
    if theta == 0.0:
        return np.array([1.0])
    terms = [np.exp(-theta)]
    k = 0
    while k < cap and terms[-1] > 0.0:
        k += 1
        terms.append(terms[-1] * (theta / k))
    return np.cumsum(terms)


def _simulate_rows(
    s: np.ndarray,
    S: np.ndarray,
    mu: np.ndarray,
    cfg: InventoryConfig,
    streams,
) -> np.ndarray:
    """Lockstep simulation of many rows; one stream per row."""
    R = len(streams)
    T = cfg.horizon
    cdf = _poisson_cdf_table(cfg.theta)
    max_lead = cdf.size  # searchsorted can return at most len(cdf)
    demands = np.empty((R, T))
    leads = np.empty((R, T), dtype=np.int64)
    for i, rng in enumerate(streams):
        demands[i] = -mu[i] * np.log1p(-rng.random(T))
        leads[i] = np.searchsorted(cdf, rng.random(T), side="left")

    arrivals = np.zeros((R, T + max_lead + 1))
    on_hand = np.full(R, float(cfg.initial_inventory))
    on_order = np.zeros(R)
    cost = np.zeros(R)
    rows = np.arange(R)
    for t in range(T):
        position = on_hand + on_order
        need = position < s
        if need.any():
            idx = rows[need]
            qty = S[idx] - position[idx]
            cost[idx] += cfg.fixed_cost + cfg.unit_cost * qty
            arrivals[idx, t + leads[idx, t]] += qty
            on_order[idx] += qty
        due = arrivals[:, t]
        on_hand += due
        on_order -= due
        on_hand -= demands[:, t]
        cost += cfg.holding * np.maximum(on_hand, 0.0)
    return cost / T


def inventory_simulate(cfg: InventoryConfig, seed: int) -> float:
    """Average cost per period of one simulated trajectory; deterministic."""
    one = np.array([cfg.s]), np.array([cfg.S]), np.array([cfg.mu])
    return float(_simulate_rows(*one, cfg, [substream(seed, "run")])[0])


def _run_batches(s, S, mu, cfg: InventoryConfig, seed: int, label: str) -> np.ndarray:
    n = s.size
    out = np.empty(n)
    for start in range(0, n, _BATCH_ROWS):
        stop = min(start + _BATCH_ROWS, n)
        streams = [substream(seed, label, i) for i in range(start, stop)]
        out[start:stop] = _simulate_rows(s[start:stop], S[start:stop], mu[start:stop], cfg, streams)
    return out


def inventory_dataset(
    n: int, seed: int, cfg: InventoryConfig = InventoryConfig()
) -> Dataset:
    """Integer covariates (s, S, mu) uniform on their ranges, one run each.

    Rows use distinct simulator streams keyed by row index, so duplicated
    covariate points still receive independent cost draws.  The returned
    design holds the raw columns (1, s, S, mu); pass the inventory basis to
    the fitting functions to expand them.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1; got {n}")
    rng = substream(seed, "covariates")
    s = rng.integers(270, 341, size=n).astype(float)
    big_s = rng.integers(380, 451, size=n).astype(float)
    mu = rng.integers(310, 341, size=n).astype(float)
    costs = _run_batches(s, big_s, mu, cfg, seed, "row")
    design = np.column_stack([np.ones(n), s, big_s, mu])
    return Dataset(design, costs)


def reference_inventory(cfg: InventoryConfig, k: int, seed: int) -> np.ndarray:
    """k independent simulator runs at one fixed policy point."""
    if k < 1:
        raise ParameterError(f"k must be >= 1; got {k}")
    s = np.full(k, cfg.s)
    big_s = np.full(k, cfg.S)
    mu = np.full(k, cfg.mu)
    return _run_batches(s, big_s, mu, cfg, seed, "row")


def inventory_config_at(x_raw, base: InventoryConfig = InventoryConfig()) -> InventoryConfig:
    """Config at raw covariates (s, S, mu), keeping the base cost settings."""
    x_raw = np.asarray(x_raw, dtype=float).reshape(-1)
    if x_raw.size != 3:
        raise ParameterError(f"expected raw covariates (s, S, mu); got {x_raw.size}")
    return replace(base, s=float(x_raw[0]), S=float(x_raw[1]), mu=float(x_raw[2]))
