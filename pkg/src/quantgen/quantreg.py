"""Pinball-loss quantile regression solved by a primal-dual interior point.

The level-tau regression coefficients minimize ``sum_i rho_tau(y_i - x_i'b)``
with ``rho_tau(u) = (tau - 1{u <= 0}) u``.  That problem is the linear
program

    max  y'a   s.t.  X'a = (1 - tau) X'1,   0 <= a <= 1,

whose equality-constraint dual recovers ``b``.  We solve it with a Mehrotra
predictor-corrector method: each iteration factors a single p x p weighted
Gram matrix, so the cost per iteration is O(n p^2) and whole grids of levels
are cheap for the small p used here.

When the optimum is not unique (flat facets, e.g. ``n*tau`` integer with an
intercept-only design) the iterates converge to the analytic center of the
optimal facet; any point of the facet is a valid minimizer, so tests on such
instances should compare objective values rather than coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dataset import Dataset
from .errors import (
    ConvergenceError,
    DegenerateDesignError,
    LevelError,
    ParameterError,
)

__all__ = [
    "QuantileCoefficients",
    "pinball_loss",
    "pinball_objective",
    "fit_quantile",
    "fit_path",
]

# Interior-point controls: absolute gap tolerance is scaled by 1 + |objective|.
GAP_TOL = 1e-8
FEAS_TOL = 1e-9
MAX_ITER = 200
_STEP_SHRINK = 0.9995
_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class QuantileCoefficients:
    """Coefficient rows ``betas[j]`` for strictly increasing ``levels[j]``."""

    levels: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        betas = np.atleast_2d(np.asarray(self.betas, dtype=float))
        if levels.ndim != 1 or betas.shape[0] != levels.shape[0]:
            raise ParameterError("levels length must equal the number of beta rows")
        if np.any(np.diff(levels) <= 0):
            raise ParameterError("levels must be strictly increasing")
        if np.any(levels <= 0) or np.any(levels >= 1):
            raise ParameterError("levels must lie in (0, 1)")
        if not np.all(np.isfinite(betas)):
            raise ParameterError("beta rows must be finite")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "betas", betas)

    @property
    def p(self) -> int:
        return self.betas.shape[1]

    def beta_at(self, tau: float) -> np.ndarray:
        """Row for an exact grid level (no interpolation)."""
        j = int(np.searchsorted(self.levels, tau))
        if j >= len(self.levels) or abs(self.levels[j] - tau) > 1e-12:
            raise ParameterError(f"level {tau:g} is not on the fitted grid")
        return self.betas[j]


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0 or not np.isfinite(tau):
        raise ParameterError(f"quantile level must lie in (0, 1); got {tau!r}")
    return tau


def pinball_loss(u, tau: float):
    """Asymmetric check loss ``(tau - 1{u <= 0}) * u``; >= 0, zero iff u = 0."""
    tau = _check_tau(tau)
    u = np.asarray(u, dtype=float)
    out = (tau - (u <= 0.0)) * u
    return float(out) if out.ndim == 0 else out


def pinball_objective(data: Dataset, beta: np.ndarray, tau: float) -> float:
    """Total check loss of ``beta`` on the dataset."""
    res = data.responses - data.covariates @ np.asarray(beta, dtype=float)
    return float(np.sum(pinball_loss(res, tau)))


def _check_full_rank(X: np.ndarray) -> np.ndarray:
    """Pivoted Cholesky of G = X'X; raises naming the first dependent column.

    Returns G so callers can reuse it (e.g. for the least-squares start).
    """
    G = X.T @ X
    p = G.shape[0]
    diag0 = np.diag(G).copy()
    work = G.copy()
    active = np.arange(p)
    for k in range(p):
        rem = np.diag(work)[k:]
        j_rel = int(np.argmax(rem))
        pivot = rem[j_rel]
        j = k + j_rel
        col = int(active[j])
        if pivot <= _RANK_RTOL * max(diag0[col], 0.0) or pivot <= 0.0:
            raise DegenerateDesignError(col)
        if j != k:
            work[[k, j], :] = work[[j, k], :]
            work[:, [k, j]] = work[:, [j, k]]
            active[[k, j]] = active[[j, k]]
        L = np.sqrt(pivot)
        work[k, k] = L
        if k + 1 < p:
            work[k + 1 :, k] /= L
            work[k + 1 :, k + 1 :] -= np.outer(work[k + 1 :, k], work[k + 1 :, k])
    return G


def _factor(M: np.ndarray):
    """Cholesky with a deterministic ridge fallback for near-singular M."""
    p = M.shape[0]
    bump = 1e-13 * (np.trace(M) / p + 1.0)
    for _ in range(4):
        try:
            return cho_factor(M, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            M = M + bump * np.eye(p)
            bump *= 100.0
    raise np.linalg.LinAlgError("weighted Gram matrix could not be factored")


def _blocking(num: np.ndarray, den: np.ndarray) -> float:
    """max of num/den (the blocking ratio); <= 0 means the step is unblocked."""
    return float(np.max(num / den))


def _solve_ip(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    tol: float,
    max_iter: int,
    beta0: np.ndarray | None,
):
    """Mehrotra predictor-corrector on the bounded-dual formulation.

    Returns ``(beta, gap, iterations)``; raises :class:`ConvergenceError`
    past the iteration cap.  The start point is primal-infeasible when tau
    is extreme (kept away from the bounds); primal feasibility is restored
    by the Newton steps and enforced at termination.
    """
    n, p = X.shape
    b = (1.0 - tau) * X.sum(axis=0)
    b_scale = 1.0 + float(np.max(np.abs(b)))
    c_scale = 1.0 + float(np.max(np.abs(y)))
    y_shift = (1.0 - tau) * float(y.sum())  # pinball objective = y'x - y_shift

    x = np.full(n, min(max(1.0 - tau, 0.2), 0.8))
    w = 1.0 - x
    if beta0 is None:
        beta0, *_ = np.linalg.lstsq(X, y, rcond=None)
    yd = -np.asarray(beta0, dtype=float)
    rc = -y - X @ yd  # dual-constraint right side, z - q converges to it
    if not np.any(rc):
        # the start point interpolates the data exactly: zero loss is the
        # global minimum at every level, no iterations needed
        return -yd, 0.0, 0
    shift = 0.5 * float(np.mean(np.abs(rc))) + 1e-6 * c_scale
    z = np.maximum(rc, 0.0) + shift
    q = np.maximum(-rc, 0.0) + shift

    gap = float(x @ z + w @ q)
    for it in range(max_iter):
        r_p = b - X.T @ x
        rc = -y - X @ yd
        gap = float(x @ z + w @ q)
        obj = float(y @ x) - y_shift
        if gap <= tol * (1.0 + abs(obj)):
            if (
                np.max(np.abs(r_p)) <= FEAS_TOL * b_scale
                and np.max(np.abs(rc - z + q)) <= FEAS_TOL * c_scale
            ):
                return -yd, gap, it

        zx = z / x
        qw = q / w
        d_inv = 1.0 / (zx + qw)
        M = (X * d_inv[:, None]).T @ X
        M = 0.5 * (M + M.T)
        fac = _factor(M)

        # Predictor: pure Newton step toward complementarity zero.  The
        # dual residual and the +z-q term cancel, leaving rc as the RHS.
        dy = cho_solve(fac, r_p + X.T @ (d_inv * rc), check_finite=False)
        dx = d_inv * (X @ dy - rc)
        dz = -z - zx * dx
        dq = -q + qw * dx
        tp = max(_blocking(-dx, x), _blocking(dx, w))
        td = max(_blocking(-dz, z), _blocking(-dq, q))
        ap = min(1.0, 1.0 / tp) if tp > 0 else 1.0
        ad = min(1.0, 1.0 / td) if td > 0 else 1.0
        mu = gap / (2 * n)
        gap_aff = (
            gap
            + ad * (float(x @ dz) + float(w @ dq))
            + ap * (float(dx @ z) - float(dx @ q))
            + ap * ad * (float(dx @ dz) - float(dx @ dq))
        )
        sigma = (max(gap_aff, 0.0) / gap) ** 3 if gap > 0 else 0.0
        smu = sigma * mu

        # Corrector: recentre and cancel the second-order products.
        gx = smu - dx * dz
        gw = smu + dx * dq  # dw = -dx
        rhs2 = rc - gx / x + gw / w
        dy = cho_solve(fac, r_p + X.T @ (d_inv * rhs2), check_finite=False)
        dx = d_inv * (X @ dy - rhs2)
        dz = (gx - z * dx) / x - z
        dq = (gw + q * dx) / w - q

        tp = max(_blocking(-dx, x), _blocking(dx, w))
        td = max(_blocking(-dz, z), _blocking(-dq, q))
        ap = min(1.0, _STEP_SHRINK / tp) if tp > 0 else 1.0
        ad = min(1.0, _STEP_SHRINK / td) if td > 0 else 1.0
        x += ap * dx
        w -= ap * dx
        yd += ad * dy
        z += ad * dz
        q += ad * dq

    raise ConvergenceError(gap=gap, iterations=max_iter)


def fit_quantile(
    data: Dataset,
    tau: float,
    *,
    tol: float = GAP_TOL,
    max_iter: int = MAX_ITER,
    _skip_rank_check: bool = False,
    _warm_beta: np.ndarray | None = None,
) -> np.ndarray:
    """Minimize the level-``tau`` check loss; returns the coefficient vector.

    Raises :class:`DegenerateDesignError` for rank-deficient designs and
    :class:`ConvergenceError` past the iteration cap.
    """
    tau = _check_tau(tau)
    if not _skip_rank_check:
        _check_full_rank(data.covariates)
    beta, _, _ = _solve_ip(data.covariates, data.responses, tau, tol, max_iter, _warm_beta)
    return beta


def fit_path(
    data: Dataset,
    levels,
    *,
    tol: float = GAP_TOL,
    max_iter: int = MAX_ITER,
) -> QuantileCoefficients:
    """Fit every level of a strictly increasing grid.

    The least-squares point is computed once and reused as the starting
    point of every level's solve: a start-reuse accelerator that leaves
    each returned optimum unchanged up to solver tolerance.  (Reusing the
    previous *level's* solution was measured slower: the centering steps
    of the interior point recover faster from one well-centred start than
    from a stale near-boundary one.)  Failures are re-raised wrapped with
    the offending level.  Levels are independent given the shared start,
    so evaluation order is immaterial and safe to parallelize.
    """
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or levels.size == 0:
        raise ParameterError("levels must be a non-empty 1-d sequence")
    if np.any(np.diff(levels) <= 0):
        raise ParameterError("levels must be strictly increasing")
    X, y = data.covariates, data.responses
    G = _check_full_rank(X)
    ols = np.linalg.solve(G, X.T @ y)
    betas = np.empty((levels.size, data.p))
    for j, tau in enumerate(levels):
        try:
            betas[j] = fit_quantile(
                data,
                tau,
                tol=tol,
                max_iter=max_iter,
                _skip_rank_check=True,
                _warm_beta=ols,
            )
        except (ConvergenceError, ParameterError) as exc:
            raise LevelError(float(tau), exc) from exc
    return QuantileCoefficients(levels=levels, betas=betas)
