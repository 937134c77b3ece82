"""Basis expansions mapping raw covariates to regression designs.

A basis is part of a fitted model: generation accepts raw covariates and the
model applies its own expansion, so callers never have to reproduce feature
arithmetic.  Three kinds exist:

* ``identity``: design is ``(1, x1..xr)``; works for any raw arity;
* ``inventory``: maps a reorder policy point ``(s, S, mu)`` to
  ``(1, s+S, S-s, 1/(S-s), mu)``;
* ``matrix``: a user-supplied linear table ``T`` applied to ``(1, x1..xr)``.

All expansions operate on a raw design whose first column is the intercept.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError, ModelFormatError, ShapeError

__all__ = [
    "Basis",
    "IdentityBasis",
    "InventoryBasis",
    "MatrixBasis",
    "basis_from_spec",
    "basis_by_name",
    "expand_inventory",
    "with_intercept",
]


def with_intercept(x_raw: np.ndarray) -> np.ndarray:
    """Prepend the intercept column to raw covariates (n, r) -> (n, 1+r)."""
    x_raw = np.atleast_2d(np.asarray(x_raw, dtype=float))
    return np.hstack([np.ones((x_raw.shape[0], 1)), x_raw])


def expand_inventory(design_raw: np.ndarray) -> np.ndarray:
    """Map rows ``(1, s, S, mu)`` to ``(1, s+S, S-s, 1/(S-s), mu)``.

    Raises :class:`DataError` when any row has ``S <= s`` (the reciprocal
    spread would be undefined or negative).
    """
    D = np.atleast_2d(np.asarray(design_raw, dtype=float))
    if D.shape[1] != 4:
        raise ShapeError(f"inventory basis expects rows (1, s, S, mu); got {D.shape[1]} columns")
    s, big_s, mu = D[:, 1], D[:, 2], D[:, 3]
    spread = big_s - s
    if np.any(spread <= 0):
        bad = int(np.argmax(spread <= 0))
        raise DataError(f"inventory basis needs S > s; row {bad} has S - s = {spread[bad]:g}")
    return np.column_stack([np.ones_like(s), s + big_s, spread, 1.0 / spread, mu])


class Basis:
    """Common interface: ``expand`` a raw design, serialize to/from a spec dict."""

    id: str
    input_dim: int | None  # raw covariate count (excluding intercept); None = any

    def expand(self, design_raw: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def expand_raw(self, x_raw: np.ndarray) -> np.ndarray:
        """Expand raw covariates without an intercept column."""
        x_raw = np.atleast_2d(np.asarray(x_raw, dtype=float))
        if self.input_dim is not None and x_raw.shape[1] != self.input_dim:
            raise ShapeError(
                f"basis '{self.id}' expects {self.input_dim} raw covariate(s); "
                f"got {x_raw.shape[1]}"
            )
        return self.expand(with_intercept(x_raw))

    def to_spec(self) -> dict:
        raise NotImplementedError


class IdentityBasis(Basis):
    """Design is the raw covariates with an intercept; no transformation."""

    id = "identity"

    def __init__(self, input_dim: int | None = None):
        self.input_dim = input_dim

    def expand(self, design_raw: np.ndarray) -> np.ndarray:
        return np.atleast_2d(np.asarray(design_raw, dtype=float))

    def to_spec(self) -> dict:
        return {"kind": "identity", "input_dim": self.input_dim}


class InventoryBasis(Basis):
    """Reorder-policy features ``(1, s+S, S-s, 1/(S-s), mu)`` from ``(s, S, mu)``."""

    id = "inventory"
    input_dim = 3

    def expand(self, design_raw: np.ndarray) -> np.ndarray:
        return expand_inventory(design_raw)

    def to_spec(self) -> dict:
        return {"kind": "inventory"}


class MatrixBasis(Basis):
    """User-supplied linear features: row ``b = T @ (1, x1..xr)``."""

    id = "matrix"

    def __init__(self, table: np.ndarray):
        T = np.atleast_2d(np.asarray(table, dtype=float))
        if T.shape[1] < 2 or not np.all(np.isfinite(T)):
            raise DataError("basis table must be a finite matrix with >= 2 columns")
        self.table = T
        self.input_dim = T.shape[1] - 1

    def expand(self, design_raw: np.ndarray) -> np.ndarray:
        D = np.atleast_2d(np.asarray(design_raw, dtype=float))
        if D.shape[1] != self.table.shape[1]:
            raise ShapeError(
                f"matrix basis expects {self.table.shape[1] - 1} raw covariate(s); "
                f"got {D.shape[1] - 1}"
            )
        return D @ self.table.T

    def to_spec(self) -> dict:
        return {"kind": "matrix", "table": self.table.tolist()}


def basis_by_name(name: str, input_dim: int | None = None) -> Basis:
    """Look up a named basis ('identity' or 'inventory')."""
    if name == "identity":
        return IdentityBasis(input_dim)
    if name == "inventory":
        return InventoryBasis()
    raise ModelFormatError(f"unknown basis '{name}' (expected 'identity' or 'inventory')")


def basis_from_spec(spec: dict) -> Basis:
    """Rebuild a basis from its serialized spec dict."""
    kind = spec.get("kind")
    if kind == "identity":
        return IdentityBasis(spec.get("input_dim"))
    if kind == "inventory":
        return InventoryBasis()
    if kind == "matrix":
        return MatrixBasis(np.asarray(spec["table"], dtype=float))
    raise ModelFormatError(f"unknown basis kind {kind!r}")
