"""Dataset container and delimited-file I/O.

A :class:`Dataset` holds the design matrix actually handed to the quantile
regression solver (first column is the intercept, or the first basis value
after expansion) together with the response vector.

On disk, datasets are CSV files with a header row ``x1,...,xp,y`` holding the
*raw* covariates: the intercept column is never stored, it is added by the
basis expansion on load.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import CsvFormatError, DataError

__all__ = ["Dataset", "load_dataset_csv", "save_dataset_csv", "save_samples_csv", "load_samples_csv"]


@dataclass(frozen=True)
class Dataset:
    """Design matrix (n x p, intercept in column 0) and responses (n,)."""

    covariates: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.covariates, dtype=float)
        y = np.asarray(self.responses, dtype=float)
        if X.ndim != 2:
            raise DataError("covariates must be a 2-d matrix")
        if y.ndim != 1:
            raise DataError("responses must be a 1-d vector")
        n, p = X.shape
        if y.shape[0] != n:
            raise DataError(f"row mismatch: {n} covariate rows vs {y.shape[0]} responses")
        if p < 1:
            raise DataError("need at least one covariate column")
        if n < p:
            raise DataError(f"need n >= p, got n={n}, p={p}")
        if not np.all(np.isfinite(X)):
            raise DataError("covariates contain non-finite entries")
        if not np.all(np.isfinite(y)):
            raise DataError("responses contain non-finite entries")
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    def take(self, indices: np.ndarray) -> "Dataset":
        """Row subset/replication, keeping (x_i, y_i) pairs intact."""
        return Dataset(self.covariates[indices], self.responses[indices])


def load_dataset_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read a raw-covariate CSV; returns (X_raw (n, p_raw), y (n,)).

    The header must be exactly ``x1..xp`` (in order) followed by ``y``.
    Raises :class:`CsvFormatError` naming the missing/odd column or the
    offending line for unparsable values.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("file is empty") from None
        header = [h.strip() for h in header]
        if not header or header[-1] != "y":
            raise CsvFormatError("missing column 'y' (must be the last column)", line=1)
        p_raw = len(header) - 1
        if p_raw < 1:
            raise CsvFormatError("need at least one covariate column 'x1'", line=1)
        expected = [f"x{j}" for j in range(1, p_raw + 1)]
        for want, got in zip(expected, header[:-1]):
            if want != got:
                raise CsvFormatError(f"missing column '{want}' (found '{got}')", line=1)
        rows = []
        ys = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != p_raw + 1:
                raise CsvFormatError(
                    f"expected {p_raw + 1} fields, found {len(rec)}", line=lineno
                )
            try:
                vals = [float(v) for v in rec]
            except ValueError as exc:
                raise CsvFormatError(str(exc), line=lineno) from None
            rows.append(vals[:-1])
            ys.append(vals[-1])
    if not rows:
        raise CsvFormatError("no data rows")
    return np.asarray(rows, dtype=float), np.asarray(ys, dtype=float)


def save_dataset_csv(path: str, x_raw: np.ndarray, y: np.ndarray) -> None:
    """Write raw covariates and responses with the ``x1..xp,y`` header."""
    x_raw = np.atleast_2d(np.asarray(x_raw, dtype=float))
    y = np.asarray(y, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j}" for j in range(1, x_raw.shape[1] + 1)] + ["y"])
        for row, yi in zip(x_raw, y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(yi))])


def save_samples_csv(path: str, values: np.ndarray) -> None:
    """Write a single-column sample file with header ``y``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"])
        for v in np.asarray(values, dtype=float):
            writer.writerow([repr(float(v))])


def load_samples_csv(path: str) -> np.ndarray:
    """Read a single-column sample file written by :func:`save_samples_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("file is empty") from None
        if [h.strip() for h in header] != ["y"]:
            raise CsvFormatError("missing column 'y'", line=1)
        out = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                out.append(float(rec[0]))
            except ValueError as exc:
                raise CsvFormatError(str(exc), line=lineno) from None
    if not out:
        raise CsvFormatError("no data rows")
    return np.asarray(out, dtype=float)
