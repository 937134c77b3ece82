"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (see ``quantgen.cli``), so new
error conditions should reuse one of the classes below rather than raising
bare ``ValueError``/``RuntimeError``.
"""

from __future__ import annotations


class QuantgenError(Exception):
    """Base class for all package errors."""


class ParameterError(QuantgenError, ValueError):
    """A tunable is outside its admissible domain (tau, m, alpha, ...)."""


class DataError(QuantgenError, ValueError):
    """A dataset violates its invariants (non-finite entries, n < p, ...)."""


class ShapeError(QuantgenError, ValueError):
    """Array dimensions do not match what an operation expects."""


class CsvFormatError(QuantgenError, ValueError):
    """A CSV file cannot be parsed; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class DegenerateDesignError(QuantgenError, ValueError):
    """The design matrix is rank deficient; carries the dependent column."""

    def __init__(self, column_index: int, message: str | None = None):
        super().__init__(
            message or f"design matrix is rank deficient (column {column_index} "
            f"is linearly dependent on earlier columns)"
        )
        self.column_index = column_index


class ConvergenceError(QuantgenError, RuntimeError):
    """The solver hit its iteration cap; carries the final optimality gap."""

    def __init__(self, gap: float, iterations: int, message: str | None = None):
        super().__init__(
            message or f"solver did not converge within {iterations} iterations "
            f"(final optimality gap {gap:.3e})"
        )
        self.gap = gap
        self.iterations = iterations


class DegenerateWindowError(QuantgenError, RuntimeError):
    """Too few observations fall inside a gradient window to invert it."""

    def __init__(self, window_count: int, level: float | None = None):
        where = "" if level is None else f" at level {level:g}"
        super().__init__(
            f"gradient window{where} holds {window_count} observation(s); "
            f"the second-moment matrix cannot be inverted reliably"
        )
        self.window_count = window_count
        self.level = level


class LevelError(QuantgenError):
    """Wraps another error with the quantile level it occurred at."""

    def __init__(self, level: float, cause: Exception):
        super().__init__(f"at level {level:g}: {cause}")
        self.level = level
        self.cause = cause


class ReplicateError(QuantgenError):
    """Wraps another error with the bootstrap replicate it occurred in."""

    def __init__(self, replicate: int, cause: Exception):
        super().__init__(f"bootstrap replicate {replicate}: {cause}")
        self.replicate = replicate
        self.cause = cause


class ModelFormatError(QuantgenError, ValueError):
    """A model file is malformed or has an unsupported version."""


class UnsupportedOracleError(QuantgenError, ValueError):
    """A diagnostic needs an analytic oracle the input does not provide."""
