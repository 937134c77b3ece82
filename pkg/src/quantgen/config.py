"""Run configuration: defaults, flat config files, CLI merging.

Config files are flat ``key = value`` text; ``#`` starts a comment.  CLI
flags override file values, which override the built-in defaults.  The
merged result is echoed into every report so a run can be reproduced from
its own output.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .basis import Basis, basis_by_name
from .bootstrap import FitParams
from .errors import CsvFormatError, ParameterError

__all__ = ["RunConfig", "read_config_file", "merge_config", "echo_lines"]


@dataclass(frozen=True)
class RunConfig:
    """All tunables with their defaults."""

    m: int | None = None  # tail grid density; None resolves to round(sqrt(n))
    c: float = 2.0
    tau_lo: float = 0.1
    tau_hi: float = 0.9
    delta: float = 0.1
    b: int = 100
    k: int = 100_000
    alpha: float = 0.1
    reps: int = 100
    seed: int = 0
    workers: int = 1
    basis: str = "identity"
    variant: str = "hermite"
    clamp_negative_slopes: bool = False

    def validate(self) -> "RunConfig":
        if self.m is not None and self.m < 2:
            raise ParameterError(f"field 'm' must be >= 2; got {self.m}")
        if self.c <= 0:
            raise ParameterError(f"field 'c' must be positive; got {self.c}")
        if not 0.0 < self.tau_lo < self.tau_hi < 1.0:
            raise ParameterError(
                f"fields 'tau_lo' < 'tau_hi' must lie in (0, 1); got {self.tau_lo}, {self.tau_hi}"
            )
        if self.delta <= 0:
            raise ParameterError(f"field 'delta' must be positive; got {self.delta}")
        if self.b < 2:
            raise ParameterError(f"field 'b' must be >= 2; got {self.b}")
        if self.k < 1:
            raise ParameterError(f"field 'k' must be >= 1; got {self.k}")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"field 'alpha' must lie in (0, 1); got {self.alpha}")
        if self.reps < 1:
            raise ParameterError(f"field 'reps' must be >= 1; got {self.reps}")
        if self.workers < 1:
            raise ParameterError(f"field 'workers' must be >= 1; got {self.workers}")
        if self.variant not in ("hermite", "linear"):
            raise ParameterError(f"field 'variant' must be 'hermite' or 'linear'; got {self.variant!r}")
        if self.basis not in ("identity", "inventory"):
            raise ParameterError(f"field 'basis' must be 'identity' or 'inventory'; got {self.basis!r}")
        return self

    def fit_params(self, basis: Basis | None = None) -> FitParams:
        if basis is None and self.basis != "identity":
            basis = basis_by_name(self.basis)
        return FitParams(
            variant=self.variant,
            m=self.m,
            c=self.c,
            tau_lo=self.tau_lo,
            tau_hi=self.tau_hi,
            delta=self.delta,
            basis=basis,
            clamp_negative_slopes=self.clamp_negative_slopes,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in ("basis", "variant"):
        return raw
    if key == "clamp_negative_slopes":
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise CsvFormatError(f"config key '{key}' expects a boolean, got {raw!r}")
    if key in ("m", "b", "k", "reps", "seed", "workers"):
        try:
            return int(raw)
        except ValueError:
            raise CsvFormatError(f"config key '{key}' expects an integer, got {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise CsvFormatError(f"config key '{key}' expects a number, got {raw!r}") from None


def read_config_file(path: str) -> dict:
    """Parse a flat key=value file into typed overrides."""
    overrides = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            key, sep, raw = text.partition("=")
            if not sep:
                raise CsvFormatError("expected 'key = value'", line=lineno)
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise CsvFormatError(f"unknown config key '{key}'", line=lineno)
            overrides[key] = _parse_value(key, raw)
    return overrides


def merge_config(
    file_overrides: dict | None = None, cli_overrides: dict | None = None
) -> RunConfig:
    """defaults <- config file <- CLI flags (None CLI values are 'unset')."""
    cfg = RunConfig()
    if file_overrides:
        cfg = replace(cfg, **file_overrides)
    if cli_overrides:
        cfg = replace(cfg, **{k: v for k, v in cli_overrides.items() if v is not None})
    return cfg.validate()


def echo_lines(cfg: RunConfig) -> list[str]:
    """Deterministic 'key = value' lines of the merged config."""
    out = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            value = "auto"
        elif isinstance(value, bool):
            value = "true" if value else "false"
        out.append(f"{f.name} = {value}")
    return out
