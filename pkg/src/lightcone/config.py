"""Numeric defaults shared by the engine and the CLI."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    null_tol: float = 1e-10
    pd_tol: float = 1e-12
    dual_tol: float = 1e-9
    deriv_tol: float = 1e-6
    gauss_tol: float = 1e-5
    s_flat_tol: float = 1e-6
    rank_tol: float = 1e-10

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ConfigError(f"tolerance {f.name} must be positive")


DEFAULT_TOLERANCES = Tolerances()

DEFAULT_ORDER = 16
DEFAULT_EPS = 1.0
# FD-in-t base step relative to the variation half-range eps
T_STEP_FRACTION = 1e-2
# FD-in-x step relative to the chart box size
X_STEP_FRACTION = 1e-3
TUBULAR_CAP = 1.0


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a CLI report; echoed into the report."""

    chart: dict
    box: list | None = None
    order: int = DEFAULT_ORDER
    eps: float = DEFAULT_EPS
    tolerances: Tolerances = field(default_factory=Tolerances)
    threads: int = 1
    verbose: bool = False

    def __post_init__(self):
        if self.order < 2:
            raise ConfigError("quadrature order must be >= 2")
        if self.threads < 1:
            raise ConfigError("thread count must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def thread_count() -> int:
    """Parallelism cap from ``LIGHTCONE_THREADS`` (default 1)."""
    raw = os.environ.get("LIGHTCONE_THREADS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"LIGHTCONE_THREADS must be an integer, got {raw!r}") from exc
    return max(1, value)
