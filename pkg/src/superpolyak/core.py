"""Problem oracles and per-run bookkeeping shared by every solver."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ConfigError(ValueError):
    """Invalid problem or solver configuration."""


class ZeroGradient(ArithmeticError):
    """The selected generalized gradient vanished at a non-optimal point."""


class Status(str, enum.Enum):
    CONVERGED = "converged"
    BUDGET_EXHAUSTED = "budget_exhausted"
    STALLED = "stalled"
    MAX_OUTER = "max_outer"


class StepKind(str, enum.Enum):
    INIT = "init"
    FALLBACK = "fallback"
    BUNDLE_ACCEPTED = "bundle_accepted"
    BUNDLE_REJECTED = "bundle_rejected"


@dataclass(frozen=True)
class RegularityMetadata:
    """Known regularity constants of a problem, for diagnostics and tests only."""

    mu: Optional[float] = None
    lipschitz_L: Optional[float] = None
    c_b: Optional[float] = None
    eta: Optional[float] = None

    def __post_init__(self):
        if self.mu is not None and self.mu < 0:
            raise ConfigError("mu must be nonnegative")
        for name in ("lipschitz_L", "c_b", "eta"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class Oracle:
    """Objective f, its known optimal value, and a generalized-gradient selection g.

    Both callables must be deterministic; oracles are shared read-only between runs.
    """

    dim: int
    eval_f: Callable[[np.ndarray], float]
    eval_g: Callable[[np.ndarray], np.ndarray]
    f_star: float = 0.0
    meta: RegularityMetadata = field(default_factory=RegularityMetadata)
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("oracle dimension must be positive")

    def check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ConfigError(f"expected a point of shape ({self.dim},), got {x.shape}")
        return x


@dataclass
class OracleCounter:
    f_calls: int = 0
    g_calls: int = 0
    mapping_calls: int = 0

    @property
    def total(self) -> int:
        return self.f_calls + self.g_calls + self.mapping_calls

    def snapshot(self) -> tuple[int, int, int]:
        return self.f_calls, self.g_calls, self.mapping_calls


def gap(oracle: Oracle, x: np.ndarray, counter: Optional[OracleCounter] = None) -> float:
    """Return f(x) - f*. Not clamped: tiny negative values are reported as-is."""
    x = oracle.check_point(x)
    if counter is not None:
        counter.f_calls += 1
    return float(oracle.eval_f(x)) - oracle.f_star


def subgradient(
    oracle: Oracle, x: np.ndarray, counter: Optional[OracleCounter] = None
) -> np.ndarray:
    x = oracle.check_point(x)
    if counter is not None:
        counter.g_calls += 1
    return np.asarray(oracle.eval_g(x), dtype=float)


@dataclass(frozen=True)
class Record:
    oracle_calls: int
    gap: float
    elapsed: float
    kind: StepKind
    f_calls: int = 0
    g_calls: int = 0
    mapping_calls: int = 0


@dataclass
class RunHistory:
    """Trace of a single run, one record per completed step."""

    records: list[Record] = field(default_factory=list)
    start: float = field(default_factory=time.perf_counter)

    def __len__(self):
        return len(self.records)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.records])

    @property
    def oracle_calls(self) -> np.ndarray:
        return np.array([r.oracle_calls for r in self.records], dtype=int)

    def kinds(self) -> list[StepKind]:
        return [r.kind for r in self.records]


def record(
    history: RunHistory, counter: OracleCounter, gap_value: float, kind: StepKind
) -> RunHistory:
    """Append the current cumulative counts, gap and elapsed wall time."""
    f, g, m = counter.snapshot()
    history.records.append(
        Record(
            oracle_calls=counter.total,
            gap=float(gap_value),
            elapsed=time.perf_counter() - history.start,
            kind=StepKind(kind),
            f_calls=f,
            g_calls=g,
            mapping_calls=m,
        )
    )
    return history


@dataclass
class SolveResult:
    x: np.ndarray
    gap: float
    status: Status
    history: RunHistory
    counter: OracleCounter
    outer_iterations: int = 0

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED
