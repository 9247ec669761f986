"""Subgradient descent with the Polyak step size."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ConfigError,
    Oracle,
    OracleCounter,
    RunHistory,
    SolveResult,
    Status,
    StepKind,
    gap,
    record,
    subgradient,
)

ZERO_GRAD_RTOL = 1e-14


@dataclass(frozen=True)
class SgmConfig:
    eps: float = 1e-12
    max_g_calls: int = 100_000

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if self.max_g_calls < 1:
            raise ConfigError("max_g_calls must be at least 1")


def _step(z, gap_z, v):
    vv = float(v @ v)
    if np.sqrt(vv) <= ZERO_GRAD_RTOL * max(1.0, abs(gap_z)):
        return z
    return z - (gap_z / vv) * v


def polyak_step(
    oracle: Oracle, z: np.ndarray, counter: Optional[OracleCounter] = None
) -> np.ndarray:
    """One Polyak step z - (f(z) - f*) v / |v|^2; returns z itself if v = 0."""
    z = oracle.check_point(z)
    return _step(z, gap(oracle, z, counter), subgradient(oracle, z, counter))


def run_sgm(
    oracle: Oracle,
    z0: np.ndarray,
    cfg: SgmConfig = SgmConfig(),
    history: Optional[RunHistory] = None,
    counter: Optional[OracleCounter] = None,
) -> SolveResult:
    """Iterate Polyak steps until the gap drops to cfg.eps.

    Each iteration costs exactly one g call and one f call (the stopping test
    value is reused for the next step). On budget exhaustion the best iterate
    seen is returned.
    """
    history = RunHistory() if history is None else history
    counter = OracleCounter() if counter is None else counter
    z = oracle.check_point(z0).copy()
    gz = gap(oracle, z, counter)
    record(history, counter, gz, StepKind.INIT)
    best, best_gap = z, gz
    if gz <= cfg.eps:
        return SolveResult(z, gz, Status.CONVERGED, history, counter)
    for _ in range(cfg.max_g_calls):
        v = subgradient(oracle, z, counter)
        z_new = _step(z, gz, v)
        if z_new is z:
            return SolveResult(z, gz, Status.STALLED, history, counter)
        z = z_new
        gz = gap(oracle, z, counter)
        record(history, counter, gz, StepKind.FALLBACK)
        if gz < best_gap:
            best, best_gap = z, gz
        if gz <= cfg.eps:
            return SolveResult(z, gz, Status.CONVERGED, history, counter)
    return SolveResult(best, best_gap, Status.BUDGET_EXHAUSTED, history, counter)
