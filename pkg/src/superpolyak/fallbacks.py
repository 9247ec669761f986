"""Algorithmic mappings and the loop that iterates them until the gap target."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    Oracle,
    OracleCounter,
    RunHistory,
    SolveResult,
    Status,
    StepKind,
    gap,
    record,
)
from .polyak_sgm import polyak_step


@dataclass(frozen=True)
class AlgorithmicMapping:
    """A deterministic single-step map x -> A(x).

    Each application is charged ``calls_per_apply`` mapping calls.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    calls_per_apply: int = 1
    name: str = ""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)


def fixed_point_map(T: Callable[[np.ndarray], np.ndarray], name: str = "fixed_point"):
    return AlgorithmicMapping(T, 1, name)


def alternating_projection_map(P1, P2, name: str = "alternating_projections"):
    """x -> P2(P1(x)); one application counts as a single mapping call."""
    return AlgorithmicMapping(lambda x: P2(P1(x)), 1, name)


def polyak_map(oracle: Oracle) -> AlgorithmicMapping:
    """The Polyak step as a mapping (one f and one g evaluation inside)."""
    return AlgorithmicMapping(lambda x: polyak_step(oracle, x), 1, "polyak_sgm")


def fallback_run(
    mapping: AlgorithmicMapping,
    oracle: Oracle,
    z0: np.ndarray,
    target_gap: float,
    budget: int,
    counter: Optional[OracleCounter] = None,
    history: Optional[RunHistory] = None,
    kind: StepKind = StepKind.FALLBACK,
) -> SolveResult:
    """Iterate ``mapping`` from z0 until gap <= target_gap or ``budget`` applications.

    Every application is followed by one f evaluation and one history record.
    On exhaustion the best-gap iterate is returned with BUDGET_EXHAUSTED.
    """
    counter = OracleCounter() if counter is None else counter
    history = RunHistory() if history is None else history
    z = oracle.check_point(z0)
    best, best_gap = z, np.inf
    for _ in range(budget):
        z = np.asarray(mapping.apply(z), dtype=float)
        counter.mapping_calls += mapping.calls_per_apply
        gz = gap(oracle, z, counter)
        record(history, counter, gz, kind)
        if gz < best_gap:
            best, best_gap = z, gz
        if gz <= target_gap:
            return SolveResult(z, gz, Status.CONVERGED, history, counter)
    if best_gap == np.inf:
        best_gap = gap(oracle, best, counter)
    return SolveResult(best, best_gap, Status.BUDGET_EXHAUSTED, history, counter)
