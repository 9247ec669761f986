"""SuperPolyak: PolyakBundle steps guarded by a linearly convergent fallback."""

from __future__ import annotations

import logging
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
)
from .fallbacks import AlgorithmicMapping, fallback_run
from .polyak_bundle import BundleConfig, run_bundle

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuperConfig:
    eps: float = 1e-12
    omega: float = 1.5
    gamma: float = 0.5
    eta_est0: float = 1.0
    eta_lb: float = 0.1
    q: float = 0.9
    tau_max: Optional[float] = 1e10
    max_outer: int = 1000
    fallback_budget: int = 100_000
    max_oracle_calls: Optional[int] = None
    max_bundle_steps: Optional[int] = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if not self.omega > 1:
            raise ConfigError("omega must exceed 1")
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma must lie in (0, 1)")
        if not self.omega * self.gamma < 1:
            raise ConfigError("omega * gamma must be below 1")
        if not 0 < self.q < 1:
            raise ConfigError("q must lie in (0, 1)")
        if not 0 <= self.eta_lb <= self.eta_est0 <= 2:
            raise ConfigError("need 0 <= eta_lb <= eta_est0 <= 2")
        if self.max_outer < 1 or self.fallback_budget < 1:
            raise ConfigError("max_outer and fallback_budget must be positive")


def update_eta(eta_est: float, cfg: SuperConfig) -> float:
    return max(cfg.eta_lb, cfg.q * eta_est)


def run_superpolyak(
    oracle: Oracle,
    fallback: AlgorithmicMapping,
    x0: np.ndarray,
    cfg: SuperConfig = SuperConfig(),
) -> SolveResult:
    counter = OracleCounter()
    history = RunHistory()
    x = oracle.check_point(x0).copy()
    gx = gap(oracle, x, counter)
    record(history, counter, gx, StepKind.INIT)
    eta = cfg.eta_est0
    status = Status.MAX_OUTER
    k = 0
    while k < cfg.max_outer:
        if gx <= cfg.eps:
            status = Status.CONVERGED
            break
        if cfg.max_oracle_calls is not None and counter.total >= cfg.max_oracle_calls:
            status = Status.BUDGET_EXHAUSTED
            break
        tau = cfg.omega**k if cfg.tau_max is None else min(cfg.omega**k, cfg.tau_max)
        bcfg = BundleConfig(tau=tau, eta_est=eta, max_steps=cfg.max_bundle_steps)
        outcome = run_bundle(oracle, x, bcfg, counter, gap0=gx)
        target = cfg.gamma * gx
        k += 1
        if outcome.candidate is not None and outcome.best_gap < target:
            x, gx = outcome.candidate, outcome.best_gap
            record(history, counter, gx, StepKind.BUNDLE_ACCEPTED)
            if not outcome.superlinear:
                eta = update_eta(eta, cfg)
            log.debug("k=%d bundle accepted gap=%.3e steps=%d", k, gx, outcome.steps)
            continue
        record(history, counter, gx, StepKind.BUNDLE_REJECTED)
        budget = cfg.fallback_budget
        if cfg.max_oracle_calls is not None:
            budget = min(budget, max(1, (cfg.max_oracle_calls - counter.total) // 2))
        res = fallback_run(fallback, oracle, x, target, budget, counter, history)
        log.debug("k=%d fallback %s gap=%.3e", k, res.status.value, res.gap)
        if res.status is not Status.CONVERGED:
            if res.gap < gx:
                x, gx = res.x, res.gap
                status = Status.BUDGET_EXHAUSTED
            else:
                status = Status.STALLED
            break
        x, gx = res.x, res.gap
    else:
        if gx <= cfg.eps:
            status = Status.CONVERGED
    return SolveResult(x, gx, status, history, counter, outer_iterations=k)
