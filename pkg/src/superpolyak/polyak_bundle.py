"""PolyakBundle: a sequence of minimum-norm steps onto accumulated linearizations.

Starting from y_0 = x, step i returns the point closest to y_0 on which every
linearization f(y_j) - f* + <v_j, . - y_j> (j < i) vanishes. The loop stops
early on rank deficiency, excessive travel, or superlinear improvement.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConfigError, Oracle, OracleCounter, gap, subgradient
from .qr_bundle import (
    AppendResult,
    QrState,
    apply_pinv,
    pinv_dense_oracle,
    qr_append,
    qr_init,
)

ZERO_GAP_TOL = 1e-15


class Termination(str, enum.Enum):
    EXHAUSTED_D = "exhausted_d"
    RANK_DEFICIENT = "rank_deficient"
    LARGE_TRAVEL = "large_travel"
    SUPERLINEAR_HIT = "superlinear_hit"
    ZERO_GAP = "zero_gap"


@dataclass(frozen=True)
class BundleConfig:
    """tau scales the travel radius tau * gap(y_0).

    eta_est=None switches off the superlinear-improvement exit. ``pinv="dense"``
    recomputes a dense pseudoinverse at every step (reference path for timing).
    """

    tau: float = 1e10
    eta_est: Optional[float] = 1.0
    max_steps: Optional[int] = None
    pinv: str = "qr"

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.eta_est is not None and not 0 < self.eta_est <= 2:
            raise ConfigError("eta_est must lie in (0, 2]")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError("max_steps must be positive")
        if self.pinv not in ("qr", "dense"):
            raise ConfigError("pinv must be 'qr' or 'dense'")


@dataclass
class BundleOutcome:
    candidate: Optional[np.ndarray]
    termination: Termination
    g_calls_used: int
    f_calls_used: int
    best_gap: float
    steps: int = 0

    @property
    def superlinear(self) -> bool:
        return self.termination in (Termination.SUPERLINEAR_HIT, Termination.ZERO_GAP)


def bundle_step(state: QrState, y0: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """y_0 - A_i^+ r with r_j = f(y_j) - f* + <v_j, y_0 - y_j>."""
    return y0 - apply_pinv(state, residuals)


def run_bundle(
    oracle: Oracle,
    x: np.ndarray,
    cfg: BundleConfig = BundleConfig(),
    counter: Optional[OracleCounter] = None,
    gap0: Optional[float] = None,
) -> BundleOutcome:
    """Run PolyakBundle from x. Pass ``gap0`` when f(x) - f* is already known."""
    counter = OracleCounter() if counter is None else counter
    f0, g0 = counter.f_calls, counter.g_calls

    def outcome(cand, term, best, steps):
        return BundleOutcome(
            cand, term, counter.g_calls - g0, counter.f_calls - f0, best, steps
        )

    y0 = oracle.check_point(x)
    d = oracle.dim
    max_steps = d if cfg.max_steps is None else min(cfg.max_steps, d)
    gap0 = gap(oracle, y0, counter) if gap0 is None else gap0
    if gap0 <= 0:
        return outcome(y0.copy(), Termination.ZERO_GAP, gap0, 0)
    radius = cfg.tau * gap0
    superlinear_bar = (
        gap0 ** (1.0 + cfg.eta_est) if cfg.eta_est is not None and gap0 < 1 else -np.inf
    )

    v = subgradient(oracle, y0, counter)
    state = qr_init(v)
    residuals = [gap0]
    best, best_gap = None, np.inf

    for i in range(1, max_steps + 1):
        r = np.asarray(residuals)
        if cfg.pinv == "dense":
            y = y0 - pinv_dense_oracle(state.rows, r)
        else:
            y = bundle_step(state, y0, r)
        if not np.linalg.norm(y - y0) <= radius:
            return outcome(best, Termination.LARGE_TRAVEL, best_gap, i)
        gy = gap(oracle, y, counter)
        if gy < best_gap:
            best, best_gap = y, gy
        if gy <= ZERO_GAP_TOL:
            return outcome(y, Termination.ZERO_GAP, gy, i)
        if gy <= superlinear_bar:
            return outcome(y, Termination.SUPERLINEAR_HIT, gy, i)
        if i == max_steps:
            break
        v = subgradient(oracle, y, counter)
        residuals.append(gy + float(v @ (y0 - y)))
        if qr_append(state, v) is AppendResult.RANK_DEFICIENT:
            rows = np.vstack([state.rows, v])
            y = y0 - pinv_dense_oracle(rows, np.asarray(residuals))
            if np.linalg.norm(y - y0) <= radius:
                gy = gap(oracle, y, counter)
                if gy < best_gap:
                    best, best_gap = y, gy
            return outcome(best, Termination.RANK_DEFICIENT, best_gap, i + 1)
    return outcome(best, Termination.EXHAUSTED_D, best_gap, max_steps)
