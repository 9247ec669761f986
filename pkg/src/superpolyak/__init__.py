"""Superlinearly convergent subgradient methods for sharp semismooth problems."""

from .core import (
    ConfigError,
    Oracle,
    OracleCounter,
    RegularityMetadata,
    RunHistory,
    SolveResult,
    Status,
    StepKind,
    ZeroGradient,
    gap,
    record,
)
from .fallbacks import (
    AlgorithmicMapping,
    alternating_projection_map,
    fallback_run,
    fixed_point_map,
    polyak_map,
)
from .polyak_bundle import BundleConfig, BundleOutcome, Termination, bundle_step, run_bundle
from .polyak_sgm import SgmConfig, polyak_step, run_sgm
from .qr_bundle import AppendResult, QrState, apply_pinv, pinv_dense_oracle, qr_append, qr_init
from .solver import SuperConfig, run_superpolyak, update_eta

__version__ = "0.1.0"
