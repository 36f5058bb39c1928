"""Adaptive-rate optimizers with drift-bound telemetry."""

from ._core import (
    ConfigError,
    DriftReport,
    HyperParams,
    MomentState,
    Optimizer,
    OptimizerKind,
    StepOutput,
    __version__,
    check_lr_bound,
    classify_critical_point,
    cli,
    drift_bound,
    init_state,
    lyam_step,
    optimizer_names,
    optimizer_step,
    parse_optimizer_kind,
    run_config,
)

__all__ = [
    "ConfigError",
    "DriftReport",
    "HyperParams",
    "MomentState",
    "Optimizer",
    "OptimizerKind",
    "StepOutput",
    "__version__",
    "check_lr_bound",
    "classify_critical_point",
    "cli",
    "drift_bound",
    "init_state",
    "lyam_step",
    "optimizer_names",
    "optimizer_step",
    "parse_optimizer_kind",
    "run_config",
]
