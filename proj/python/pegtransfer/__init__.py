"""Peg-transfer simulator: scenes, depth rendering, detection and batch runs."""
from ._core import (
    ConfigError,
    ExtrapolationError,
    RenderError,
    SafetyFault,
    aggregate_csv,
    calibration_report,
    detect_blocks,
    init_episode,
    render_depth,
    run_batch,
    standard_workspace,
)

__all__ = [
    "ConfigError",
    "ExtrapolationError",
    "RenderError",
    "SafetyFault",
    "aggregate_csv",
    "calibration_report",
    "detect_blocks",
    "init_episode",
    "render_depth",
    "run_batch",
    "standard_workspace",
]
