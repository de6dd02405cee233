"""Python bindings for the nexus simulator core."""

from ._core import (
    ConfigError,
    effective_error,
    expected_gap,
    experiment_config,
    experiment_ids,
    pairwise_agreement,
    quorum_threshold,
    rdp_epsilon,
    run,
    validate_config,
)

__all__ = [
    "ConfigError",
    "effective_error",
    "expected_gap",
    "experiment_config",
    "experiment_ids",
    "pairwise_agreement",
    "quorum_threshold",
    "rdp_epsilon",
    "run",
    "validate_config",
]
