"""Learning-based medium access on an unslotted ALOHA channel."""

from .analytic import ThroughputCurve, optimal_load, single_node_throughput
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .engine import (
    ConfigurationError,
    EpochStats,
    Topology,
    TransmissionRecord,
    classify_transmissions,
    collision_probabilities,
    generate_arrivals,
    run_epoch,
)
from .runner import detect_convergence, load_sweep, run_scenario

__all__ = [
    "ConfigError",
    "ConfigurationError",
    "EpochStats",
    "ScenarioConfig",
    "ThroughputCurve",
    "Topology",
    "TransmissionRecord",
    "classify_transmissions",
    "collision_probabilities",
    "detect_convergence",
    "generate_arrivals",
    "load_config",
    "load_sweep",
    "optimal_load",
    "parse_config",
    "run_epoch",
    "run_scenario",
    "single_node_throughput",
]
