"""Monte-Carlo simulator of two-hop IAB uplink networks at 28 GHz with
elitist genetic-algorithm transmit-power control."""

from .config import ConfigError, ScenarioConfig, load_config
from .coverage import (CoverageResult, PowerVector, ScenarioInstance,
                       ServiceRequirement, UeStatus, build_instance,
                       evaluate_trial, monte_carlo_coverage)
from .ga import GaParams, GaResult, optimize
from .scheduler import SlotMode
from .topology import NetworkNode, NodeRole, Topology, build_topology

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ScenarioConfig", "load_config",
    "CoverageResult", "PowerVector", "ScenarioInstance", "ServiceRequirement",
    "UeStatus", "build_instance", "evaluate_trial", "monte_carlo_coverage",
    "GaParams", "GaResult", "optimize",
    "SlotMode",
    "NetworkNode", "NodeRole", "Topology", "build_topology",
    "__version__",
]
