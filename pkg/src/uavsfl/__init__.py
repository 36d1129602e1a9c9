"""Minimum-power UAV placement and resource allocation for wirelessly powered split federated learning."""

from .baselines import Method, run_baseline
from .optimizer import InfeasibleStart, RunOptions, run
from .physics import Allocation, residuals
from .scenario import GenerationConfig, Scenario, SystemParams, default_config, generate_scenario, load_config

__all__ = [
    "Allocation", "GenerationConfig", "InfeasibleStart", "Method", "RunOptions", "Scenario",
    "SystemParams", "default_config", "generate_scenario", "load_config", "residuals", "run", "run_baseline",
]
