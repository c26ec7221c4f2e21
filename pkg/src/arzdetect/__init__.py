"""Dual-filter cyber-attack detection for a linearized ARZ freeway model."""

from .attacks import AttackSpec, scenario_preset
from .comparator import Decision, Thresholds, calibrate_threshold, decide
from .config import ScenarioConfig, default_config, parse_config
from .harness import RunReport, run_scenario
from .model import Grid, LinearizationConstants, TrafficParams, check_regime, linearization_constants
from .plant import FieldState, NoiseSpec

__version__ = "0.1.0"

__all__ = [
    "AttackSpec", "scenario_preset", "Decision", "Thresholds", "calibrate_threshold", "decide",
    "ScenarioConfig", "default_config", "parse_config", "RunReport", "run_scenario", "Grid",
    "LinearizationConstants", "TrafficParams", "check_regime", "linearization_constants",
    "FieldState", "NoiseSpec",
]
