"""Adaptive observer for linear systems with overparameterized state-space
matrices: GPEBO filtering, DREM mixing and heterogeneous parameter mappings."""

from .engine import ScenarioConfig, SimLog, excitation_gram, rk4_step, run_scenario
from .errors import (
    AdobsError,
    ConfigParseError,
    ConfigurationError,
    ContractError,
    DegenerateParameterError,
    DimensionError,
    DivergenceError,
    IntegrationError,
)
from .plant import EXAMPLE

__all__ = [
    "EXAMPLE",
    "AdobsError",
    "ConfigParseError",
    "ConfigurationError",
    "ContractError",
    "DegenerateParameterError",
    "DimensionError",
    "DivergenceError",
    "IntegrationError",
    "ScenarioConfig",
    "SimLog",
    "excitation_gram",
    "rk4_step",
    "run_scenario",
]

__version__ = "0.1.0"
