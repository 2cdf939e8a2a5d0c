"""Tire-wear-aware trajectory tracking for multi-axle swerve-drive vehicles."""
from .core import (ConfigError, ControlVector, Limits, MagicFormula, TireParams, VehicleParams,
                   VehicleState, rotation2d)
from .config import Config, default_config, load_config, save_config

__all__ = [
    "Config", "ConfigError", "ControlVector", "Limits", "MagicFormula", "TireParams",
    "VehicleParams", "VehicleState", "default_config", "load_config", "rotation2d", "save_config",
]
__version__ = "0.1.0"
