#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Configuration Manager
Typed parameter sets for scenario, channel, energy, solver and experiments,
loaded from an INI settings file with defaults for every key
"""

import os
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from PyQt5.QtCore import QSettings

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_GAMMAS = tuple(round(0.5 + 0.25 * i, 2) for i in range(11))
SERVING_RULES = ("anchor", "los")
BRANCHING_RULES = ("most-fractional", "pseudo-cost")


@dataclass(frozen=True)
class ScenarioParams:
    """Manhattan grid geometry"""
    blocks_x: int = 3
    blocks_y: int = 3
    block_size: float = 30.0
    edge_street: float = 10.0
    inner_street: float = 20.0
    node_height: float = 10.0
    vicinity_radius: float = 15.0
    max_placement_attempts: int = 1000
    distinct_anchors: bool = True

    def __post_init__(self):
        if self.blocks_x < 1 or self.blocks_y < 1:
            raise ConfigError("grid needs at least one block per axis",
                              f"blocks_x={self.blocks_x}, blocks_y={self.blocks_y}")
        if self.block_size <= 0 or self.edge_street <= 0 or self.inner_street <= 0:
            raise ConfigError("block size and street widths must be positive")
        if self.node_height <= 0:
            raise ConfigError("node height must be positive")
        if self.vicinity_radius < 0:
            raise ConfigError("vicinity radius must be non-negative")
        if self.max_placement_attempts < 1:
            raise ConfigError("max_placement_attempts must be at least 1")


@dataclass(frozen=True)
class ChannelParams:
    """Link budget and capacity model (LoS state only)"""
    carrier_frequency: float = 28e9
    bandwidth: float = 1e9
    tx_power_dbm: float = 24.0
    combined_antenna_gain: float = 12.5
    noise_figure: float = 7.0
    noise_density_dbm_hz: float = -174.0
    loss_factor: float = 3.0
    max_spectral_efficiency: float = 4.8
    pathloss_intercept: float = 61.4
    pathloss_exponent_x10: float = 20.0
    shadowing_sigma_db: float = 0.0

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ConfigError("bandwidth must be positive", str(self.bandwidth))
        if self.max_spectral_efficiency <= 0:
            raise ConfigError("max spectral efficiency must be positive")
        if self.pathloss_exponent_x10 < 0:
            raise ConfigError("pathloss slope must be non-negative")
        if self.shadowing_sigma_db < 0:
            raise ConfigError("shadowing sigma must be non-negative")


@dataclass(frozen=True)
class EnergyParams:
    """Rotary-wing propulsion, grasping and communication power model"""
    velocity: float = 10.21
    service_duration: float = 1800.0
    grasp_power: float = 10.0
    min_active_power: float = 6.8
    tx_factor: float = 4.0
    tx_power_watts: float = 0.2512
    blade_profile_power: float = 79.86
    induced_power: float = 88.63
    tip_speed: float = 120.0
    mean_rotor_induced_velocity: float = 4.03
    fuselage_drag_ratio: float = 0.6
    rotor_solidity: float = 0.05
    air_density: float = 1.225
    rotor_disc_area: float = 0.503

    def __post_init__(self):
        if self.velocity <= 0:
            raise ConfigError("velocity must be positive", str(self.velocity))
        if self.service_duration < 0:
            raise ConfigError("service duration must be non-negative")
        powers = (self.grasp_power, self.min_active_power, self.tx_factor,
                  self.tx_power_watts, self.blade_profile_power, self.induced_power)
        if any(p < 0 for p in powers):
            raise ConfigError("powers and factors must be non-negative")
        if self.tip_speed <= 0 or self.mean_rotor_induced_velocity <= 0:
            raise ConfigError("tip speed and induced velocity must be positive")


@dataclass(frozen=True)
class SolverConfig:
    """Branch-and-bound and simplex settings"""
    integrality_tolerance: float = 1e-6
    lp_tolerance: float = 1e-9
    node_limit: int = 20000
    branching: str = "most-fractional"
    deterministic_order: bool = True
    max_lp_iterations: int = 100000
    presolve: bool = True
    warm_start: bool = True

    def __post_init__(self):
        if self.integrality_tolerance <= 0 or self.lp_tolerance <= 0:
            raise ConfigError("solver tolerances must be positive")
        if self.node_limit < 1:
            raise ConfigError("node_limit must be at least 1")
        if self.branching not in BRANCHING_RULES:
            raise ConfigError(f"unknown branching rule '{self.branching}'",
                              f"expected one of {', '.join(BRANCHING_RULES)}")
        if self.max_lp_iterations < 1:
            raise ConfigError("max_lp_iterations must be at least 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """Monte Carlo sweep definition"""
    gammas: Tuple[float, ...] = DEFAULT_GAMMAS
    n_e_values: Tuple[int, ...] = (1, 2, 3)
    trials: int = 100
    master_seed: int = 0
    n_rascs: int = 15
    energy_weight: float = 1e-6
    serving: str = "anchor"
    prune_arcs: bool = True
    evaluate_fsc: bool = True
    record_timing: bool = False
    workers: int = 1
    output_dir: str = "results"
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1", str(self.trials))
        if not self.gammas or any(g <= 0 for g in self.gammas):
            raise ConfigError("gamma values must be positive")
        if not self.n_e_values or any(n < 1 for n in self.n_e_values):
            raise ConfigError("N_E values must be at least 1")
        if self.n_rascs < 1:
            raise ConfigError("n_rascs must be at least 1")
        if self.energy_weight < 0:
            raise ConfigError("energy_weight must be non-negative")
        if self.serving not in SERVING_RULES:
            raise ConfigError(f"unknown serving rule '{self.serving}'",
                              f"expected one of {', '.join(SERVING_RULES)}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.master_seed < 0:
            raise ConfigError("seed must be non-negative")


_SECTIONS = {
    "scenario": ScenarioParams,
    "channel": ChannelParams,
    "energy": EnergyParams,
    "solver": SolverConfig,
}


class Config:
    """Configuration manager reading an INI file through QSettings"""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.settings = None
        if path:
            if not os.path.isfile(path):
                raise ConfigError("config file not found", path)
            self.settings = QSettings(path, QSettings.IniFormat)
            if self.settings.status() != QSettings.NoError:
                raise ConfigError("config file could not be parsed", path)
        self._load_defaults()

    def _load_defaults(self):
        """Load default values, keyed the way they appear in the file"""
        self.defaults: Dict[str, Any] = {}
        for section, cls in _SECTIONS.items():
            for name, value in _field_defaults(cls).items():
                self.defaults[f"{section}/{name}"] = value
        for name, value in _field_defaults(ExperimentConfig).items():
            if name not in _SECTIONS:
                self.defaults[f"experiment/{name}"] = value

    def keys(self) -> List[str]:
        """Keys present in the settings file"""
        if self.settings is None:
            return []
        return list(self.settings.allKeys())

    def get(self, key, default=None):
        """Get raw configuration value"""
        if default is None:
            default = self.defaults.get(key)
        if self.settings is None:
            return default
        return self.settings.value(key, default)

    def set(self, key, value):
        """Set configuration value"""
        if self.settings is None:
            raise ConfigError("no settings file to write", key)
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        self.settings.setValue(key, value)
        self.settings.sync()

    def get_float(self, key) -> float:
        """Get a float value"""
        value = self.get(key)
        try:
            return float(value)
        except (ValueError, TypeError):
            raise ConfigError(f"'{key}' must be a number", repr(value))

    def get_int(self, key) -> int:
        """Get an integer value"""
        value = self.get(key)
        try:
            as_float = float(value)
        except (ValueError, TypeError):
            raise ConfigError(f"'{key}' must be an integer", repr(value))
        if not as_float.is_integer():
            raise ConfigError(f"'{key}' must be an integer", repr(value))
        return int(as_float)

    def get_bool(self, key) -> bool:
        """Get a boolean value"""
        value = self.get(key)
        # Ensure we return a boolean value
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ConfigError(f"'{key}' must be true or false", repr(value))
        return bool(value)

    def get_str(self, key) -> str:
        """Get a string value"""
        value = self.get(key)
        if isinstance(value, (list, tuple)):
            # QSettings splits unquoted commas into a list
            return ", ".join(str(v) for v in value)
        return str(value)

    def get_float_list(self, key) -> Tuple[float, ...]:
        """Get a comma-separated list of floats"""
        value = self.get(key)
        items = _as_items(value)
        try:
            return tuple(float(v) for v in items)
        except (ValueError, TypeError):
            raise ConfigError(f"'{key}' must be a list of numbers", repr(value))

    def get_int_list(self, key) -> Tuple[int, ...]:
        """Get a comma-separated list of integers"""
        values = self.get_float_list(key)
        if any(not v.is_integer() for v in values):
            raise ConfigError(f"'{key}' must be a list of integers", repr(values))
        return tuple(int(v) for v in values)

    def _section(self, section: str, cls):
        """Build one parameter dataclass from its INI section"""
        kwargs = {}
        for name, default in _field_defaults(cls).items():
            key = f"{section}/{name}"
            kwargs[name] = self._typed(key, default)
        return cls(**kwargs)

    def _typed(self, key: str, default):
        """Read a key with the type of its default"""
        if isinstance(default, bool):
            return self.get_bool(key)
        if isinstance(default, int):
            return self.get_int(key)
        if isinstance(default, float):
            return self.get_float(key)
        if isinstance(default, tuple):
            if default and isinstance(default[0], int):
                return self.get_int_list(key)
            return self.get_float_list(key)
        return self.get_str(key)

    def warn_unknown_keys(self):
        """Log keys the planner does not understand"""
        for key in self.keys():
            if key not in self.defaults:
                logger.warning("ignoring unknown config key '%s' in %s", key, self.path)

    def to_experiment_config(self) -> ExperimentConfig:
        """Assemble the full experiment configuration"""
        self.warn_unknown_keys()
        kwargs = {section: self._section(section, cls) for section, cls in _SECTIONS.items()}
        for name, default in _field_defaults(ExperimentConfig).items():
            if name in _SECTIONS:
                continue
            kwargs[name] = self._typed(f"experiment/{name}", default)
        return ExperimentConfig(**kwargs)


def _field_defaults(cls) -> Dict[str, Any]:
    """Default value of every dataclass field, in declaration order"""
    instance = cls()
    return {name: getattr(instance, name) for name in cls.__dataclass_fields__}


def _as_items(value) -> List[str]:
    """Normalize a list-ish settings value into stripped items"""
    if isinstance(value, (list, tuple)):
        items = [str(v) for v in value]
    else:
        items = str(value).split(",")
    return [item.strip() for item in items if item.strip()]


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """Load an experiment configuration, defaults when no path is given"""
    if path is None:
        return ExperimentConfig()
    return Config(path).to_experiment_config()


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Copy of the configuration with non-None overrides applied"""
    changes = {key: value for key, value in overrides.items() if value is not None}
    if not changes:
        return config
    return replace(config, **changes)
