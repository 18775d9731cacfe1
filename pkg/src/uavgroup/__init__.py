"""Joint scheduling, bandwidth/power allocation and Dubins-switch trajectory
control for a fixed-wing UAV serving a mobile user group."""

from .scenario import ScenarioConfig, default_config, load_config, save_config

__all__ = ["ScenarioConfig", "default_config", "load_config", "save_config"]
__version__ = "0.1.0"
