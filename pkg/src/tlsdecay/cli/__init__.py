from .config import ConfigError, ScenarioConfig, config_from_dict, parse_config
from .records import Curve, RunRecord, read_csv, write_outputs
from .runs import run_preset, simulate, sweep

__all__ = [
    "ConfigError",
    "Curve",
    "RunRecord",
    "ScenarioConfig",
    "config_from_dict",
    "parse_config",
    "read_csv",
    "run_preset",
    "simulate",
    "sweep",
    "write_outputs",
]
