from .config import METHODS, ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import (
    SCHEMAS,
    ResultTable,
    emit_csv,
    read_csv,
    run_bound_curve,
    run_mse_sweep,
    run_roc,
    run_weights,
    trial_rng,
)

__all__ = [
    "METHODS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "SCHEMAS",
    "ResultTable",
    "emit_csv",
    "read_csv",
    "run_bound_curve",
    "run_mse_sweep",
    "run_roc",
    "run_weights",
    "trial_rng",
]
