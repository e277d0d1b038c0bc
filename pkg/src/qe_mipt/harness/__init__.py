"""Configuration, experiment orchestration and result files."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config, serialize
from .io import HEADER, ResultRow, read_results, write_results
from .runner import EstimateError, estimate_noise_rate, run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "serialize", "HEADER",
           "ResultRow", "read_results", "write_results", "EstimateError", "estimate_noise_rate",
           "run_experiment"]
