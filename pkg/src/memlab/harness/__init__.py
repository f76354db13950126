"""Configuration, orchestration and I/O for the experiment CLI."""

from .config import ConfigError, ExperimentConfig, load_config, preset
from .experiments import RunResult, run
from .io import CSV_HEADER, emit_csv, emit_json

__all__ = ["CSV_HEADER", "ConfigError", "ExperimentConfig", "RunResult", "emit_csv", "emit_json", "load_config", "preset", "run"]
