"""Metrics, configuration, file formats and experiment orchestration."""
from .config import ConfigError, ExperimentConfig, parse_config
from .io import FormatError, load_checkpoint, load_reference, save_checkpoint, save_reference
from .metrics import ErrorSeries, global_rel_l2, rel_l2
from .runner import build_reference, run_benchmark, run_experiment
