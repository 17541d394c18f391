"""Experiment orchestration: configs, seeded runs, metrics, plot tables."""

from .config import (
    ALGOS, ExperimentConfig, desk_config, desk_overrides, experiment_config,
    parse_config_file, resolve_keys, write_config_file,
)
from .plots import emit_plots, read_metrics
from .run import (
    CSV_HEADER, EvalRecord, eval_actor_for, eval_row, evaluate,
    load_checkpoint, run_experiment, run_seed, save_checkpoint,
)

__all__ = [
    "ALGOS", "ExperimentConfig", "desk_config", "desk_overrides",
    "experiment_config", "parse_config_file", "resolve_keys",
    "write_config_file",
    "emit_plots", "read_metrics",
    "CSV_HEADER", "EvalRecord", "eval_actor_for", "eval_row", "evaluate",
    "load_checkpoint", "run_experiment", "run_seed", "save_checkpoint",
]
