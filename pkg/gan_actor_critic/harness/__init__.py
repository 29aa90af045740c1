"""Experiment orchestration: config files, the training loop, metrics, comparison and evaluation."""

from .compare import ComparisonReport, RunSummary, SeedOutcome, compare, summarize_run
from .config import ExperimentConfig, ModelFitConfig, RunConfig, dump_config, load_config, parse_config
from .evaluation import EvalResult, evaluate, evaluate_policy
from .metrics import MetricsWriter, RunManifest, TrailingAverage, episodes_to_solve, read_metrics
from .modelfit import ModelFitReport, fit_world_model
from .runner import EXIT_ERROR, EXIT_SOLVED, EXIT_UNSOLVED, ExperimentRunner, RunResult, SeedResult, build_agent, run

__all__ = [
    "ComparisonReport",
    "EXIT_ERROR",
    "EXIT_SOLVED",
    "EXIT_UNSOLVED",
    "EvalResult",
    "ExperimentConfig",
    "ExperimentRunner",
    "MetricsWriter",
    "ModelFitConfig",
    "ModelFitReport",
    "RunConfig",
    "RunManifest",
    "RunResult",
    "RunSummary",
    "SeedOutcome",
    "SeedResult",
    "TrailingAverage",
    "build_agent",
    "compare",
    "dump_config",
    "episodes_to_solve",
    "evaluate",
    "evaluate_policy",
    "fit_world_model",
    "load_config",
    "parse_config",
    "read_metrics",
    "run",
    "summarize_run",
]
