"""Model-based actor-critic with a WGAN-GP world model, plus the GAN/actor-critic bridge."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

from .api import ExperimentClient
from .bridge import BridgeConfig, BridgeReport
from .envs import EnvConfig
from .harness import ComparisonReport, EvalResult, ExperimentConfig, ModelFitReport, RunResult

_default_client: Optional[ExperimentClient] = None


def get_default_client() -> ExperimentClient:
    """Return the default ``ExperimentClient`` instance, creating it lazily."""

    global _default_client
    if _default_client is None:
        _default_client = ExperimentClient()
    return _default_client


def train(
    config: Optional[ExperimentConfig] = None,
    out_dir: Union[str, Path, None] = None,
    *,
    seed: Optional[int] = None,
    deterministic: Optional[bool] = None,
) -> RunResult:
    """Train the configured agent variant and write metrics, manifest and checkpoints."""

    return get_default_client().train(config, out_dir, seed=seed, deterministic=deterministic)


def evaluate(
    checkpoint: Union[str, Path],
    env: EnvConfig | str = "pendulum",
    episodes: int = 10,
    *,
    seed: Optional[int] = None,
) -> EvalResult:
    """Mean return of a saved actor run greedily, with no exploration noise."""

    return get_default_client().evaluate(checkpoint, env, episodes, seed=seed)


def compare_runs(run_a: Union[str, Path], run_b: Union[str, Path]) -> ComparisonReport:
    """Episodes-to-solve per seed of two runs on the same task."""

    return get_default_client().compare(run_a, run_b)


def run_bridge(
    config: Optional[BridgeConfig] = None,
    out_dir: Union[str, Path, None] = None,
    *,
    seed: Optional[int] = None,
) -> BridgeReport:
    """Train a GAN and its gated actor-critic twin in lockstep and report their deviation."""

    return get_default_client().bridge(config, out_dir, seed=seed)


def fit_world_model(
    config: Optional[ExperimentConfig] = None,
    out_dir: Union[str, Path, None] = None,
    *,
    seed: Optional[int] = None,
) -> ModelFitReport:
    """Train only the world model on random-policy data and score its predictions."""

    return get_default_client().fit_world_model(config, out_dir, seed=seed)


__all__ = [
    "compare_runs",
    "evaluate",
    "fit_world_model",
    "get_default_client",
    "run_bridge",
    "train",
]
