"""High-level experiment API.

This module exposes the :class:`ExperimentClient` facade and the functional
helpers defined in :mod:`gan_actor_critic.__init__`. The client resolves
output directories and default seeds from :class:`EngineSettings` and hands
the actual work to the harness and bridge subsystems.

Example: train on the pendulum and evaluate the result
------------------------------------------------------
```python
from gan_actor_critic.api import ExperimentClient
from gan_actor_critic.harness import parse_config

client = ExperimentClient()
config = parse_config("[run]\\nvariant = model_based_ac\\nepisodes = 50\\n")
result = client.train(config, out_dir="runs/pendulum-mb")
print(result.exit_code, result.metrics_path)
report = client.evaluate(result.seeds[0].checkpoint, "pendulum", episodes=5)
print(report.mean_return)
```
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Union

from .bridge import BridgeConfig, BridgeReport, run_bridge
from .core.settings import EngineSettings
from .envs import EnvConfig
from .harness import (
    ComparisonReport,
    EvalResult,
    ExperimentConfig,
    ModelFitReport,
    RunResult,
    compare,
    evaluate,
    fit_world_model,
    run,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ExperimentClient:
    """Facade over training, evaluation, comparison and the bridge experiment.

    Every method takes an explicit ``out_dir``; when it is omitted the output
    goes under ``settings.output_dir`` in a directory named after the command.
    """

    def __init__(self, settings: Optional[EngineSettings] = None) -> None:
        self.settings = settings or EngineSettings()

    def _out_dir(self, out_dir: Optional[PathLike], command: str) -> Path:
        return Path(out_dir) if out_dir is not None else self.settings.output_path(command)

    def _seed(self, seed: Optional[int]) -> int:
        return self.settings.default_seed if seed is None else int(seed)

    def train(
        self,
        config: Optional[ExperimentConfig] = None,
        out_dir: Optional[PathLike] = None,
        *,
        seed: Optional[int] = None,
        deterministic: Optional[bool] = None,
    ) -> RunResult:
        """Train every configured seed (or only ``seed``) and write the metrics CSV."""

        config = config or ExperimentConfig()
        if seed is not None:
            config = config.with_seed(seed)
        destination = self._out_dir(out_dir, "train")
        logger.info("Training %s on %s into %s", config.run.variant, config.env.name, destination)
        return run(
            config,
            destination,
            deterministic=self.settings.deterministic if deterministic is None else deterministic,
        )

    def evaluate(
        self,
        checkpoint: PathLike,
        env: EnvConfig | str = "pendulum",
        episodes: int = 10,
        *,
        seed: Optional[int] = None,
        trajectory_path: Optional[PathLike] = None,
    ) -> EvalResult:
        return evaluate(checkpoint, env, episodes, seed=self._seed(seed), trajectory_path=trajectory_path)

    def compare(
        self,
        run_a: PathLike,
        run_b: PathLike,
        out_dir: Optional[PathLike] = None,
        *,
        seed: Optional[int] = None,
    ) -> ComparisonReport:
        """Compare two run directories; the report is also written when ``out_dir`` is given."""

        report = compare(run_a, run_b, seed=seed)
        if out_dir is not None:
            report.write(out_dir)
        return report

    def bridge(
        self,
        config: Optional[BridgeConfig] = None,
        out_dir: Optional[PathLike] = None,
        *,
        seed: Optional[int] = None,
    ) -> BridgeReport:
        return run_bridge(config, self._seed(seed), self._out_dir(out_dir, "bridge"))

    def fit_world_model(
        self,
        config: Optional[ExperimentConfig] = None,
        out_dir: Optional[PathLike] = None,
        *,
        seed: Optional[int] = None,
    ) -> ModelFitReport:
        return fit_world_model(config or ExperimentConfig(), self._seed(seed), self._out_dir(out_dir, "modelfit"))


__all__ = ["ExperimentClient"]
