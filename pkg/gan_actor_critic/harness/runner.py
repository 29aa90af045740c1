"""Training loop shared by the model-free and model-based variants.

Per environment step the runner acts in every environment instance, stores
the transitions in index order, each tagged with the goal its own instance
was pursuing, then runs one agent update per stored transition once warm-up
is over. A finished vector episode becomes one :class:`MetricsRow`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Protocol, Union

import numpy as np

from gan_actor_critic.agents import DdpgAgent, ModelBasedAgent, ReplayBuffer
from gan_actor_critic.core.errors import EngineError, RunAbortedError
from gan_actor_critic.core.models import Array, MetricsRow, Transition
from gan_actor_critic.core.seeding import derive_seed
from gan_actor_critic.envs import VectorEnv, make_env
from gan_actor_critic.envs.base import Environment, EnvSpec

from .config import ExperimentConfig
from .metrics import METRICS_FILE, MetricsWriter, RunManifest, TrailingAverage

logger = logging.getLogger(__name__)

EXIT_SOLVED = 0
EXIT_ERROR = 1
EXIT_UNSOLVED = 2


class Agent(Protocol):
    def select_action(self, obs: Array, explore: bool = False) -> Array: ...

    def random_action(self) -> Array: ...

    def train_step(self, buffer: ReplayBuffer) -> object: ...

    def save(self, path: Union[str, Path]) -> Path: ...


@dataclass
class SeedResult:
    seed: int
    episodes: int
    env_steps: int
    final_average: float
    episodes_to_solve: Optional[int]
    checkpoint: Optional[Path] = None

    @property
    def solved(self) -> bool:
        return self.episodes_to_solve is not None


@dataclass
class RunResult:
    metrics_path: Path
    manifest_path: Path
    seeds: List[SeedResult] = field(default_factory=list)
    error: Optional[RunAbortedError] = None

    @property
    def solved(self) -> Dict[int, bool]:
        return {result.seed: result.solved for result in self.seeds}

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return EXIT_ERROR
        if self.seeds and all(result.solved for result in self.seeds):
            return EXIT_SOLVED
        return EXIT_UNSOLVED


class _LossAccumulator:
    """Mean of the per-update losses between two metrics rows."""

    NAMES = ("critic_loss", "actor_loss", "model_mse", "wasserstein_estimate")

    def __init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self._sums = {name: 0.0 for name in self.NAMES}
        self._counts = {name: 0 for name in self.NAMES}

    def add(self, metrics: object) -> None:
        for name in self.NAMES:
            value = getattr(metrics, name, None)
            if value is not None and np.isfinite(value):
                self._sums[name] += float(value)
                self._counts[name] += 1

    def means(self) -> Dict[str, float]:
        return {
            name: self._sums[name] / self._counts[name] if self._counts[name] else float("nan")
            for name in self.NAMES
        }


def build_agent(config: ExperimentConfig, env: Environment, seed: int) -> Agent:
    """Fresh agent of the configured variant for ``env`` (which must be reset)."""

    if config.run.variant == "model_based_ac":
        return ModelBasedAgent(
            env.spec,
            env.goal_observation(),
            config.ddpg,
            config.world_model,
            reward_source=config.run.reward_source,
            seed=seed,
        )
    return DdpgAgent(env.spec, config.ddpg, seed=seed)


class ExperimentRunner:
    """Run every seed of an :class:`ExperimentConfig` into one output directory."""

    def __init__(self, config: ExperimentConfig, out_dir: Union[str, Path], *, deterministic: bool = False) -> None:
        self.config = config.validate()
        self.out_dir = Path(out_dir)
        self.deterministic = deterministic

    @property
    def metrics_path(self) -> Path:
        return self.out_dir / METRICS_FILE

    def _spec(self) -> EnvSpec:
        return make_env(self.config.env).spec

    def manifest(self) -> RunManifest:
        spec = self._spec()
        run = self.config.run
        return RunManifest(
            env=self.config.env.name,
            variant=run.variant,
            reward_source=run.reward_source,
            solve_threshold=spec.solve_threshold,
            episodes=run.episodes,
            n_envs=run.n_envs,
            seeds=list(run.seeds),
            obs_dim=spec.obs_dim,
            act_dim=spec.act_dim,
            solve_min_episodes=run.solve_min_episodes,
        )

    def run(self) -> RunResult:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        result = RunResult(metrics_path=self.metrics_path, manifest_path=self.manifest().write(self.out_dir))
        with MetricsWriter(self.metrics_path) as writer:
            for seed in self.config.run.seeds:
                try:
                    result.seeds.append(self.run_seed(int(seed), writer))
                except RunAbortedError as exc:
                    logger.error("Run aborted: %s", exc)
                    result.error = exc
                    break
        return result

    def run_seed(self, seed: int, writer: MetricsWriter) -> SeedResult:
        config = self.config
        n_envs = config.run.n_envs
        envs = [make_env(config.env) for _ in range(n_envs)]
        vector = VectorEnv(envs, [derive_seed(seed, "env", index) for index in range(n_envs)])
        spec = vector.spec
        observations = vector.reset()
        agent = build_agent(config, envs[0], seed)
        buffer = ReplayBuffer(
            config.replay.capacity,
            spec.obs_dim,
            spec.act_dim,
            seed=derive_seed(seed, "replay"),
            min_sample_size=config.replay.min_sample_size,
        )

        budget = config.run.episodes
        returns = np.zeros(n_envs)
        average = TrailingAverage()
        losses = _LossAccumulator()
        env_steps = 0
        episode = 0
        solved_at: Optional[int] = None
        started = time.perf_counter()

        while episode < budget:
            try:
                if env_steps < config.ddpg.warmup_steps:
                    actions = [agent.random_action() for _ in range(n_envs)]
                else:
                    actions = [agent.select_action(obs, explore=True) for obs in observations]
                goals = [env.goal_observation() for env in envs]
                results = vector.step(actions)
                for index, step in enumerate(results):
                    done = step.done if config.ddpg.mask_time_limit else step.terminated
                    buffer.push(
                        Transition(
                            observations[index],
                            actions[index],
                            step.reward,
                            step.observation,
                            done,
                            goal=goals[index],
                        )
                    )
                    returns[index] += step.reward
                env_steps += n_envs
                if env_steps >= config.ddpg.warmup_steps:
                    for _ in range(n_envs * config.ddpg.updates_per_step):
                        losses.add(agent.train_step(buffer))
            except (EngineError, ValueError) as exc:
                raise RunAbortedError(
                    f"{type(exc).__name__}: {exc}", seed=seed, episode=episode + 1, step=env_steps
                ) from exc

            finished = [index for index, step in enumerate(results) if step.done]
            observations = vector.observations
            if not finished:
                continue

            episode += 1
            episode_return = float(np.mean(returns[finished]))
            returns[finished] = 0.0
            avg = average.add(episode_return)
            wall_ms = 0.0 if self.deterministic else (time.perf_counter() - started) * 1000.0
            started = time.perf_counter()
            writer.write(
                MetricsRow(
                    seed=seed,
                    episode=episode,
                    env_steps=env_steps,
                    episode_return=episode_return,
                    avg_return_100=avg,
                    wall_ms=wall_ms,
                    **losses.means(),
                )
            )
            losses.reset()
            logger.info(
                "seed %s episode %s return %.3f avg100 %.3f",
                seed,
                episode,
                episode_return,
                avg,
                extra={"seed": seed, "episode": episode, "env_steps": env_steps},
            )
            if solved_at is None and episode >= config.run.solve_min_episodes and avg >= spec.solve_threshold:
                solved_at = episode
                logger.info("seed %s solved at episode %s", seed, episode, extra={"seed": seed})
                if config.run.stop_on_solve:
                    break

        checkpoint = None
        if config.run.save_checkpoints:
            checkpoint = agent.save(self.out_dir / f"seed_{seed}.ckpt")
        return SeedResult(
            seed=seed,
            episodes=episode,
            env_steps=env_steps,
            final_average=average.value,
            episodes_to_solve=solved_at,
            checkpoint=checkpoint,
        )


def run(config: ExperimentConfig, out_dir: Union[str, Path], *, deterministic: bool = False) -> RunResult:
    return ExperimentRunner(config, out_dir, deterministic=deterministic).run()


__all__ = [
    "EXIT_ERROR",
    "EXIT_SOLVED",
    "EXIT_UNSOLVED",
    "ExperimentRunner",
    "RunResult",
    "SeedResult",
    "build_agent",
    "run",
]
