from __future__ import annotations

import logging
from typing import List, Sequence

import numpy as np

from gan_actor_critic.core.errors import ShapeError
from gan_actor_critic.core.models import Array, StepResult

from .base import EnvSpec, Environment

logger = logging.getLogger(__name__)


def episode_seed(base_seed: int, episode: int) -> int:
    sequence = np.random.SeedSequence([int(base_seed), int(episode)])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


class VectorEnv:
    """Independent copies of one task stepped together in index order.

    Each instance owns a seed stream: its ``k``-th episode is reset with
    ``episode_seed(seeds[i], k)``. An instance that reports ``done`` is reset
    immediately; the fresh observation is returned in
    ``StepResult.reset_observation`` and becomes the instance's current
    observation.
    """

    def __init__(self, envs: Sequence[Environment], seeds: Sequence[int]) -> None:
        if not envs:
            raise ValueError("VectorEnv needs at least one environment")
        if len(envs) != len(seeds):
            raise ShapeError("One seed per environment required", (len(envs),), (len(seeds),))
        spec = envs[0].spec
        for env in envs[1:]:
            if not env.spec.matches(spec):
                raise ShapeError("Environments disagree on their spec", (spec.obs_dim, spec.act_dim), (env.spec.obs_dim, env.spec.act_dim))
        self.envs = list(envs)
        self.seeds = [int(seed) for seed in seeds]
        self._episodes = [0] * len(envs)
        self._observations: List[Array] = []

    @property
    def spec(self) -> EnvSpec:
        return self.envs[0].spec

    @property
    def num_envs(self) -> int:
        return len(self.envs)

    @property
    def observations(self) -> Array:
        if not self._observations:
            raise RuntimeError("VectorEnv.reset must be called before reading observations")
        return np.stack(self._observations)

    def reset(self) -> Array:
        self._observations = [self._reset_one(index) for index in range(self.num_envs)]
        return self.observations

    def _reset_one(self, index: int) -> Array:
        seed = episode_seed(self.seeds[index], self._episodes[index])
        self._episodes[index] += 1
        return self.envs[index].reset(seed)

    def step(self, actions: Array | Sequence[Array]) -> List[StepResult]:
        if len(actions) != self.num_envs:
            raise ShapeError("One action per environment required", (len(actions),), (self.num_envs,))
        if not self._observations:
            self.reset()
        results: List[StepResult] = []
        for index, (env, action) in enumerate(zip(self.envs, actions)):
            result = env.step(np.asarray(action, dtype=np.float64))
            if result.done:
                result.reset_observation = self._reset_one(index)
                self._observations[index] = result.reset_observation
                logger.debug("Auto-reset environment %s", index, extra={"env_index": index})
            else:
                self._observations[index] = result.observation
            results.append(result)
        return results


def vector_env_step(envs: VectorEnv, actions: Array | Sequence[Array]) -> List[StepResult]:
    return envs.step(actions)


__all__ = ["VectorEnv", "episode_seed", "vector_env_step"]
