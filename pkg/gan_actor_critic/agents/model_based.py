"""Actor trained through the learned world model and a state-value critic."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from gan_actor_critic.autodiff import ComputationTape, no_grad
from gan_actor_critic.core.errors import ConfigError, EngineError, SpecMismatchError
from gan_actor_critic.core.models import Array
from gan_actor_critic.core.seeding import derive_rng, derive_seed
from gan_actor_critic.envs.base import EnvSpec
from gan_actor_critic.nn import AdamConfig, AdamState, Network, TrainingSnapshot, adam_step, mlp_new
from gan_actor_critic.nn.checkpoint import load_container, network_entries, network_from_entries, save_container

from .ddpg import DdpgConfig
from .policy import DeterministicPolicy
from .replay import ReplayBuffer
from .world_model import ModelBasedCritic, WorldModel, WorldModelConfig, imagined_rollout, model_actor_loss

logger = logging.getLogger(__name__)

REWARD_SOURCES = ("env_native", "discriminator")


@dataclass
class ModelBasedMetrics:
    critic_loss: float
    actor_loss: float
    model_mse: float
    wasserstein_estimate: float
    d_loss: float
    g_loss: float
    imagined_states: int
    reward_critic_loss: float = float("nan")
    reward_model_mse: float = float("nan")


class ModelBasedAgent:
    """Actor, world model and value critic trained together from one replay buffer.

    Each :meth:`train_step` runs one world-model update, one value update on
    real transitions and one actor update on a batch that mixes real replay
    states with the end states of short imagined rollouts.
    """

    def __init__(
        self,
        spec: EnvSpec,
        target: Array,
        actor_config: Optional[DdpgConfig] = None,
        model_config: Optional[WorldModelConfig] = None,
        *,
        reward_source: str = "env_native",
        seed: int = 0,
    ) -> None:
        if reward_source not in REWARD_SOURCES:
            raise ConfigError(f"reward_source must be one of {REWARD_SOURCES}, got {reward_source!r}", "reward_source")
        self.spec = spec
        self.actor_config = actor_config or DdpgConfig()
        self.actor_config.validate()
        self.model_config = model_config or WorldModelConfig()
        self.reward_source = reward_source
        actor = mlp_new(
            [spec.obs_dim, *self.actor_config.hidden_sizes, spec.act_dim],
            self.actor_config.hidden_activation,
            "tanh",
            seed=derive_seed(seed, "actor_init"),
        )
        self.policy = DeterministicPolicy.for_spec(actor, spec)
        self.actor_optimizer = AdamState.for_network(actor, AdamConfig(lr=self.actor_config.actor_lr))
        self.world_model = WorldModel(spec.obs_dim, spec.act_dim, target, self.model_config, seed=seed)
        self.critic = ModelBasedCritic(spec.obs_dim, self.model_config, seed=seed)
        self.rng = derive_rng(seed, "exploration")
        self.updates = 0

    @property
    def actor(self) -> Network:
        return self.policy.actor

    @property
    def include_shaped_reward(self) -> bool:
        return self.reward_source == "discriminator"

    def select_action(self, obs: Array, explore: bool = False) -> Array:
        if explore:
            return self.policy.explore(obs, self.rng, self.actor_config.noise_scale)
        return self.policy.act(obs)

    def random_action(self) -> Array:
        return self.policy.uniform(self.rng)

    def _actor_states(self, states: Array, goals: Optional[Array] = None) -> Tuple[Array, int]:
        """Real states with the last rows replaced by imagined rollout ends; row order is kept."""

        imagined = int(round(states.shape[0] * self.model_config.imagined_fraction))
        if imagined == 0:
            return states, 0
        split = states.shape[0] - imagined
        rollout = imagined_rollout(
            self.world_model,
            self.policy,
            states[split:],
            self.model_config.rollout_horizon,
            None if goals is None else goals[split:],
        )
        if rollout.truncated or rollout.final_states is None:
            return states, 0
        return np.concatenate([states[:split], rollout.final_states]), imagined

    def train_step(self, buffer: ReplayBuffer) -> ModelBasedMetrics:
        """One world-model update, one value update and one actor update.

        Any error rolls back every network and optimizer touched here, and
        the replay sampler.
        """

        wm = self.world_model
        snapshot = TrainingSnapshot.capture(
            [self.actor, *wm.networks, self.critic.value, self.critic.target_value],
            [self.actor_optimizer, *wm.optimizers, self.critic.optimizer],
        )
        sampler = buffer.sampler_state()
        try:
            model_metrics = wm.train_step(buffer)

            batch = buffer.sample(self.actor_config.batch_size)
            if self.include_shaped_reward:
                with no_grad():
                    rewards = wm.shaped_reward_batch(batch.states, batch.next_states, goals=batch.goals).data
            else:
                rewards = batch.rewards
            critic_loss = self.critic.train_step(batch.states, rewards, batch.next_states, batch.dones)

            states, imagined = self._actor_states(batch.states, batch.goals)
            with ComputationTape() as tape:
                actor_loss = model_actor_loss(
                    wm,
                    self.critic,
                    self.policy,
                    states,
                    goals=batch.goals,
                    include_shaped_reward=self.include_shaped_reward,
                )
            adam_step(self.actor, tape.backward(actor_loss), self.actor_optimizer)
        except EngineError:
            snapshot.restore()
            buffer.restore_sampler_state(sampler)
            logger.warning("Model-based update rolled back after %s updates", self.updates)
            raise
        self.updates += 1
        return ModelBasedMetrics(
            critic_loss=critic_loss,
            actor_loss=actor_loss.item(),
            model_mse=model_metrics.model_mse,
            wasserstein_estimate=model_metrics.wasserstein_estimate,
            d_loss=model_metrics.d_loss,
            g_loss=model_metrics.g_loss,
            imagined_states=imagined,
            reward_critic_loss=model_metrics.reward_critic_loss,
            reward_model_mse=model_metrics.reward_model_mse,
        )

    def save(self, path: Union[str, Path]) -> Path:
        """Write the actor, every world-model network and the value networks to one container."""

        entries = self.policy.entries("actor.")
        entries.update(self.world_model.entries())
        entries.update(network_entries(self.critic.value, "value."))
        entries.update(network_entries(self.critic.target_value, "target_value."))
        return save_container(path, entries)

    @classmethod
    def load(
        cls,
        path: Union[str, Path],
        spec: EnvSpec,
        actor_config: Optional[DdpgConfig] = None,
        model_config: Optional[WorldModelConfig] = None,
        *,
        reward_source: str = "env_native",
    ) -> "ModelBasedAgent":
        entries = load_container(path)
        policy = DeterministicPolicy.from_entries(entries, "actor.")
        if not policy.matches(spec):
            raise SpecMismatchError(f"Checkpoint {path} does not match environment {spec.name}")
        target = entries.get("world_model.target", np.zeros(spec.obs_dim))
        agent = cls(spec, target, actor_config, model_config, reward_source=reward_source)
        agent.policy = policy
        agent.actor_optimizer = AdamState.for_network(policy.actor, AdamConfig(lr=agent.actor_config.actor_lr))
        agent.world_model = WorldModel.from_entries(entries, agent.model_config)
        agent.critic = ModelBasedCritic(
            spec.obs_dim, agent.model_config, value=network_from_entries(entries, "value.")
        )
        agent.critic.target_value = network_from_entries(entries, "target_value.")
        return agent


__all__ = ["ModelBasedAgent", "ModelBasedMetrics", "REWARD_SOURCES"]
