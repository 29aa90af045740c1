"""Model-free DDPG: deterministic actor, Q critic and Polyak-averaged targets."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from gan_actor_critic.autodiff import ComputationTape, Tensor, functional as F, no_grad
from gan_actor_critic.core.errors import ConfigError, EngineError, NonFiniteError, SpecMismatchError
from gan_actor_critic.core.models import Array, Batch
from gan_actor_critic.core.seeding import derive_rng, derive_seed
from gan_actor_critic.envs.base import EnvSpec
from gan_actor_critic.nn import AdamConfig, AdamState, Network, TrainingSnapshot, adam_step, mlp_new, soft_update
from gan_actor_critic.nn.checkpoint import load_container, network_entries, network_from_entries, save_container

from .policy import DeterministicPolicy
from .replay import ReplayBuffer

logger = logging.getLogger(__name__)


@dataclass
class DdpgConfig:
    """Hyper-parameters of the model-free baseline."""

    gamma: float = 0.99
    tau: float = 0.005
    noise_scale: float = 0.1
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    hidden_sizes: Tuple[int, ...] = (256, 256)
    hidden_activation: str = "relu"
    batch_size: int = 64
    warmup_steps: int = 1000
    updates_per_step: int = 1
    mask_time_limit: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}", "gamma")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}", "tau")
        if self.noise_scale < 0.0:
            raise ConfigError("noise_scale must be non-negative", "noise_scale")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1", "batch_size")
        if self.warmup_steps < 0 or self.updates_per_step < 0:
            raise ConfigError("warmup_steps and updates_per_step must be non-negative")


@dataclass
class StepMetrics:
    critic_loss: float
    actor_loss: float
    mean_q: float


class DdpgAgent:
    """Actor π, critic Q and their target copies π', Q'.

    Targets start as exact copies of the live networks and only move through
    :func:`soft_update` at the end of :meth:`train_step`.
    """

    def __init__(
        self,
        spec: EnvSpec,
        config: Optional[DdpgConfig] = None,
        *,
        seed: int = 0,
        actor: Optional[Network] = None,
        critic: Optional[Network] = None,
    ) -> None:
        self.spec = spec
        self.config = config or DdpgConfig()
        self.config.validate()
        hidden = list(self.config.hidden_sizes)
        self.actor = actor or mlp_new(
            [spec.obs_dim, *hidden, spec.act_dim],
            self.config.hidden_activation,
            "tanh",
            seed=derive_seed(seed, "actor_init"),
        )
        self.critic = critic or mlp_new(
            [spec.obs_dim + spec.act_dim, *hidden, 1],
            self.config.hidden_activation,
            "identity",
            seed=derive_seed(seed, "critic_init"),
        )
        if self.actor.in_dim != spec.obs_dim or self.actor.out_dim != spec.act_dim:
            raise SpecMismatchError("Actor dimensions do not match the environment spec")
        if self.critic.in_dim != spec.obs_dim + spec.act_dim or self.critic.out_dim != 1:
            raise SpecMismatchError("Critic must map [obs‖act] to one value")
        self.target_actor = self.actor.clone()
        self.target_critic = self.critic.clone()
        self.policy = DeterministicPolicy.for_spec(self.actor, spec)
        self.actor_optimizer = AdamState.for_network(self.actor, AdamConfig(lr=self.config.actor_lr))
        self.critic_optimizer = AdamState.for_network(self.critic, AdamConfig(lr=self.config.critic_lr))
        self.rng = derive_rng(seed, "exploration")
        self.updates = 0

    @property
    def gamma(self) -> float:
        return self.config.gamma

    @property
    def tau(self) -> float:
        return self.config.tau

    def q_value(self, critic: Network, states: Tensor, actions: Tensor) -> Tensor:
        return critic(F.concat([states, actions], axis=1))

    def select_action(self, obs: Array, explore: bool = False) -> Array:
        if explore:
            return self.policy.explore(obs, self.rng, self.config.noise_scale)
        return self.policy.act(obs)

    def random_action(self) -> Array:
        """Uniform action inside the bounds, used during warm-up."""

        return self.policy.uniform(self.rng)

    def critic_targets(self, batch: Batch) -> Array:
        """``y = r + γ·(1 − done)·Q'(s', π'(s'))`` evaluated without recording."""

        with no_grad():
            next_states = Tensor(batch.next_states)
            next_actions = self.policy.actions(next_states, self.target_actor)
            next_q = self.q_value(self.target_critic, next_states, next_actions).data
        targets = batch.rewards + self.gamma * (1.0 - batch.dones) * next_q
        bad_rows = np.flatnonzero(~np.isfinite(targets[:, 0]))
        if bad_rows.size:
            row = int(bad_rows[0])
            raise NonFiniteError(f"Non-finite critic target in row {row}", op="critic_targets", row=row)
        return targets

    def _critic_terms(self, batch: Batch) -> Tuple[Tensor, Tensor]:
        targets = self.critic_targets(batch)
        q = self.q_value(self.critic, Tensor(batch.states), Tensor(batch.actions))
        return F.reduce_mean(F.square(F.sub(q, targets))), q

    def critic_loss(self, batch: Batch) -> Tensor:
        return self._critic_terms(batch)[0]

    def actor_loss(self, batch: Batch, actor: Optional[Network] = None) -> Tensor:
        """``−mean Q(s, π(s))`` with the critic held constant."""

        states = Tensor(batch.states)
        actions = self.policy.actions(states, actor if actor is not None else self.actor)
        return F.neg(F.reduce_mean(self.q_value(self.critic.detached(), states, actions)))

    def train_step(self, buffer: ReplayBuffer) -> StepMetrics:
        """One critic step, one actor step, then soft updates of both targets.

        Any error restores parameters, optimizer state and the replay
        sampler to their values before the call.
        """

        snapshot = TrainingSnapshot.capture(self._networks(), [self.actor_optimizer, self.critic_optimizer])
        sampler = buffer.sampler_state()
        try:
            batch = buffer.sample(self.config.batch_size)
            with ComputationTape() as tape:
                critic_loss, q = self._critic_terms(batch)
            adam_step(self.critic, tape.backward(critic_loss), self.critic_optimizer)

            with ComputationTape() as tape:
                actor_loss = self.actor_loss(batch)
            adam_step(self.actor, tape.backward(actor_loss), self.actor_optimizer)

            soft_update(self.target_critic, self.critic, self.tau)
            soft_update(self.target_actor, self.actor, self.tau)
        except EngineError:
            snapshot.restore()
            buffer.restore_sampler_state(sampler)
            logger.warning("DDPG update rolled back after %s updates", self.updates)
            raise
        self.updates += 1
        return StepMetrics(
            critic_loss=critic_loss.item(),
            actor_loss=actor_loss.item(),
            mean_q=float(np.mean(q.data)),
        )

    def _networks(self) -> List[Network]:
        return [self.actor, self.critic, self.target_actor, self.target_critic]

    def save(self, path: Union[str, Path]) -> Path:
        """Write actor, critic and both targets to one checkpoint container."""

        entries: Dict[str, Array] = self.policy.entries("actor.")
        entries.update(network_entries(self.critic, "critic."))
        entries.update(network_entries(self.target_actor, "target_actor."))
        entries.update(network_entries(self.target_critic, "target_critic."))
        return save_container(path, entries)

    @classmethod
    def load(
        cls, path: Union[str, Path], spec: EnvSpec, config: Optional[DdpgConfig] = None
    ) -> "DdpgAgent":
        entries = load_container(path)
        policy = DeterministicPolicy.from_entries(entries, "actor.")
        if not policy.matches(spec):
            raise SpecMismatchError(f"Checkpoint {path} does not match environment {spec.name}")
        agent = cls(spec, config, actor=policy.actor, critic=network_from_entries(entries, "critic."))
        agent.target_actor = network_from_entries(entries, "target_actor.")
        agent.target_critic = network_from_entries(entries, "target_critic.")
        return agent


__all__ = ["DdpgAgent", "DdpgConfig", "StepMetrics"]
