"""Learned transition model, Wasserstein critics and state-value critic.

The generator ``G`` maps ``[s‖a]`` to a predicted next state and is kept
honest by a Wasserstein discriminator ``D`` that tells real next states from
generated ones. A second Wasserstein critic, the reward critic ``Dr``, is
conditioned on the goal observation ``I``: it treats the goal itself as the
real sample and visited states as fake, so its score rises towards the goal.
Reward for the model-based pathway is the change of the measure ``L`` built
from ``Dr`` between two consecutive states. A reward head ``R̂`` regresses the
environment reward from ``[s‖a]`` for actors trained on native rewards.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from gan_actor_critic.autodiff import ComputationTape, Tensor, functional as F, no_grad
from gan_actor_critic.core.errors import ConfigError, EngineError, NonFiniteError, ShapeError
from gan_actor_critic.core.models import Array, Batch, Transition
from gan_actor_critic.core.seeding import derive_rng, derive_seed
from gan_actor_critic.nn import AdamConfig, AdamState, Network, TrainingSnapshot, adam_step, mlp_new, soft_update
from gan_actor_critic.nn.checkpoint import load_container, network_entries, network_from_entries, save_container

from .policy import DeterministicPolicy
from .replay import ReplayBuffer

logger = logging.getLogger(__name__)

SCORE_CONVENTIONS = ("gap", "score")

TensorOrArray = Union[Tensor, Array]


@dataclass
class WorldModelConfig:
    """Hyper-parameters of the generator, the two critics, the reward head and ``V``.

    ``score_convention`` picks how the reward critic becomes the per-state
    measure ``L``: ``"gap"`` uses ``L(s) = Dr(I‖I) − Dr(s‖I)``, the score gap
    still to close, and ``"score"`` uses ``L(s) = Dr(s‖I)``, which rewards a
    falling critic score instead. ``residual`` makes
    the generator predict ``s' − s``. ``conditional=False`` drops ``I`` from
    the reward critic's input.
    """

    hidden_sizes: Tuple[int, ...] = (256, 256)
    hidden_activation: str = "relu"
    generator_lr: float = 1e-3
    discriminator_lr: float = 1e-3
    reward_critic_lr: float = 1e-3
    reward_head_lr: float = 1e-3
    value_lr: float = 1e-3
    lambda_gp: float = 10.0
    adv_weight: float = 0.01
    conditional: bool = True
    n_critic: int = 5
    gp_step: float = 1e-4
    discount_variant: bool = False
    score_convention: str = "gap"
    residual: bool = False
    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 64
    rollout_horizon: int = 3
    imagined_fraction: float = 0.5

    def validate(self) -> None:
        if self.score_convention not in SCORE_CONVENTIONS:
            raise ConfigError(
                f"score_convention must be one of {SCORE_CONVENTIONS}, got {self.score_convention!r}",
                "score_convention",
            )
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}", "gamma")
        if self.lambda_gp < 0.0 or self.adv_weight < 0.0:
            raise ConfigError("lambda_gp and adv_weight must be non-negative")
        if self.gp_step <= 0.0:
            raise ConfigError("gp_step must be positive", "gp_step")
        if self.n_critic < 0:
            raise ConfigError("n_critic must be non-negative", "n_critic")
        if self.rollout_horizon < 1:
            raise ConfigError("rollout_horizon must be at least 1", "rollout_horizon")
        if not 0.0 <= self.imagined_fraction <= 1.0:
            raise ConfigError("imagined_fraction must lie in [0, 1]", "imagined_fraction")


@dataclass
class WorldModelMetrics:
    d_loss: float
    g_loss: float
    model_mse: float
    wasserstein_estimate: float
    reward_critic_loss: float = float("nan")
    reward_model_mse: float = float("nan")


def _as_batch(value: TensorOrArray) -> Tensor:
    tensor = value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=np.float64))
    if tensor.ndim == 1:
        tensor = F.reshape(tensor, (1, tensor.shape[0]))
    return tensor


def finite_difference_penalty(
    score_fn: Callable[[Array], Tensor], real: Array, fake: Array, epsilon: Array, step: float
) -> Tensor:
    """``mean (‖∇_x̂ f(x̂)‖₂ − 1)²`` over interpolates ``x̂ = εx_real + (1 − ε)x_fake``.

    The input gradient is a central difference per coordinate with the given
    step. All perturbed copies go through ``score_fn`` as one batch on the
    active tape, so the penalty stays differentiable with respect to the
    scoring network's parameters. The batch holds ``2·width`` blocks of
    ``rows`` rows each, every block in the original row order.
    """

    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape or real.ndim != 2:
        raise ShapeError("Gradient penalty needs equal rank-2 batches", real.shape, fake.shape)
    rows, width = real.shape
    epsilon = np.asarray(epsilon, dtype=np.float64).reshape(rows, 1)
    interpolates = epsilon * real + (1.0 - epsilon) * fake

    offsets = step * np.eye(width)
    plus = [interpolates + offsets[j] for j in range(width)]
    minus = [interpolates - offsets[j] for j in range(width)]
    scores = score_fn(np.concatenate(plus + minus, axis=0))

    columns: List[Tensor] = []
    for j in range(width):
        upper = F.slice_(scores, j * rows, (j + 1) * rows, axis=0)
        lower = F.slice_(scores, (width + j) * rows, (width + j + 1) * rows, axis=0)
        columns.append(F.scale(F.sub(upper, lower), 1.0 / (2.0 * step)))
    grad_norm = F.row_norm(F.concat(columns, axis=1))
    return F.reduce_mean(F.square(F.sub(grad_norm, 1.0)))


def _check_network(net: Network, in_dim: int, out_dim: int, message: str) -> None:
    if net.in_dim != in_dim or net.out_dim != out_dim:
        raise ShapeError(message, (net.in_dim, net.out_dim), (in_dim, out_dim))


class WorldModel:
    """Generator ``G: [s‖a] → ŝ'``, fidelity critic ``D``, reward critic ``Dr`` and reward head ``R̂``."""

    def __init__(
        self,
        obs_dim: int,
        act_dim: int,
        target: Optional[Array] = None,
        config: Optional[WorldModelConfig] = None,
        *,
        seed: int = 0,
        generator: Optional[Network] = None,
        discriminator: Optional[Network] = None,
        reward_critic: Optional[Network] = None,
        reward_head: Optional[Network] = None,
    ) -> None:
        self.config = config or WorldModelConfig()
        self.config.validate()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        hidden = list(self.config.hidden_sizes)
        activation = self.config.hidden_activation
        critic_in = obs_dim * 2 if self.config.conditional else obs_dim
        self.generator = generator or mlp_new(
            [obs_dim + act_dim, *hidden, obs_dim], activation, "identity", seed=derive_seed(seed, "generator_init")
        )
        self.discriminator = discriminator or mlp_new(
            [obs_dim, *hidden, 1], activation, "identity", seed=derive_seed(seed, "discriminator_init")
        )
        self.reward_critic = reward_critic or mlp_new(
            [critic_in, *hidden, 1], activation, "identity", seed=derive_seed(seed, "reward_critic_init")
        )
        self.reward_head = reward_head or mlp_new(
            [obs_dim + act_dim, *hidden, 1], activation, "identity", seed=derive_seed(seed, "reward_head_init")
        )
        _check_network(self.generator, obs_dim + act_dim, obs_dim, "Generator must map [obs‖act] to obs")
        _check_network(self.discriminator, obs_dim, 1, "Discriminator must map a state to one score")
        _check_network(self.reward_critic, critic_in, 1, "Reward critic must map its input to one score")
        _check_network(self.reward_head, obs_dim + act_dim, 1, "Reward head must map [obs‖act] to one value")
        self.target = np.zeros(obs_dim)
        self.set_target(target if target is not None else np.zeros(obs_dim))
        self.generator_optimizer = AdamState.for_network(
            self.generator, AdamConfig(lr=self.config.generator_lr)
        )
        self.discriminator_optimizer = AdamState.for_network(
            self.discriminator, AdamConfig(lr=self.config.discriminator_lr)
        )
        self.reward_critic_optimizer = AdamState.for_network(
            self.reward_critic, AdamConfig(lr=self.config.reward_critic_lr)
        )
        self.reward_head_optimizer = AdamState.for_network(
            self.reward_head, AdamConfig(lr=self.config.reward_head_lr)
        )
        self.rng = derive_rng(seed, "model")

    @property
    def networks(self) -> List[Network]:
        return [self.generator, self.discriminator, self.reward_critic, self.reward_head]

    @property
    def optimizers(self) -> List[AdamState]:
        return [
            self.generator_optimizer,
            self.discriminator_optimizer,
            self.reward_critic_optimizer,
            self.reward_head_optimizer,
        ]

    def set_target(self, target: Array) -> None:
        """Set the fallback goal ``I`` used for rows that carry no goal of their own."""

        value = np.asarray(target, dtype=np.float64).reshape(-1)
        if value.shape != (self.obs_dim,):
            raise ShapeError("Target state shape mismatch", value.shape, (self.obs_dim,))
        if not np.all(np.isfinite(value)):
            raise NonFiniteError("Target state must be finite", op="set_target")
        self.target = value.copy()

    def goal_rows(self, goals: Optional[Array], rows: int) -> Array:
        """``[rows × obs]`` goals; ``None`` and non-finite rows fall back to ``target``."""

        if goals is None:
            return np.tile(self.target, (rows, 1))
        values = np.array(goals, dtype=np.float64)
        if values.ndim == 1:
            values = np.tile(values, (rows, 1))
        if values.shape != (rows, self.obs_dim):
            raise ShapeError("Goal rows shape mismatch", values.shape, (rows, self.obs_dim))
        missing = ~np.all(np.isfinite(values), axis=1)
        values[missing] = self.target
        return values

    # Generator

    def predict_next(
        self, s: TensorOrArray, a: TensorOrArray, generator: Optional[Network] = None
    ) -> Tensor:
        """``ŝ' = G([s‖a])`` (or ``s + G([s‖a])`` in residual mode), ``[B × obs]``."""

        states = _as_batch(s)
        actions = _as_batch(a)
        if states.shape[1] != self.obs_dim or actions.shape[1] != self.act_dim:
            raise ShapeError(
                "predict_next input widths", (states.shape[1], actions.shape[1]), (self.obs_dim, self.act_dim)
            )
        net = generator if generator is not None else self.generator
        try:
            output = net(F.concat([states, actions], axis=1))
        except NonFiniteError as exc:
            raise NonFiniteError(f"Generator diverged: {exc}", op="predict_next", row=exc.row) from exc
        if self.config.residual:
            output = F.add(states, output)
        return output

    def supervised_model_loss(self, batch: Batch, generator: Optional[Network] = None) -> Tensor:
        """Mean squared one-step error over batch rows and state dimensions."""

        predicted = self.predict_next(batch.states, batch.actions, generator)
        return F.reduce_mean(F.square(F.sub(predicted, batch.next_states)))

    # Fidelity discriminator

    def critic_output(self, states: TensorOrArray, discriminator: Optional[Network] = None) -> Tensor:
        """Raw fidelity critic output ``D(s)``, ``[B × 1]``."""

        batch = _as_batch(states)
        if batch.shape[1] != self.obs_dim:
            raise ShapeError("Discriminator input width", (batch.shape[1],), (self.obs_dim,))
        net = discriminator if discriminator is not None else self.discriminator
        return net(batch)

    def wasserstein_estimate(
        self, real_states: TensorOrArray, fake_states: TensorOrArray, discriminator: Optional[Network] = None
    ) -> Tensor:
        """``mean D(real) − mean D(fake)``."""

        real = self.critic_output(real_states, discriminator)
        fake = self.critic_output(fake_states, discriminator)
        return F.sub(F.reduce_mean(real), F.reduce_mean(fake))

    def gradient_penalty(
        self,
        real_states: TensorOrArray,
        fake_states: TensorOrArray,
        *,
        epsilon: Optional[Array] = None,
        discriminator: Optional[Network] = None,
    ) -> Tensor:
        """Finite-difference gradient penalty of ``D`` with step ``gp_step``.

        ``epsilon`` (``[B × 1]``) defaults to uniform draws from the model stream.
        """

        real = _as_batch(real_states).data
        fake = _as_batch(fake_states).data
        if epsilon is None:
            epsilon = self.rng.uniform(0.0, 1.0, size=(real.shape[0], 1))
        return finite_difference_penalty(
            lambda x: self.critic_output(x, discriminator), real, fake, epsilon, self.config.gp_step
        )

    def wgan_d_loss(
        self,
        real_states: TensorOrArray,
        fake_states: TensorOrArray,
        *,
        epsilon: Optional[Array] = None,
        discriminator: Optional[Network] = None,
    ) -> Tuple[Tensor, Tensor]:
        """Discriminator loss ``−(mean D(real) − mean D(fake)) + λ_gp·GP``.

        Returns the loss and the Wasserstein estimate it was built from.
        Fake batches are treated as constants.
        """

        fake = _as_batch(fake_states).detach()
        estimate = self.wasserstein_estimate(real_states, fake, discriminator)
        loss = F.neg(estimate)
        if self.config.lambda_gp > 0.0:
            penalty = self.gradient_penalty(real_states, fake, epsilon=epsilon, discriminator=discriminator)
            loss = F.add(loss, F.scale(penalty, self.config.lambda_gp))
        return loss, estimate

    def wgan_g_loss(self, batch: Batch, generator: Optional[Network] = None) -> Tensor:
        """``supervised_model_loss − adv_weight · mean D(G([s‖a]))`` with ``D`` frozen."""

        supervised = self.supervised_model_loss(batch, generator)
        if self.config.adv_weight == 0.0:
            return supervised
        predicted = self.predict_next(batch.states, batch.actions, generator)
        adversarial = F.reduce_mean(self.critic_output(predicted, self.discriminator.detached()))
        return F.sub(supervised, F.scale(adversarial, self.config.adv_weight))

    # Reward critic

    def _reward_input(self, states: Tensor, goals: Array) -> Tensor:
        if not self.config.conditional:
            return states
        return F.concat([states, Tensor(goals)], axis=1)

    def goal_score(
        self, states: TensorOrArray, goals: Optional[Array] = None, reward_critic: Optional[Network] = None
    ) -> Tensor:
        """Raw reward-critic output ``Dr(s‖I)`` per row, ``[B × 1]``."""

        batch = _as_batch(states)
        if batch.shape[1] != self.obs_dim:
            raise ShapeError("Reward critic input width", (batch.shape[1],), (self.obs_dim,))
        net = reward_critic if reward_critic is not None else self.reward_critic
        return net(self._reward_input(batch, self.goal_rows(goals, batch.shape[0])))

    def state_measure(
        self, states: TensorOrArray, goals: Optional[Array] = None, reward_critic: Optional[Network] = None
    ) -> Tensor:
        """Per-state measure ``L`` under the configured score convention, ``[B × 1]``."""

        scores = self.goal_score(states, goals, reward_critic)
        if self.config.score_convention == "score":
            return scores
        rows = self.goal_rows(goals, scores.shape[0])
        reference = self.goal_score(rows, rows, reward_critic)
        return F.sub(reference, scores)

    def discriminator_score(self, s: Array, target: Optional[Array] = None) -> float:
        """``L(s)`` for a single state, against ``target`` or the stored goal ``I``."""

        goal = None if target is None else np.asarray(target, dtype=np.float64).reshape(1, -1)
        with no_grad():
            return self.state_measure(np.asarray(s, dtype=np.float64).reshape(1, -1), goal).item()

    def reward_critic_loss(
        self,
        visited: TensorOrArray,
        goals: Optional[Array] = None,
        *,
        epsilon: Optional[Array] = None,
        reward_critic: Optional[Network] = None,
    ) -> Tuple[Tensor, Tensor]:
        """``−(mean Dr(I‖I) − mean Dr(s‖I)) + λ_gp·GP`` with goals real and visited states fake.

        Every row is paired with its own goal. The penalty interpolates in
        state coordinates only; the goal half of the input stays fixed.
        Returns the loss and the Wasserstein estimate.
        """

        fake = _as_batch(visited).detach().data
        rows = fake.shape[0]
        real = self.goal_rows(goals, rows)
        estimate = F.sub(
            F.reduce_mean(self.goal_score(real, real, reward_critic)),
            F.reduce_mean(self.goal_score(fake, real, reward_critic)),
        )
        loss = F.neg(estimate)
        if self.config.lambda_gp > 0.0:
            if epsilon is None:
                epsilon = self.rng.uniform(0.0, 1.0, size=(rows, 1))
            tiled = np.tile(real, (2 * self.obs_dim, 1))
            penalty = finite_difference_penalty(
                lambda x: self.goal_score(x, tiled, reward_critic), real, fake, epsilon, self.config.gp_step
            )
            loss = F.add(loss, F.scale(penalty, self.config.lambda_gp))
        return loss, estimate

    # Reward

    def shaped_reward_batch(
        self,
        states: TensorOrArray,
        next_states: TensorOrArray,
        *,
        goals: Optional[Array] = None,
        discount_variant: Optional[bool] = None,
        reward_critic: Optional[Network] = None,
    ) -> Tensor:
        """``L(s_t) − L(s_{t+1})`` per row, or ``L(s_t) − γ·L(s_{t+1})`` in the discounted variant.

        Row ``i`` is measured against ``goals[i]``.
        """

        variant = self.config.discount_variant if discount_variant is None else discount_variant
        current = self.state_measure(states, goals, reward_critic)
        following = self.state_measure(next_states, goals, reward_critic)
        if variant:
            following = F.scale(following, self.config.gamma)
        return F.sub(current, following)

    def shaped_reward(
        self,
        s_t: Array,
        s_t1: Array,
        discount_variant: Optional[bool] = None,
        goal: Optional[Array] = None,
    ) -> float:
        goals = None if goal is None else np.asarray(goal, dtype=np.float64).reshape(1, -1)
        with no_grad():
            reward = self.shaped_reward_batch(
                np.asarray(s_t, dtype=np.float64).reshape(1, -1),
                np.asarray(s_t1, dtype=np.float64).reshape(1, -1),
                goals=goals,
                discount_variant=discount_variant,
            )
        return reward.item()

    # Reward head

    def predict_reward(
        self, s: TensorOrArray, a: TensorOrArray, reward_head: Optional[Network] = None
    ) -> Tensor:
        """``R̂([s‖a])``, ``[B × 1]``."""

        states = _as_batch(s)
        actions = _as_batch(a)
        net = reward_head if reward_head is not None else self.reward_head
        return net(F.concat([states, actions], axis=1))

    def reward_model_loss(self, batch: Batch, reward_head: Optional[Network] = None) -> Tensor:
        predicted = self.predict_reward(batch.states, batch.actions, reward_head)
        return F.reduce_mean(F.square(F.sub(predicted, batch.rewards)))

    # Training

    def discriminator_step(self, batch: Batch) -> Tuple[float, float]:
        with no_grad():
            fake = self.predict_next(batch.states, batch.actions)
        with ComputationTape() as tape:
            loss, estimate = self.wgan_d_loss(batch.next_states, fake)
        adam_step(self.discriminator, tape.backward(loss), self.discriminator_optimizer)
        return loss.item(), estimate.item()

    def reward_critic_step(self, batch: Batch) -> float:
        """One update of ``Dr`` with the batch's goals real and its next states fake."""

        with ComputationTape() as tape:
            loss, _ = self.reward_critic_loss(batch.next_states, batch.goals)
        adam_step(self.reward_critic, tape.backward(loss), self.reward_critic_optimizer)
        return loss.item()

    def generator_step(self, batch: Batch) -> Tuple[float, float]:
        with ComputationTape() as tape:
            loss = self.wgan_g_loss(batch)
        adam_step(self.generator, tape.backward(loss), self.generator_optimizer)
        with no_grad():
            mse = self.supervised_model_loss(batch).item()
        return loss.item(), mse

    def reward_head_step(self, batch: Batch) -> float:
        with ComputationTape() as tape:
            loss = self.reward_model_loss(batch)
        adam_step(self.reward_head, tape.backward(loss), self.reward_head_optimizer)
        return loss.item()

    def train_step(self, buffer: ReplayBuffer) -> WorldModelMetrics:
        """``n_critic`` critic rounds followed by one generator and reward-head step.

        A critic round updates ``D`` and ``Dr`` on the same batch. Every round
        draws its own batch of real transitions. On error every network,
        optimizer and the sampler roll back.
        """

        snapshot = TrainingSnapshot.capture(self.networks, self.optimizers)
        sampler = buffer.sampler_state()
        d_loss = estimate = reward_critic_loss = float("nan")
        try:
            for _ in range(self.config.n_critic):
                batch = buffer.sample(self.config.batch_size)
                d_loss, estimate = self.discriminator_step(batch)
                reward_critic_loss = self.reward_critic_step(batch)
            batch = buffer.sample(self.config.batch_size)
            g_loss, mse = self.generator_step(batch)
            reward_mse = self.reward_head_step(batch)
        except EngineError:
            snapshot.restore()
            buffer.restore_sampler_state(sampler)
            logger.warning("World-model update rolled back")
            raise
        return WorldModelMetrics(
            d_loss=d_loss,
            g_loss=g_loss,
            model_mse=mse,
            wasserstein_estimate=estimate,
            reward_critic_loss=reward_critic_loss,
            reward_model_mse=reward_mse,
        )

    def open_loop_predict(self, s0: Array, actions: Array) -> Array:
        """Feed the model its own predictions along a fixed action sequence.

        Returns ``[T × obs]`` predicted states for ``T = len(actions)``.
        """

        state = np.asarray(s0, dtype=np.float64).reshape(1, -1)
        predicted: List[Array] = []
        with no_grad():
            for action in np.asarray(actions, dtype=np.float64).reshape(-1, self.act_dim):
                state = self.predict_next(state, action.reshape(1, -1)).data
                predicted.append(state[0].copy())
        return np.stack(predicted) if predicted else np.zeros((0, self.obs_dim))

    def entries(self) -> Dict[str, Array]:
        entries = network_entries(self.generator, "generator.")
        entries.update(network_entries(self.discriminator, "discriminator."))
        entries.update(network_entries(self.reward_critic, "reward_critic."))
        entries.update(network_entries(self.reward_head, "reward_head."))
        entries["world_model.target"] = self.target.copy()
        return entries

    def save(self, path: Union[str, Path]) -> Path:
        return save_container(path, self.entries())

    @classmethod
    def from_entries(
        cls, entries: Mapping[str, Array], config: Optional[WorldModelConfig] = None
    ) -> "WorldModel":
        generator = network_from_entries(entries, "generator.")
        obs_dim = generator.out_dim
        return cls(
            obs_dim,
            generator.in_dim - obs_dim,
            entries.get("world_model.target"),
            config,
            generator=generator,
            discriminator=network_from_entries(entries, "discriminator."),
            reward_critic=network_from_entries(entries, "reward_critic."),
            reward_head=network_from_entries(entries, "reward_head."),
        )

    @classmethod
    def load(cls, path: Union[str, Path], config: Optional[WorldModelConfig] = None) -> "WorldModel":
        return cls.from_entries(load_container(path), config)


class ModelBasedCritic:
    """State-value critic ``V(s)`` with a Polyak-averaged target ``V'``."""

    def __init__(
        self,
        obs_dim: int,
        config: Optional[WorldModelConfig] = None,
        *,
        seed: int = 0,
        value: Optional[Network] = None,
    ) -> None:
        self.config = config or WorldModelConfig()
        self.value = value or mlp_new(
            [obs_dim, *self.config.hidden_sizes, 1],
            self.config.hidden_activation,
            "identity",
            seed=derive_seed(seed, "value_init"),
        )
        if self.value.in_dim != obs_dim or self.value.out_dim != 1:
            raise ShapeError("Value network must map obs to one value", (self.value.in_dim, self.value.out_dim), (obs_dim, 1))
        self.target_value = self.value.clone()
        self.optimizer = AdamState.for_network(self.value, AdamConfig(lr=self.config.value_lr))

    @property
    def gamma(self) -> float:
        return self.config.gamma

    def value_target(self, r: Array, s_t1: Array, dones: Optional[Array] = None) -> Array:
        """``y = r + γ·(1 − done)·V'(s_{t+1})`` with the target network frozen."""

        rewards = np.asarray(r, dtype=np.float64).reshape(-1, 1)
        with no_grad():
            next_values = self.target_value(_as_batch(s_t1)).data
        mask = 1.0 if dones is None else 1.0 - np.asarray(dones, dtype=np.float64).reshape(-1, 1)
        targets = rewards + self.gamma * mask * next_values
        bad_rows = np.flatnonzero(~np.isfinite(targets[:, 0]))
        if bad_rows.size:
            row = int(bad_rows[0])
            raise NonFiniteError(f"Non-finite value target in row {row}", op="value_target", row=row)
        return targets

    def value_loss(self, states: Array, rewards: Array, next_states: Array, dones: Optional[Array] = None) -> Tensor:
        targets = self.value_target(rewards, next_states, dones)
        return F.reduce_mean(F.square(F.sub(self.value(_as_batch(states)), targets)))

    def train_step(
        self, states: Array, rewards: Array, next_states: Array, dones: Optional[Array] = None
    ) -> float:
        with ComputationTape() as tape:
            loss = self.value_loss(states, rewards, next_states, dones)
        adam_step(self.value, tape.backward(loss), self.optimizer)
        soft_update(self.target_value, self.value, self.config.tau)
        return loss.item()


def model_actor_loss(
    wm: WorldModel,
    mbc: ModelBasedCritic,
    policy: DeterministicPolicy,
    states: TensorOrArray,
    *,
    goals: Optional[Array] = None,
    actor: Optional[Network] = None,
    include_shaped_reward: bool = True,
) -> Tensor:
    """``−mean[r(s, π(s), ŝ') + γ·V(ŝ')]`` with ``ŝ' = G([s‖π(s)])``.

    The immediate term is the shaped reward ``r̃(s, ŝ')`` against each row's
    goal, or the reward head ``R̂([s‖π(s)])`` when
    ``include_shaped_reward=False``. ``G``, ``Dr``, ``R̂`` and ``V`` enter as
    constants; gradients reach the actor through them.
    """

    batch = _as_batch(states)
    actions = policy.actions(batch, actor)
    predicted = wm.predict_next(batch, actions, wm.generator.detached())
    objective = F.scale(mbc.value.detached()(predicted), mbc.gamma)
    if include_shaped_reward:
        reward = wm.shaped_reward_batch(batch, predicted, goals=goals, reward_critic=wm.reward_critic.detached())
    else:
        reward = wm.predict_reward(batch, actions, wm.reward_head.detached())
    return F.neg(F.reduce_mean(F.add(reward, objective)))


@dataclass
class RolloutResult:
    """Imagined transitions in step-major order; ``truncated`` flags a divergent model."""

    transitions: List[Transition] = field(default_factory=list)
    final_states: Optional[Array] = None
    truncated: bool = False
    error: Optional[str] = None


def imagined_rollout(
    wm: WorldModel,
    policy: DeterministicPolicy,
    s0: Array,
    horizon: int,
    goals: Optional[Array] = None,
) -> RolloutResult:
    """Roll the policy through the learned model for ``horizon`` steps.

    ``s0`` may be one state or a ``[B × obs]`` batch; row ``i`` keeps
    ``goals[i]`` for the whole rollout. Every produced transition carries
    ``synthetic=True``. If a predicted state is not finite the rollout stops
    there and the transitions collected so far are returned with
    ``truncated`` set.
    """

    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    states = np.asarray(s0, dtype=np.float64)
    states = states.reshape(1, -1) if states.ndim == 1 else states
    goal_rows = wm.goal_rows(goals, states.shape[0])
    result = RolloutResult(final_states=states.copy())
    with no_grad():
        for step in range(horizon):
            try:
                actions = np.clip(policy.actions(Tensor(states)).data, policy.low, policy.high)
                next_states = wm.predict_next(states, actions).data
                rewards = wm.shaped_reward_batch(states, next_states, goals=goal_rows).data[:, 0]
            except NonFiniteError as exc:
                logger.warning("Imagined rollout truncated at step %s: %s", step, exc, extra={"step": step})
                result.truncated = True
                result.error = str(exc)
                return result
            for row in range(states.shape[0]):
                result.transitions.append(
                    Transition(
                        s=states[row].copy(),
                        a=actions[row].copy(),
                        r=float(rewards[row]),
                        s_next=next_states[row].copy(),
                        synthetic=True,
                        goal=goal_rows[row].copy(),
                    )
                )
            states = next_states
            result.final_states = states.copy()
    return result


def open_loop_rms(predicted: Array, actual: Array) -> Array:
    """Per-dimension RMS error between predicted and ground-truth trajectories."""

    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise ShapeError("Trajectories differ in shape", predicted.shape, actual.shape)
    return np.sqrt(np.mean((predicted - actual) ** 2, axis=0))


def write_rollout_comparison(path: Union[str, Path], predicted: Array, actual: Array) -> Path:
    """Write ``step,dim,predicted,actual`` rows, one per state coordinate per step."""

    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise ShapeError("Trajectories differ in shape", predicted.shape, actual.shape)
    destination = Path(path)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with destination.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "dim", "predicted", "actual"])
        for step in range(predicted.shape[0]):
            for dim in range(predicted.shape[1]):
                writer.writerow([step, dim, repr(float(predicted[step, dim])), repr(float(actual[step, dim]))])
    return destination


__all__ = [
    "ModelBasedCritic",
    "RolloutResult",
    "SCORE_CONVENTIONS",
    "WorldModel",
    "WorldModelConfig",
    "WorldModelMetrics",
    "finite_difference_penalty",
    "imagined_rollout",
    "model_actor_loss",
    "open_loop_rms",
    "write_rollout_comparison",
]
