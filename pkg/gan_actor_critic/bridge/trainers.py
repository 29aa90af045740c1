"""Paired GAN and gated actor-critic trainers over one shared sample stream."""

from __future__ import annotations

import csv
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from gan_actor_critic.agents.world_model import finite_difference_penalty
from gan_actor_critic.autodiff import ComputationTape, Tensor, functional as F, no_grad
from gan_actor_critic.core.errors import ConfigError, StreamDesyncError
from gan_actor_critic.core.models import Array
from gan_actor_critic.core.seeding import derive_rng, derive_seed
from gan_actor_critic.nn import AdamConfig, AdamState, Network, adam_step, mlp_new

from .mdp import FAKE_REWARD, REAL_REWARD, BlindActor, BridgeStream, StatelessMdp

logger = logging.getLogger(__name__)

OBJECTIVES = ("wasserstein", "cross_entropy")
AC_CRITIC_LOSSES = ("adversarial", "td_mse")
DATASETS = ("gaussian", "mixture")


@dataclass
class BridgeConfig:
    """Settings of the GAN ⇄ actor-critic construction on low-dimensional toy data.

    ``ac_critic_loss`` picks the actor-critic side's critic update:
    ``"adversarial"`` reuses ``objective`` on the reward-1 and reward-0 rows,
    ``"td_mse"`` regresses the critic onto the reward with a squared TD error.
    """

    objective: str = "wasserstein"
    ac_critic_loss: str = "adversarial"
    lambda_gp: float = 0.0
    gp_step: float = 1e-4
    noise_dim: int = 1
    data_dim: int = 1
    hidden_sizes: Tuple[int, ...] = (16, 16)
    hidden_activation: str = "tanh"
    generator_lr: float = 1e-4
    discriminator_lr: float = 1e-4
    batch_size: int = 32
    p_real: float = 0.5
    dataset: str = "gaussian"
    data_mean: float = 3.0
    data_std: float = 1.0
    dataset_size: int = 1024
    steps: int = 100
    negative_control: bool = True

    def validate(self) -> None:
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}", "objective")
        if self.ac_critic_loss not in AC_CRITIC_LOSSES:
            raise ConfigError(
                f"ac_critic_loss must be one of {AC_CRITIC_LOSSES}, got {self.ac_critic_loss!r}", "ac_critic_loss"
            )
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got {self.dataset!r}", "dataset")
        if self.noise_dim < 1 or self.data_dim < 1 or self.batch_size < 1 or self.dataset_size < 1:
            raise ConfigError("noise_dim, data_dim, batch_size and dataset_size must be positive")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative", "steps")
        if not 0.0 <= self.p_real <= 1.0:
            raise ConfigError("p_real must lie in [0, 1]", "p_real")


def make_dataset(config: BridgeConfig, seed: int) -> Array:
    """Real samples: one Gaussian, or an equal mixture of two at ``±data_mean``."""

    rng = derive_rng(seed, "bridge", 1)
    shape = (config.dataset_size, config.data_dim)
    samples = rng.normal(0.0, config.data_std, size=shape)
    if config.dataset == "gaussian":
        return samples + config.data_mean
    signs = np.where(rng.random((config.dataset_size, 1)) < 0.5, -1.0, 1.0)
    return samples + signs * config.data_mean


def discriminator_objective(objective: str, real_scores: Tensor, fake_scores: Tensor) -> Tensor:
    """Critic loss: ``−(mean D(real) − mean D(fake))`` or the cross-entropy of logits."""

    if objective == "wasserstein":
        return F.neg(F.sub(F.reduce_mean(real_scores), F.reduce_mean(fake_scores)))
    return F.add(
        F.reduce_mean(F.softplus(F.neg(real_scores))),
        F.reduce_mean(F.softplus(fake_scores)),
    )


def td_critic_loss(scores: Tensor, rewards: Array) -> Tensor:
    """``mean (Q(x) − r)²``; the stateless MDP has no successor state, so the TD target is ``r``.

    On a balanced batch where ``Q ≡ ½`` its gradient is exactly half the
    Wasserstein critic gradient; anywhere else the two updates part ways.
    """

    targets = np.asarray(rewards, dtype=np.float64).reshape(-1, 1)
    return F.reduce_mean(F.square(F.sub(scores, targets)))


def generator_objective(objective: str, fake_scores: Tensor) -> Tensor:
    """Generator loss: ``−mean D(G(z))`` or the non-saturating ``mean softplus(−D(G(z)))``."""

    if objective == "wasserstein":
        return F.neg(F.reduce_mean(fake_scores))
    return F.reduce_mean(F.softplus(F.neg(fake_scores)))


def generator_gradient(generator: Network, critic: Network, z: Array, objective: str) -> List[Array]:
    """Gradient of the generator loss w.r.t. generator parameters; the critic is held constant."""

    with ComputationTape() as tape:
        scores = critic.detached()(generator(Tensor(z)))
        loss = generator_objective(objective, scores)
    grads = tape.backward(loss)
    return [grads.get_or_zeros(param) for param in generator.parameters()]


def gated_actor_update(
    actor: BlindActor, critic: Network, z: Array, reward: Union[float, Array], objective: str = "wasserstein"
) -> List[Array]:
    """Actor gradient that is non-zero only on steps where the actor's own sample was shown.

    Rows with reward 1 (a real sample was shown) contribute nothing; when no
    row has reward 0 every buffer is exactly zero. On the fake rows the
    gradient is that of the generator loss of the critic's score of
    ``actor(z)``.
    """

    rewards = np.asarray(reward, dtype=np.float64).reshape(-1)
    noise = np.asarray(z, dtype=np.float64).reshape(rewards.shape[0], -1)
    fake_rows = np.flatnonzero(rewards == FAKE_REWARD)
    if fake_rows.size == 0:
        return [np.zeros_like(param.data) for param in actor.generator.parameters()]
    return generator_gradient(actor.generator, critic, noise[fake_rows], objective)


@dataclass
class StepRecord:
    wasserstein_estimate: float
    real_count: int
    fake_count: int


class AdversarialTrainer(ABC):
    """Shared update machinery: one critic step, then one generator step, no target networks."""

    def __init__(
        self,
        generator: Network,
        critic: Network,
        dataset: Array,
        config: Optional[BridgeConfig] = None,
        *,
        seed: int = 0,
    ) -> None:
        self.config = config or BridgeConfig()
        self.config.validate()
        self.generator = generator
        self.critic = critic
        self.dataset = np.asarray(dataset, dtype=np.float64).reshape(-1, critic.in_dim)
        self.generator_optimizer = AdamState.for_network(generator, AdamConfig(lr=self.config.generator_lr))
        self.critic_optimizer = AdamState.for_network(critic, AdamConfig(lr=self.config.discriminator_lr))
        self.stream = self._new_stream(seed)

    def _new_stream(self, seed: int) -> BridgeStream:
        return BridgeStream(
            self.dataset,
            batch_size=self.config.batch_size,
            noise_dim=self.generator.in_dim,
            p_real=self.config.p_real,
            seed=derive_seed(seed, "bridge"),
        )

    def reseed(self, seed: int) -> None:
        self.stream = self._new_stream(seed)

    @property
    def position(self) -> int:
        return self.stream.position

    def flat_parameters(self) -> Array:
        return np.concatenate([self.generator.flatten(), self.critic.flatten()])

    def _generate(self, z: Array) -> Array:
        with no_grad():
            return self.generator(Tensor(z)).data

    def _update_critic(self, real: Array, fake: Array, epsilon: Array) -> float:
        if real.shape[0] == 0 or fake.shape[0] == 0:
            return float("nan")
        with ComputationTape() as tape:
            real_scores = self.critic(Tensor(real))
            fake_scores = self.critic(Tensor(fake))
            loss = discriminator_objective(self.config.objective, real_scores, fake_scores)
            if self.config.lambda_gp > 0.0:
                pairs = min(real.shape[0], fake.shape[0])
                penalty = finite_difference_penalty(
                    lambda x: self.critic(Tensor(x)),
                    real[:pairs],
                    fake[:pairs],
                    epsilon[:pairs],
                    self.config.gp_step,
                )
                loss = F.add(loss, F.scale(penalty, self.config.lambda_gp))
        adam_step(self.critic, tape.backward(loss), self.critic_optimizer)
        return float(np.mean(real_scores.data) - np.mean(fake_scores.data))

    def _update_critic_td(self, shown: Array, rewards: Array) -> float:
        """Squared-TD critic step over every shown row; no gradient penalty."""

        with ComputationTape() as tape:
            scores = self.critic(Tensor(shown))
            loss = td_critic_loss(scores, rewards)
        adam_step(self.critic, tape.backward(loss), self.critic_optimizer)
        real_rows = np.asarray(rewards).reshape(-1) == REAL_REWARD
        if real_rows.all() or not real_rows.any():
            return float("nan")
        return float(np.mean(scores.data[real_rows]) - np.mean(scores.data[~real_rows]))

    def _apply_generator(self, grads: Sequence[Array]) -> None:
        adam_step(self.generator, grads, self.generator_optimizer)

    @abstractmethod
    def step(self) -> StepRecord:
        """Consume one stream batch and update critic and generator."""


class GanTrainer(AdversarialTrainer):
    """Standard GAN: the coin splits each batch into real samples and generated ones."""

    def step(self) -> StepRecord:
        batch = self.stream.draw()
        samples = self._generate(batch.noise)
        real = batch.real[batch.coins]
        fake = samples[~batch.coins]
        estimate = self._update_critic(real, fake, batch.epsilon)
        z_fake = batch.noise[~batch.coins]
        if z_fake.shape[0]:
            self._apply_generator(generator_gradient(self.generator, self.critic, z_fake, self.config.objective))
        return StepRecord(estimate, int(real.shape[0]), int(fake.shape[0]))


class AcTrainer(AdversarialTrainer):
    """Blind actor and critic in the stateless MDP.

    The critic learns to tell reward-1 observations from reward-0 ones,
    either adversarially or by squared TD regression onto the reward; the
    actor follows :func:`gated_actor_update` and is left untouched on
    batches where only real samples were shown.
    """

    def __init__(
        self,
        actor: BlindActor,
        critic: Network,
        mdp: StatelessMdp,
        config: Optional[BridgeConfig] = None,
        *,
        seed: int = 0,
    ) -> None:
        super().__init__(actor.generator, critic, mdp.dataset, config, seed=seed)
        self.actor = actor
        self.mdp = mdp

    def step(self) -> StepRecord:
        batch = self.stream.draw()
        actions = self.actor.act(batch.noise)
        shown, rewards = self.mdp.step_batch(actions, coins=batch.coins, indices=batch.indices)
        real = shown[rewards == REAL_REWARD]
        fake = shown[rewards == FAKE_REWARD]
        if self.config.ac_critic_loss == "td_mse":
            estimate = self._update_critic_td(shown, rewards)
        else:
            estimate = self._update_critic(real, fake, batch.epsilon)
        grads = gated_actor_update(self.actor, self.critic, batch.noise, rewards, self.config.objective)
        if fake.shape[0]:
            self._apply_generator(grads)
        return StepRecord(estimate, int(real.shape[0]), int(fake.shape[0]))


@dataclass
class TraceRow:
    step: int
    deviation: float
    gan_wasserstein: float
    ac_wasserstein: float


def max_parameter_deviation(first: AdversarialTrainer, second: AdversarialTrainer) -> float:
    return float(np.max(np.abs(first.flat_parameters() - second.flat_parameters())))


def equivalence_check(
    gan_trainer: AdversarialTrainer,
    ac_trainer: AdversarialTrainer,
    steps: int,
    seed: Optional[int] = None,
    *,
    ac_seed: Optional[int] = None,
    trace: Optional[List[TraceRow]] = None,
) -> float:
    """Run both trainers ``steps`` times and return the max absolute parameter deviation.

    With ``seed`` set both trainers get fresh streams from it (``ac_seed``
    overrides the actor-critic side). The trainers must sit at the same
    stream position before every step.
    """

    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    if seed is not None:
        gan_trainer.reseed(seed)
        ac_trainer.reseed(seed if ac_seed is None else ac_seed)
    for step in range(steps):
        if gan_trainer.position != ac_trainer.position:
            raise StreamDesyncError(gan_trainer.position, ac_trainer.position)
        gan_record = gan_trainer.step()
        ac_record = ac_trainer.step()
        if trace is not None:
            trace.append(
                TraceRow(
                    step=step,
                    deviation=max_parameter_deviation(gan_trainer, ac_trainer),
                    gan_wasserstein=gan_record.wasserstein_estimate,
                    ac_wasserstein=ac_record.wasserstein_estimate,
                )
            )
    if gan_trainer.position != ac_trainer.position:
        raise StreamDesyncError(gan_trainer.position, ac_trainer.position)
    deviation = max_parameter_deviation(gan_trainer, ac_trainer)
    logger.debug("Equivalence check finished", extra={"steps": steps, "deviation": deviation})
    return deviation


def build_trainers(config: Optional[BridgeConfig] = None, seed: int = 0) -> Tuple[GanTrainer, AcTrainer]:
    """GAN and actor-critic trainers with bit-identical initial parameters and streams."""

    config = config or BridgeConfig()
    config.validate()
    dataset = make_dataset(config, seed)
    hidden = list(config.hidden_sizes)
    generator = mlp_new(
        [config.noise_dim, *hidden, config.data_dim],
        config.hidden_activation,
        "identity",
        seed=derive_seed(seed, "generator_init"),
    )
    critic = mlp_new(
        [config.data_dim, *hidden, 1],
        config.hidden_activation,
        "identity",
        seed=derive_seed(seed, "discriminator_init"),
    )
    gan = GanTrainer(generator, critic, dataset, config, seed=seed)
    mdp = StatelessMdp(dataset, config.p_real, seed=derive_seed(seed, "bridge", 2))
    ac = AcTrainer(BlindActor(generator.clone(), config.noise_dim), critic.clone(), mdp, config, seed=seed)
    return gan, ac


TRACE_HEADER = ["step", "deviation", "gan_wasserstein", "ac_wasserstein"]


def write_trace(path: Union[str, Path], rows: Sequence[TraceRow]) -> Path:
    destination = Path(path)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with destination.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_HEADER)
        for row in rows:
            writer.writerow(
                [row.step, repr(row.deviation), _cell(row.gan_wasserstein), _cell(row.ac_wasserstein)]
            )
    return destination


def _cell(value: float) -> str:
    return repr(value) if np.isfinite(value) else "nan"


@dataclass
class BridgeReport:
    steps: int
    deviation: float
    control_deviation: Optional[float]
    trace_path: Optional[Path]


def run_bridge(
    config: Optional[BridgeConfig] = None,
    seed: int = 0,
    out_dir: Union[str, Path, None] = None,
) -> BridgeReport:
    """Run the paired trainers, optionally a different-seed control, and write the trace CSV."""

    config = config or BridgeConfig()
    gan, ac = build_trainers(config, seed)
    trace: List[TraceRow] = []
    deviation = equivalence_check(gan, ac, config.steps, seed, trace=trace)
    control: Optional[float] = None
    if config.negative_control:
        gan_control, ac_control = build_trainers(config, seed)
        control = equivalence_check(gan_control, ac_control, config.steps, seed, ac_seed=seed + 1)
    trace_path = write_trace(Path(out_dir) / "bridge_trace.csv", trace) if out_dir is not None else None
    logger.info(
        "Bridge run finished: %s steps, deviation %s, control deviation %s",
        config.steps,
        deviation,
        control,
        extra={"seed": seed},
    )
    return BridgeReport(steps=config.steps, deviation=deviation, control_deviation=control, trace_path=trace_path)


__all__ = [
    "AC_CRITIC_LOSSES",
    "AcTrainer",
    "AdversarialTrainer",
    "BridgeConfig",
    "BridgeReport",
    "DATASETS",
    "GanTrainer",
    "OBJECTIVES",
    "StepRecord",
    "TRACE_HEADER",
    "TraceRow",
    "build_trainers",
    "discriminator_objective",
    "equivalence_check",
    "gated_actor_update",
    "generator_gradient",
    "make_dataset",
    "max_parameter_deviation",
    "run_bridge",
    "td_critic_loss",
    "write_trace",
]
