"""Stateless MDP in which a blind actor plays the generator's side of a GAN."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from gan_actor_critic.autodiff import Tensor, no_grad
from gan_actor_critic.core.errors import NonFiniteError, ShapeError
from gan_actor_critic.core.models import Array
from gan_actor_critic.nn import Network

REAL_REWARD = 1.0
FAKE_REWARD = 0.0


class StatelessMdp:
    """Environment that shows either a real dataset sample or the actor's sample.

    Every call draws one coin and one dataset index from its own generator,
    whichever branch is taken, so the shown real samples never depend on what
    the actor produced.
    """

    def __init__(self, dataset: Array, p_real: float = 0.5, *, seed: int = 0) -> None:
        data = np.asarray(dataset, dtype=np.float64)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2 or data.shape[0] == 0:
            raise ShapeError("StatelessMdp needs a non-empty [N × dim] dataset", data.shape, (-1, -1))
        if not 0.0 <= p_real <= 1.0:
            raise ValueError(f"p_real must lie in [0, 1], got {p_real}")
        self.dataset = data
        self.p_real = p_real
        self.rng = np.random.default_rng(seed)

    @property
    def sample_dim(self) -> int:
        return int(self.dataset.shape[1])

    def mdp_step(
        self, actor_sample: Array, coin: Optional[bool] = None, index: Optional[int] = None
    ) -> Tuple[Array, float]:
        """Return ``(shown, reward)``: a real sample with reward 1 or the actor's with reward 0.

        ``coin`` (True shows real) and ``index`` override the internal draws.
        """

        sample = np.asarray(actor_sample, dtype=np.float64).reshape(-1)
        if sample.shape != (self.sample_dim,):
            raise ShapeError("Actor sample shape mismatch", sample.shape, (self.sample_dim,))
        if not np.all(np.isfinite(sample)):
            raise NonFiniteError("Actor sample must be finite", op="mdp_step")
        drawn_coin = bool(self.rng.random() < self.p_real)
        drawn_index = int(self.rng.integers(0, self.dataset.shape[0]))
        show_real = drawn_coin if coin is None else bool(coin)
        chosen = drawn_index if index is None else int(index)
        if show_real:
            return self.dataset[chosen].copy(), REAL_REWARD
        return sample.copy(), FAKE_REWARD

    def step_batch(
        self,
        actor_samples: Array,
        coins: Optional[Array] = None,
        indices: Optional[Array] = None,
    ) -> Tuple[Array, Array]:
        shown: List[Array] = []
        rewards: List[float] = []
        for row, sample in enumerate(np.asarray(actor_samples, dtype=np.float64)):
            image, reward = self.mdp_step(
                sample,
                None if coins is None else bool(coins[row]),
                None if indices is None else int(indices[row]),
            )
            shown.append(image)
            rewards.append(reward)
        return np.stack(shown), np.array(rewards)


class BlindActor:
    """Generator driven by standard-normal noise only; it never sees an environment state."""

    def __init__(self, generator: Network, noise_dim: Optional[int] = None) -> None:
        if noise_dim is not None and generator.in_dim != noise_dim:
            raise ShapeError("Generator input must equal the noise dimension", (generator.in_dim,), (noise_dim,))
        self.generator = generator
        self.noise_dim = generator.in_dim

    def sample_noise(self, rng: np.random.Generator, count: int) -> Array:
        return rng.standard_normal((count, self.noise_dim))

    def act(self, z: Array) -> Array:
        with no_grad():
            return self.generator(Tensor(np.asarray(z, dtype=np.float64).reshape(-1, self.noise_dim))).data


@dataclass
class StreamBatch:
    """Everything one paired update consumes: coins, real samples, noise and GP mixing weights."""

    position: int
    coins: Array
    indices: Array
    real: Array
    noise: Array
    epsilon: Array


class BridgeStream:
    """Seeded source of coin/sample/noise batches.

    Two streams built from the same dataset, sizes and seed yield identical
    batches in identical order.
    """

    def __init__(
        self,
        dataset: Array,
        *,
        batch_size: int,
        noise_dim: int,
        p_real: float = 0.5,
        seed: int = 0,
    ) -> None:
        data = np.asarray(dataset, dtype=np.float64)
        self.dataset = data.reshape(-1, 1) if data.ndim == 1 else data
        if self.dataset.shape[0] == 0:
            raise ShapeError("BridgeStream needs a non-empty dataset", self.dataset.shape, (-1, -1))
        self.batch_size = batch_size
        self.noise_dim = noise_dim
        self.p_real = p_real
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.position = 0

    def draw(self) -> StreamBatch:
        coins = self.rng.random(self.batch_size) < self.p_real
        indices = self.rng.integers(0, self.dataset.shape[0], size=self.batch_size)
        noise = self.rng.standard_normal((self.batch_size, self.noise_dim))
        epsilon = self.rng.uniform(0.0, 1.0, size=(self.batch_size, 1))
        batch = StreamBatch(
            position=self.position,
            coins=coins,
            indices=indices,
            real=self.dataset[indices].copy(),
            noise=noise,
            epsilon=epsilon,
        )
        self.position += 1
        return batch


__all__ = [
    "BlindActor",
    "BridgeStream",
    "FAKE_REWARD",
    "REAL_REWARD",
    "StatelessMdp",
    "StreamBatch",
]
