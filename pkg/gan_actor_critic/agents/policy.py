from __future__ import annotations

from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from gan_actor_critic.autodiff import Tensor, functional as F, no_grad
from gan_actor_critic.core.errors import CheckpointError, NonFiniteError, ShapeError
from gan_actor_critic.core.models import Array
from gan_actor_critic.envs.base import EnvSpec
from gan_actor_critic.nn import Network, network_entries, network_from_entries
from gan_actor_critic.nn.checkpoint import load_container, save_container


class DeterministicPolicy:
    """Actor network whose tanh output is rescaled to the action bounds.

    ``a = mid + half_range · actor(s)`` with ``mid = (high + low) / 2`` and
    ``half_range = (high − low) / 2``.
    """

    def __init__(self, actor: Network, low: Array, high: Array) -> None:
        self.actor = actor
        self.low = np.asarray(low, dtype=np.float64)
        self.high = np.asarray(high, dtype=np.float64)
        if self.low.shape != (actor.out_dim,) or self.high.shape != (actor.out_dim,):
            raise ShapeError("Action bounds disagree with the actor output", self.low.shape, (actor.out_dim,))
        self._mid = (self.high + self.low) / 2.0
        self._half_range = (self.high - self.low) / 2.0

    @classmethod
    def for_spec(cls, actor: Network, spec: EnvSpec) -> "DeterministicPolicy":
        return cls(actor, spec.low, spec.high)

    @property
    def obs_dim(self) -> int:
        return self.actor.in_dim

    @property
    def act_dim(self) -> int:
        return self.actor.out_dim

    def actions(self, states: Tensor, actor: Network | None = None) -> Tensor:
        """Differentiable batch of actions for ``states`` (``[B × obs]``)."""

        net = actor if actor is not None else self.actor
        return F.add(F.mul(net(states), self._half_range), self._mid)

    def act(self, obs: Array) -> Array:
        """Deterministic action for a single observation, clamped to the bounds."""

        batch = np.asarray(obs, dtype=np.float64).reshape(1, -1)
        if batch.shape[1] != self.obs_dim:
            raise ShapeError("Observation shape mismatch", batch.shape[1:], (self.obs_dim,))
        try:
            with no_grad():
                action = self.actions(Tensor(batch)).data[0]
        except NonFiniteError as exc:
            raise NonFiniteError(f"Actor output diverged: {exc}", op="policy") from exc
        return np.clip(action, self.low, self.high)

    def explore(self, obs: Array, rng: np.random.Generator, noise_scale: float) -> Array:
        """Deterministic action plus Gaussian noise of ``noise_scale``, re-clamped.

        ``noise_scale == 0`` draws nothing from ``rng``.
        """

        action = self.act(obs)
        if noise_scale > 0.0:
            action = np.clip(action + rng.normal(0.0, noise_scale, size=action.shape), self.low, self.high)
        return action

    def uniform(self, rng: np.random.Generator) -> Array:
        return rng.uniform(self.low, self.high)

    def matches(self, spec: EnvSpec) -> bool:
        return (
            self.obs_dim == spec.obs_dim
            and self.act_dim == spec.act_dim
            and np.array_equal(self.low, spec.low)
            and np.array_equal(self.high, spec.high)
        )

    def entries(self, prefix: str = "actor.") -> Dict[str, Array]:
        entries = network_entries(self.actor, prefix)
        entries["policy.bounds"] = np.stack([self.low, self.high])
        return entries

    @classmethod
    def from_entries(cls, entries: Mapping[str, Array], prefix: str = "actor.") -> "DeterministicPolicy":
        bounds = entries.get("policy.bounds")
        if bounds is None or bounds.ndim != 2 or bounds.shape[0] != 2:
            raise CheckpointError("Checkpoint has no policy.bounds entry")
        return cls(network_from_entries(entries, prefix), bounds[0], bounds[1])


def save_policy(path: Union[str, Path], policy: DeterministicPolicy, extra: Mapping[str, Array] | None = None) -> Path:
    entries = policy.entries()
    entries.update(extra or {})
    return save_container(path, entries)


def load_policy(path: Union[str, Path]) -> DeterministicPolicy:
    return DeterministicPolicy.from_entries(load_container(path))


__all__ = ["DeterministicPolicy", "load_policy", "save_policy"]
