"""Fixed-capacity uniform experience replay."""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from gan_actor_critic.core.errors import BufferUnderfilledError, CheckpointError, ShapeError
from gan_actor_critic.core.models import Array, Batch, Transition
from gan_actor_critic.nn.checkpoint import load_container, save_container

logger = logging.getLogger(__name__)

_CHUNK_BITS = 16
_CHUNKS = 8


@dataclass
class ReplayConfig:
    capacity: int = 1_000_000
    batch_size: int = 64
    min_sample_size: int = 1


class ReplayBuffer:
    """FIFO ring of transitions sampled uniformly with replacement.

    Storage is allocated once at construction; after ``capacity`` pushes the
    oldest entry is overwritten. Buffers that feed the world model's
    supervised loss refuse synthetic (model-generated) transitions unless
    ``accept_synthetic`` is set.
    """

    def __init__(
        self,
        capacity: int,
        obs_dim: int,
        act_dim: int,
        *,
        seed: int = 0,
        min_sample_size: int = 1,
        accept_synthetic: bool = False,
    ) -> None:
        if capacity <= 0 or obs_dim <= 0 or act_dim <= 0:
            raise ValueError("capacity, obs_dim and act_dim must be positive")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.min_sample_size = max(1, min_sample_size)
        self.accept_synthetic = accept_synthetic
        self.rng = np.random.default_rng(seed)
        self.size = 0
        self.write_cursor = 0
        self._states = np.zeros((capacity, obs_dim))
        self._actions = np.zeros((capacity, act_dim))
        self._rewards = np.zeros((capacity, 1))
        self._next_states = np.zeros((capacity, obs_dim))
        self._dones = np.zeros((capacity, 1))
        self._goals = np.full((capacity, obs_dim), np.nan)
        self._has_goals = False

    def __len__(self) -> int:
        return self.size

    def push(self, transition: Transition) -> None:
        if transition.synthetic and not self.accept_synthetic:
            raise ValueError("Synthetic transitions cannot enter a real-data replay buffer")
        s = np.asarray(transition.s, dtype=np.float64).reshape(-1)
        a = np.asarray(transition.a, dtype=np.float64).reshape(-1)
        s_next = np.asarray(transition.s_next, dtype=np.float64).reshape(-1)
        if s.shape != (self.obs_dim,) or s_next.shape != (self.obs_dim,):
            raise ShapeError("Transition state shape mismatch", s.shape, (self.obs_dim,))
        if a.shape != (self.act_dim,):
            raise ShapeError("Transition action shape mismatch", a.shape, (self.act_dim,))
        if not np.isfinite(transition.r):
            raise ValueError(f"Transition reward must be finite, got {transition.r}")
        goal = None
        if transition.goal is not None:
            goal = np.asarray(transition.goal, dtype=np.float64).reshape(-1)
            if goal.shape != (self.obs_dim,):
                raise ShapeError("Transition goal shape mismatch", goal.shape, (self.obs_dim,))

        cursor = self.write_cursor
        self._states[cursor] = s
        self._actions[cursor] = a
        self._rewards[cursor, 0] = transition.r
        self._next_states[cursor] = s_next
        self._dones[cursor, 0] = float(transition.done)
        if goal is None:
            self._goals[cursor] = np.nan
        else:
            self._goals[cursor] = goal
            self._has_goals = True
        self.write_cursor = (cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def extend(self, transitions: List[Transition]) -> None:
        for transition in transitions:
            self.push(transition)

    def sample(self, batch_size: int) -> Batch:
        if batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.size < self.min_sample_size:
            raise BufferUnderfilledError(required=self.min_sample_size, available=self.size)
        indices = self.rng.integers(0, self.size, size=batch_size)
        return self._gather(indices)

    def _gather(self, indices: Array) -> Batch:
        return Batch(
            states=self._states[indices].copy(),
            actions=self._actions[indices].copy(),
            rewards=self._rewards[indices].copy(),
            next_states=self._next_states[indices].copy(),
            dones=self._dones[indices].copy(),
            goals=self._goals[indices].copy() if self._has_goals else None,
        )

    def transition(self, index: int) -> Transition:
        """Stored transition at ring position ``index`` (0 <= index < size)."""

        if not 0 <= index < self.size:
            raise IndexError(f"Index {index} outside the {self.size} stored transitions")
        return Transition(
            s=self._states[index].copy(),
            a=self._actions[index].copy(),
            r=float(self._rewards[index, 0]),
            s_next=self._next_states[index].copy(),
            done=bool(self._dones[index, 0]),
            goal=self._goals[index].copy() if np.all(np.isfinite(self._goals[index])) else None,
        )

    def states(self) -> Array:
        return self._states[: self.size].copy()

    def sampler_state(self) -> Dict[str, Any]:
        """Copy of the sampler's bit-generator state, for rolling back a failed update."""

        return copy.deepcopy(self.rng.bit_generator.state)

    def restore_sampler_state(self, state: Dict[str, Any]) -> None:
        self.rng.bit_generator.state = copy.deepcopy(state)

    def save(self, path: Union[str, Path]) -> Path:
        """Snapshot contents, cursor and sampler state in the checkpoint container format."""

        entries: Dict[str, Array] = {
            "meta": np.array(
                [self.capacity, self.obs_dim, self.act_dim, self.size, self.write_cursor, self.min_sample_size],
                dtype=np.float64,
            ),
            "rng": _encode_rng(self.rng),
            "states": self._states[: self.size],
            "actions": self._actions[: self.size],
            "rewards": self._rewards[: self.size],
            "next_states": self._next_states[: self.size],
            "dones": self._dones[: self.size],
            "goals": self._goals[: self.size],
        }
        logger.debug("Saving replay snapshot with %s transitions to %s", self.size, path)
        return save_container(path, entries)

    @classmethod
    def load(cls, path: Union[str, Path], *, accept_synthetic: bool = False) -> "ReplayBuffer":
        entries = load_container(path)
        try:
            capacity, obs_dim, act_dim, size, cursor, min_sample_size = (int(v) for v in entries["meta"])
            buffer = cls(
                capacity,
                obs_dim,
                act_dim,
                min_sample_size=min_sample_size,
                accept_synthetic=accept_synthetic,
            )
            if size:
                buffer._states[:size] = entries["states"]
                buffer._actions[:size] = entries["actions"]
                buffer._rewards[:size] = entries["rewards"]
                buffer._next_states[:size] = entries["next_states"]
                buffer._dones[:size] = entries["dones"]
                if "goals" in entries:
                    buffer._goals[:size] = entries["goals"]
                    buffer._has_goals = bool(np.any(np.isfinite(entries["goals"])))
            buffer.rng = _decode_rng(entries["rng"])
        except (KeyError, ValueError) as exc:
            raise CheckpointError(f"Malformed replay snapshot: {exc}") from exc
        buffer.size = size
        buffer.write_cursor = cursor
        return buffer


def _split_int(value: int) -> List[float]:
    mask = (1 << _CHUNK_BITS) - 1
    return [float((value >> (_CHUNK_BITS * i)) & mask) for i in range(_CHUNKS)]


def _join_int(chunks: Array) -> int:
    return sum(int(chunk) << (_CHUNK_BITS * i) for i, chunk in enumerate(chunks))


def _encode_rng(rng: np.random.Generator) -> Array:
    state = rng.bit_generator.state
    if state["bit_generator"] != "PCG64":
        raise CheckpointError(f"Unsupported bit generator {state['bit_generator']}")
    inner = state["state"]
    return np.array(
        _split_int(inner["state"])
        + _split_int(inner["inc"])
        + [float(state["has_uint32"]), float(state["uinteger"])],
        dtype=np.float64,
    )


def _decode_rng(encoded: Array) -> np.random.Generator:
    bit_generator = np.random.PCG64()
    bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {
            "state": _join_int(encoded[:_CHUNKS]),
            "inc": _join_int(encoded[_CHUNKS : 2 * _CHUNKS]),
        },
        "has_uint32": int(encoded[2 * _CHUNKS]),
        "uinteger": int(encoded[2 * _CHUNKS + 1]),
    }
    return np.random.Generator(bit_generator)


__all__ = ["ReplayBuffer", "ReplayConfig"]
