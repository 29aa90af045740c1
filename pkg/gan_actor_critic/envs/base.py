from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from gan_actor_critic.core.errors import EpisodeDoneError, NonFiniteError, ShapeError
from gan_actor_critic.core.models import Array, StepResult


@dataclass(frozen=True)
class EnvSpec:
    """Observation/action contract of an environment."""

    name: str
    obs_dim: int
    act_dim: int
    act_low: Tuple[float, ...]
    act_high: Tuple[float, ...]
    max_episode_steps: int
    solve_threshold: float
    dt: float = 0.02

    def __post_init__(self) -> None:
        if self.obs_dim <= 0 or self.act_dim <= 0 or self.max_episode_steps <= 0:
            raise ValueError(f"EnvSpec dimensions must be positive: {self}")
        if len(self.act_low) != self.act_dim or len(self.act_high) != self.act_dim:
            raise ShapeError("Action bounds disagree with act_dim", (len(self.act_low),), (self.act_dim,))
        if any(low >= high for low, high in zip(self.act_low, self.act_high)):
            raise ValueError("act_low must be strictly below act_high")

    @property
    def low(self) -> Array:
        return np.array(self.act_low, dtype=np.float64)

    @property
    def high(self) -> Array:
        return np.array(self.act_high, dtype=np.float64)

    def matches(self, other: "EnvSpec") -> bool:
        return (
            self.obs_dim == other.obs_dim
            and self.act_dim == other.act_dim
            and self.act_low == other.act_low
            and self.act_high == other.act_high
        )


@dataclass
class EnvState:
    """Physical coordinates of an episode in progress.

    ``theta`` holds joint angles in rad wrapped to (-π, π], ``omega`` angular
    velocities in rad/s clamped to the environment's limit, ``target`` the goal
    position in the arm plane.
    """

    theta: Array
    omega: Array
    target: Array
    step_index: int = 0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0), repr=False)


def wrap_angle(theta: Array) -> Array:
    """Map angles into (-π, π]; values already inside are returned bit-unchanged."""

    outside = (theta > math.pi) | (theta <= -math.pi)
    if not np.any(outside):
        return theta
    wrapped = math.pi - np.mod(math.pi - theta, 2.0 * math.pi)
    return np.where(outside, wrapped, theta)


class Environment(ABC):
    """Deterministic, time-limited control task.

    Subclasses implement the physics in :meth:`_integrate`, the reward in
    :meth:`reward` and the observation encoding in :meth:`observation`.
    """

    spec: EnvSpec

    def __init__(self) -> None:
        self.state: Optional[EnvState] = None
        self._done = False

    @abstractmethod
    def _initial_state(self, rng: np.random.Generator) -> EnvState:
        """Sample the initial physical state of an episode."""

    @abstractmethod
    def _integrate(self, action: Array) -> None:
        """Advance ``self.state`` by one semi-implicit Euler step under ``action``."""

    @abstractmethod
    def reward(self, state: EnvState, action: Array) -> float:
        """Reward earned on arriving in ``state``."""

    @abstractmethod
    def observation(self) -> Array:
        """Encode the current state as an ``obs_dim`` vector."""

    @abstractmethod
    def goal_observation(self) -> Array:
        """Observation of the state the task asks the agent to reach."""

    def reset(self, seed: int) -> Array:
        rng = np.random.default_rng(seed)
        self.state = self._initial_state(rng)
        self.state.rng = rng
        self._done = False
        return self.observation()

    def step(self, action: Array) -> StepResult:
        if self.state is None:
            raise EpisodeDoneError("Environment must be reset before stepping")
        if self._done:
            raise EpisodeDoneError(
                f"Episode finished after {self.state.step_index} steps; reset before stepping"
            )
        raw = np.asarray(action, dtype=np.float64).reshape(-1)
        if raw.shape != (self.spec.act_dim,):
            raise ShapeError("Action shape mismatch", raw.shape, (self.spec.act_dim,))
        if not np.all(np.isfinite(raw)):
            raise NonFiniteError("Action contains non-finite values", op=f"{self.spec.name}.step")

        clipped = np.clip(raw, self.spec.low, self.spec.high)
        self._integrate(clipped)
        self.state.step_index += 1
        self._done = self.state.step_index >= self.spec.max_episode_steps
        return StepResult(
            observation=self.observation(),
            reward=self.reward(self.state, clipped),
            done=self._done,
        )


__all__ = ["EnvSpec", "EnvState", "Environment", "wrap_angle"]
