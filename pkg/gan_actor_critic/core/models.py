from __future__ import annotations

from dataclasses import astuple, dataclass, fields
from typing import List, Optional

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]


@dataclass
class Transition:
    """One experience record ``(s, a, r, s', done)``.

    ``done`` marks a true terminal state (bootstrapping stops there).
    ``synthetic`` is set on transitions produced by the learned world model;
    such records are never admitted to a buffer that feeds the generator's
    supervised loss. ``goal`` is the goal observation the acting environment
    was pursuing when the step was taken.
    """

    s: Array
    a: Array
    r: float
    s_next: Array
    done: bool = False
    synthetic: bool = False
    goal: Optional[Array] = None


@dataclass
class Batch:
    """Column-stacked sample of transitions, every field shaped ``[B × dim]``.

    ``goals`` is ``None`` when no row carries a goal; otherwise rows without
    one are NaN.
    """

    states: Array
    actions: Array
    rewards: Array
    next_states: Array
    dones: Array
    goals: Optional[Array] = None

    def __len__(self) -> int:
        return int(self.states.shape[0])

    @classmethod
    def from_transitions(cls, transitions: List[Transition]) -> "Batch":
        goals: Optional[Array] = None
        if any(t.goal is not None for t in transitions):
            goals = np.stack(
                [
                    np.full(len(t.s), np.nan) if t.goal is None else np.asarray(t.goal, dtype=np.float64)
                    for t in transitions
                ]
            )
        return cls(
            states=np.stack([t.s for t in transitions]).astype(np.float64),
            actions=np.stack([t.a for t in transitions]).astype(np.float64),
            rewards=np.array([[t.r] for t in transitions], dtype=np.float64),
            next_states=np.stack([t.s_next for t in transitions]).astype(np.float64),
            dones=np.array([[float(t.done)] for t in transitions], dtype=np.float64),
            goals=goals,
        )


@dataclass
class StepResult:
    """Outcome of one environment step.

    ``done`` is the time-limit flag; ``terminated`` flags a failure state, which
    the built-in tasks never produce. ``reset_observation`` is filled by vector
    environments that reset an instance automatically after ``done``.
    """

    observation: Array
    reward: float
    done: bool
    terminated: bool = False
    reset_observation: Optional[Array] = None


@dataclass
class MetricsRow:
    """Per-episode training record written to the metrics CSV."""

    seed: int
    episode: int
    env_steps: int
    episode_return: float
    avg_return_100: float
    critic_loss: float = float("nan")
    actor_loss: float = float("nan")
    model_mse: float = float("nan")
    wasserstein_estimate: float = float("nan")
    wall_ms: float = 0.0

    @classmethod
    def header(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> List[str]:
        cells: List[str] = []
        for value in astuple(self):
            if isinstance(value, float):
                cells.append(repr(value) if np.isfinite(value) else "nan")
            else:
                cells.append(str(value))
        return cells


METRICS_HEADER = MetricsRow.header()

__all__ = ["Array", "Batch", "METRICS_HEADER", "MetricsRow", "StepResult", "Transition"]
