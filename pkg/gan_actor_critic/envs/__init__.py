"""Deterministic physics tasks and the environment contract the agents consume."""

from .base import EnvSpec, EnvState, Environment, wrap_angle
from .pendulum import Pendulum, PendulumConfig
from .reacher import Reacher2D, ReacherConfig, fingertip, reacher_reward
from .registry import EnvConfig, make_env
from .trajectory import TrajectoryWriter
from .vector import VectorEnv, episode_seed, vector_env_step

__all__ = [
    "EnvConfig",
    "EnvSpec",
    "EnvState",
    "Environment",
    "Pendulum",
    "PendulumConfig",
    "Reacher2D",
    "ReacherConfig",
    "TrajectoryWriter",
    "VectorEnv",
    "episode_seed",
    "fingertip",
    "make_env",
    "reacher_reward",
    "vector_env_step",
    "wrap_angle",
]
