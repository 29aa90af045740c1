"""Learning agents: replay, the model-free baseline and the model-based actor-critic."""

from .ddpg import DdpgAgent, DdpgConfig, StepMetrics
from .model_based import REWARD_SOURCES, ModelBasedAgent, ModelBasedMetrics
from .policy import DeterministicPolicy, load_policy, save_policy
from .replay import ReplayBuffer, ReplayConfig
from .world_model import (
    ModelBasedCritic,
    RolloutResult,
    WorldModel,
    WorldModelConfig,
    WorldModelMetrics,
    imagined_rollout,
    model_actor_loss,
    open_loop_rms,
    write_rollout_comparison,
)

__all__ = [
    "DdpgAgent",
    "DdpgConfig",
    "DeterministicPolicy",
    "ModelBasedAgent",
    "ModelBasedCritic",
    "ModelBasedMetrics",
    "REWARD_SOURCES",
    "ReplayBuffer",
    "ReplayConfig",
    "RolloutResult",
    "StepMetrics",
    "WorldModel",
    "WorldModelConfig",
    "WorldModelMetrics",
    "imagined_rollout",
    "load_policy",
    "model_actor_loss",
    "open_loop_rms",
    "save_policy",
    "write_rollout_comparison",
]
