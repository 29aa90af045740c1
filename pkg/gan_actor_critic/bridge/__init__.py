"""GAN as actor-critic: the stateless-MDP construction and its equivalence check."""

from .mdp import BlindActor, BridgeStream, StatelessMdp, StreamBatch
from .trainers import (
    AcTrainer,
    BridgeConfig,
    BridgeReport,
    GanTrainer,
    TraceRow,
    build_trainers,
    equivalence_check,
    gated_actor_update,
    generator_gradient,
    make_dataset,
    run_bridge,
    td_critic_loss,
    write_trace,
)

__all__ = [
    "AcTrainer",
    "BlindActor",
    "BridgeConfig",
    "BridgeReport",
    "BridgeStream",
    "GanTrainer",
    "StatelessMdp",
    "StreamBatch",
    "TraceRow",
    "build_trainers",
    "equivalence_check",
    "gated_actor_update",
    "generator_gradient",
    "make_dataset",
    "run_bridge",
    "td_critic_loss",
    "write_trace",
]
