"""Networks, Adam optimisation, target-network updates and checkpoints."""

from .checkpoint import (
    load_container,
    load_network,
    network_entries,
    network_from_entries,
    save_container,
    save_network,
)
from .network import Layer, Network, forward, init_bound, mlp_new
from .optim import AdamConfig, AdamState, TrainingSnapshot, adam_step, hard_update, soft_update

__all__ = [
    "AdamConfig",
    "AdamState",
    "Layer",
    "Network",
    "TrainingSnapshot",
    "adam_step",
    "forward",
    "hard_update",
    "init_bound",
    "load_container",
    "load_network",
    "mlp_new",
    "network_entries",
    "network_from_entries",
    "save_container",
    "save_network",
    "soft_update",
]
