"""Seed-derivation tree.

Every random stream of a run is derived from one global seed::

    root seed
     ├── env/<i>            per-environment reset seeds (i = env index)
     ├── actor_init, critic_init, value_init, generator_init, discriminator_init
     ├── reward_critic_init, reward_head_init
     ├── exploration        action noise and warm-up random actions
     ├── replay             replay-buffer sampler
     ├── model              world-model interpolation and rollout-start draws
     ├── eval/<i>           evaluation episode seeds
     └── bridge             stateless-MDP coin, dataset and noise streams

A stream seed is ``SeedSequence([root, stream_id, index]).generate_state(1)[0]``,
so adding streams never perturbs existing ones.
"""

from __future__ import annotations

from typing import Dict

import numpy as np

STREAM_IDS: Dict[str, int] = {
    "env": 1,
    "actor_init": 2,
    "critic_init": 3,
    "value_init": 4,
    "generator_init": 5,
    "discriminator_init": 6,
    "exploration": 7,
    "replay": 8,
    "model": 9,
    "eval": 10,
    "bridge": 11,
    "reward_critic_init": 12,
    "reward_head_init": 13,
}


def derive_seed(root: int, stream: str, index: int = 0) -> int:
    if stream not in STREAM_IDS:
        raise KeyError(f"Unknown seed stream {stream!r}")
    sequence = np.random.SeedSequence([int(root), STREAM_IDS[stream], int(index)])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def derive_rng(root: int, stream: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, stream, index))


__all__ = ["STREAM_IDS", "derive_rng", "derive_seed"]
