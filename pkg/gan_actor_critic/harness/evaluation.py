from __future__ import annotations

import logging
from contextlib import ExitStack
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

from gan_actor_critic.agents import DeterministicPolicy, load_policy
from gan_actor_critic.core.errors import ConfigError, SpecMismatchError
from gan_actor_critic.core.seeding import derive_seed
from gan_actor_critic.envs import EnvConfig, TrajectoryWriter, make_env

logger = logging.getLogger(__name__)


@dataclass
class EvalResult:
    returns: List[float] = field(default_factory=list)
    trajectory_path: Optional[Path] = None

    @property
    def mean_return(self) -> float:
        return float(sum(self.returns) / len(self.returns)) if self.returns else float("nan")


def evaluate_policy(
    policy: DeterministicPolicy,
    env_config: EnvConfig | str,
    episodes: int,
    *,
    seed: int = 0,
    trajectory_path: Union[str, Path, None] = None,
) -> EvalResult:
    """Run the greedy policy with no noise and no learning.

    Episode ``i`` is reset with ``derive_seed(seed, "eval", i)``.
    """

    if episodes < 1:
        raise ConfigError("episodes must be at least 1", "episodes")
    env = make_env(env_config)
    if not policy.matches(env.spec):
        raise SpecMismatchError(
            f"Policy maps {policy.obs_dim}->{policy.act_dim} but {env.spec.name} needs "
            f"{env.spec.obs_dim}->{env.spec.act_dim} with matching bounds"
        )
    result = EvalResult(trajectory_path=Path(trajectory_path) if trajectory_path is not None else None)
    with ExitStack() as stack:
        writer = (
            stack.enter_context(TrajectoryWriter(result.trajectory_path, env.spec))
            if result.trajectory_path is not None
            else None
        )
        for episode in range(episodes):
            obs = env.reset(derive_seed(seed, "eval", episode))
            total = 0.0
            done = False
            step_index = 0
            while not done:
                action = policy.act(obs)
                step = env.step(action)
                if writer is not None:
                    writer.write(episode, step_index, obs, action, step.reward, step.done)
                total += step.reward
                done = step.done
                obs = step.observation
                step_index += 1
            result.returns.append(total)
            logger.debug("Eval episode %s return %.3f", episode, total, extra={"episode": episode})
    return result


def evaluate(
    checkpoint: Union[str, Path],
    env_config: EnvConfig | str,
    episodes: int = 10,
    *,
    seed: int = 0,
    trajectory_path: Union[str, Path, None] = None,
) -> EvalResult:
    """Load the actor from ``checkpoint`` and evaluate it on ``env_config``."""

    policy = load_policy(checkpoint)
    return evaluate_policy(policy, env_config, episodes, seed=seed, trajectory_path=trajectory_path)


__all__ = ["EvalResult", "evaluate", "evaluate_policy"]
