"""World-model-only training on random-policy data."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from gan_actor_critic.agents import ReplayBuffer, WorldModel, open_loop_rms, write_rollout_comparison
from gan_actor_critic.autodiff import no_grad
from gan_actor_critic.core.models import Array, Batch, Transition
from gan_actor_critic.core.seeding import derive_rng, derive_seed
from gan_actor_critic.envs import episode_seed, make_env
from gan_actor_critic.envs.base import Environment

from .config import ExperimentConfig

logger = logging.getLogger(__name__)

ROLLOUT_FILE = "rollout.csv"
MODEL_FILE = "world_model.ckpt"


@dataclass
class ModelFitReport:
    one_step_mse: float
    persistence_mse: float
    open_loop_rms: Array
    rollout_path: Path
    checkpoint_path: Path


def collect_random_transitions(
    env: Environment, count: int, rng: np.random.Generator, base_seed: int, first_episode: int = 0
) -> Tuple[List[Transition], int]:
    """``count`` transitions under uniform random actions; returns them and the next episode index."""

    spec = env.spec
    transitions: List[Transition] = []
    episode = first_episode
    obs = env.reset(episode_seed(base_seed, episode))
    while len(transitions) < count:
        action = rng.uniform(spec.low, spec.high)
        goal = env.goal_observation()
        step = env.step(action)
        transitions.append(Transition(obs, action, step.reward, step.observation, step.terminated, goal=goal))
        obs = step.observation
        if step.done:
            episode += 1
            obs = env.reset(episode_seed(base_seed, episode))
    return transitions, episode + 1


def fit_world_model(config: ExperimentConfig, seed: int, out_dir: Union[str, Path]) -> ModelFitReport:
    """Train the world model on random-policy transitions and score the fit.

    Reports the held-out one-step MSE next to the MSE of predicting no change,
    the per-dimension open-loop RMS over ``open_loop_horizon`` steps, and
    writes the predicted vs. actual rollout to ``rollout.csv``.
    """

    settings = config.modelfit
    destination = Path(out_dir)
    destination.mkdir(parents=True, exist_ok=True)
    env = make_env(config.env)
    spec = env.spec
    rng = derive_rng(seed, "exploration")
    env_seed = derive_seed(seed, "env")

    train, next_episode = collect_random_transitions(env, settings.transitions, rng, env_seed)
    holdout, _ = collect_random_transitions(env, settings.holdout, rng, env_seed, next_episode)

    env.reset(episode_seed(env_seed, 0))
    model = WorldModel(spec.obs_dim, spec.act_dim, env.goal_observation(), config.world_model, seed=seed)
    buffer = ReplayBuffer(
        max(settings.transitions, 1), spec.obs_dim, spec.act_dim, seed=derive_seed(seed, "replay")
    )
    buffer.extend(train)

    for index in range(settings.train_steps):
        metrics = model.train_step(buffer)
        if (index + 1) % 500 == 0:
            logger.info(
                "modelfit step %s mse %.6f w %.4f",
                index + 1,
                metrics.model_mse,
                metrics.wasserstein_estimate,
                extra={"seed": seed, "step": index + 1},
            )

    batch = Batch.from_transitions(holdout)
    with no_grad():
        one_step = model.supervised_model_loss(batch).item()
    persistence = float(np.mean((batch.next_states - batch.states) ** 2))

    eval_rng = derive_rng(seed, "eval")
    obs = env.reset(derive_seed(seed, "eval"))
    horizon = min(settings.open_loop_horizon, spec.max_episode_steps)
    actions = eval_rng.uniform(spec.low, spec.high, size=(horizon, spec.act_dim))
    actual = np.stack([env.step(action).observation for action in actions])
    predicted = model.open_loop_predict(obs, actions)
    rms = open_loop_rms(predicted, actual)

    rollout_path = write_rollout_comparison(destination / ROLLOUT_FILE, predicted, actual)
    checkpoint_path = model.save(destination / MODEL_FILE)
    logger.info(
        "modelfit one-step mse %.6f (persistence %.6f), open-loop rms max %.4f",
        one_step,
        persistence,
        float(np.max(rms)),
        extra={"seed": seed},
    )
    return ModelFitReport(
        one_step_mse=one_step,
        persistence_mse=persistence,
        open_loop_rms=rms,
        rollout_path=rollout_path,
        checkpoint_path=checkpoint_path,
    )


__all__ = ["MODEL_FILE", "ModelFitReport", "ROLLOUT_FILE", "collect_random_transitions", "fit_world_model"]
