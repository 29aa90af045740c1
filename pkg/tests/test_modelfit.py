from __future__ import annotations

import csv

import numpy as np
import pytest

from gan_actor_critic.agents import WorldModel, WorldModelConfig
from gan_actor_critic.envs import EnvConfig, make_env
from gan_actor_critic.harness import ExperimentConfig, ModelFitConfig, fit_world_model
from gan_actor_critic.harness.modelfit import MODEL_FILE, ROLLOUT_FILE, collect_random_transitions


def small_config() -> ExperimentConfig:
    return ExperimentConfig(
        env=EnvConfig(name="pendulum"),
        world_model=WorldModelConfig(hidden_sizes=(8,), batch_size=8, n_critic=1),
        modelfit=ModelFitConfig(transitions=60, holdout=20, train_steps=3, open_loop_horizon=5),
    )


def test_random_transitions_cross_episode_boundaries():
    env = make_env(EnvConfig(name="pendulum", max_episode_steps=4))
    transitions, next_episode = collect_random_transitions(env, 10, np.random.default_rng(0), base_seed=1)
    assert len(transitions) == 10
    assert next_episode == 3
    assert not any(t.synthetic for t in transitions)
    np.testing.assert_array_equal(transitions[1].s, transitions[0].s_next)


def test_modelfit_writes_rollout_and_model(tmp_path):
    config = small_config()
    report = fit_world_model(config, seed=0, out_dir=tmp_path)
    assert np.isfinite(report.one_step_mse)
    assert report.persistence_mse > 0.0
    assert report.open_loop_rms.shape == (3,)
    assert report.rollout_path == tmp_path / ROLLOUT_FILE
    assert len(list(csv.reader(report.rollout_path.open()))) == 1 + 5 * 3
    loaded = WorldModel.load(tmp_path / MODEL_FILE, config.world_model)
    assert loaded.obs_dim == 3


def test_modelfit_is_seed_deterministic(tmp_path):
    first = fit_world_model(small_config(), seed=4, out_dir=tmp_path / "a")
    second = fit_world_model(small_config(), seed=4, out_dir=tmp_path / "b")
    assert first.one_step_mse == second.one_step_mse
    assert first.rollout_path.read_bytes() == second.rollout_path.read_bytes()


@pytest.mark.slow
def test_residual_model_beats_no_change_baseline(tmp_path):
    config = ExperimentConfig(
        env=EnvConfig(name="pendulum"),
        world_model=WorldModelConfig(hidden_sizes=(64, 64), batch_size=64, n_critic=1, residual=True),
        modelfit=ModelFitConfig(transitions=4000, holdout=500, train_steps=2000, open_loop_horizon=10),
    )
    report = fit_world_model(config, seed=0, out_dir=tmp_path)
    assert report.one_step_mse < report.persistence_mse


@pytest.mark.slow
def test_trained_pendulum_model_meets_fidelity_bounds(tmp_path):
    config = ExperimentConfig(
        env=EnvConfig(name="pendulum"),
        world_model=WorldModelConfig(hidden_sizes=(64, 64), batch_size=64, n_critic=1, residual=True),
        modelfit=ModelFitConfig(transitions=10_000, holdout=1_000, train_steps=5_000, open_loop_horizon=10),
    )
    report = fit_world_model(config, seed=0, out_dir=tmp_path)
    assert report.one_step_mse <= 1e-3
    assert np.all(report.open_loop_rms <= 0.5)
