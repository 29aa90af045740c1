from __future__ import annotations

import math

import numpy as np
import pytest

from gan_actor_critic.agents import DdpgAgent, DdpgConfig, ReplayBuffer, ReplayConfig, WorldModelConfig
from gan_actor_critic.core.errors import NonFiniteError
from gan_actor_critic.core.models import METRICS_HEADER
from gan_actor_critic.envs import EnvConfig
from gan_actor_critic.harness import (
    EXIT_ERROR,
    EXIT_SOLVED,
    EXIT_UNSOLVED,
    ExperimentConfig,
    RunConfig,
    RunManifest,
    compare,
    read_metrics,
    run,
)


def tiny_config(variant: str = "model_free_ddpg", **run_overrides) -> ExperimentConfig:
    run_values = dict(variant=variant, episodes=3, seeds=(0,), solve_min_episodes=1)
    run_values.update(run_overrides)
    return ExperimentConfig(
        run=RunConfig(**run_values),
        env=EnvConfig(name="pendulum", max_episode_steps=5),
        replay=ReplayConfig(capacity=1000, batch_size=4),
        ddpg=DdpgConfig(hidden_sizes=(8,), batch_size=4, warmup_steps=3),
        world_model=WorldModelConfig(hidden_sizes=(8,), batch_size=4, n_critic=1, rollout_horizon=2),
    )


def test_zero_episode_budget_writes_header_only(tmp_path):
    result = run(tiny_config(episodes=0), tmp_path)
    lines = result.metrics_path.read_text().splitlines()
    assert lines == [",".join(METRICS_HEADER)]
    assert result.seeds[0].episodes == 0
    assert result.exit_code == EXIT_UNSOLVED


def test_rows_count_episodes_and_steps(tmp_path):
    result = run(tiny_config(), tmp_path)
    rows = read_metrics(result.metrics_path)
    assert [row.episode for row in rows] == [1, 2, 3]
    assert [row.env_steps for row in rows] == [5, 10, 15]
    assert rows[1].avg_return_100 == pytest.approx((rows[0].episode_return + rows[1].episode_return) / 2)
    assert all(math.isfinite(row.critic_loss) for row in rows)
    assert math.isnan(rows[0].model_mse)


def test_rows_without_updates_carry_nan_losses(tmp_path):
    config = tiny_config(episodes=2)
    config.ddpg.warmup_steps = 1000
    rows = read_metrics(run(config, tmp_path).metrics_path)
    assert all(math.isnan(row.critic_loss) and math.isnan(row.actor_loss) for row in rows)


@pytest.mark.parametrize("variant", ["model_free_ddpg", "model_based_ac"])
def test_deterministic_runs_are_byte_identical(tmp_path, variant):
    first = run(tiny_config(variant), tmp_path / "a", deterministic=True)
    second = run(tiny_config(variant), tmp_path / "b", deterministic=True)
    assert first.metrics_path.read_bytes() == second.metrics_path.read_bytes()
    rows = read_metrics(first.metrics_path)
    assert all(row.wall_ms == 0.0 for row in rows)


def test_model_based_rows_report_model_loss(tmp_path):
    config = tiny_config("model_based_ac", reward_source="discriminator")
    rows = read_metrics(run(config, tmp_path).metrics_path)
    assert all(math.isfinite(row.model_mse) for row in rows[1:])


def test_manifest_and_checkpoint_are_written(tmp_path):
    result = run(tiny_config(seeds=(3, 4), episodes=1), tmp_path)
    manifest = RunManifest.read(tmp_path)
    assert manifest.seeds == [3, 4]
    assert manifest.solve_threshold == -250.0
    assert (manifest.obs_dim, manifest.act_dim) == (3, 1)
    assert [r.checkpoint for r in result.seeds] == [tmp_path / "seed_3.ckpt", tmp_path / "seed_4.ckpt"]
    assert {row.seed for row in read_metrics(result.metrics_path)} == {3, 4}


def test_solved_run_exits_zero_and_can_stop_early(tmp_path):
    config = tiny_config(stop_on_solve=True)
    config.env.solve_threshold = -1e9
    result = run(config, tmp_path)
    assert result.seeds[0].episodes_to_solve == 1
    assert result.seeds[0].episodes == 1
    assert result.exit_code == EXIT_SOLVED


def test_failed_update_aborts_run_and_keeps_written_rows(tmp_path, monkeypatch):
    config = tiny_config()
    config.ddpg.warmup_steps = 0
    calls = []

    def failing_train_step(self, buffer):
        calls.append(1)
        if len(calls) > 5:
            raise NonFiniteError("injected", op="train_step")

    monkeypatch.setattr(DdpgAgent, "train_step", failing_train_step)
    result = run(config, tmp_path)
    assert result.exit_code == EXIT_ERROR
    assert result.error is not None
    assert result.error.episode == 2
    assert [row.episode for row in read_metrics(result.metrics_path)] == [1]


def test_twenty_env_mode_runs_one_update_per_transition(tmp_path, mocker):
    config = tiny_config(n_envs=20, episodes=1)
    config.env.max_episode_steps = 3
    config.ddpg.warmup_steps = 0
    spy = mocker.spy(DdpgAgent, "train_step")
    result = run(config, tmp_path)
    assert spy.call_count == 60
    (row,) = read_metrics(result.metrics_path)
    assert row.env_steps == 60


def test_time_limit_is_not_stored_as_terminal(tmp_path, mocker):
    spy = mocker.spy(ReplayBuffer, "push")
    run(tiny_config(episodes=1), tmp_path / "unmasked")
    assert not any(call.args[1].done for call in spy.call_args_list)

    spy.reset_mock()
    config = tiny_config(episodes=1)
    config.ddpg.mask_time_limit = True
    run(config, tmp_path / "masked")
    dones = [call.args[1].done for call in spy.call_args_list]
    assert dones == [False, False, False, False, True]


def test_different_seeds_give_different_returns(tmp_path):
    rows = read_metrics(run(tiny_config(seeds=(0, 1), episodes=1), tmp_path).metrics_path)
    returns = {row.seed: row.episode_return for row in rows}
    assert not np.isclose(returns[0], returns[1])


def test_solve_waits_for_the_minimum_episode_count(tmp_path):
    config = tiny_config(episodes=4, solve_min_episodes=3)
    config.env.solve_threshold = -1e9
    result = run(config, tmp_path)
    assert result.seeds[0].episodes_to_solve == 3
    assert RunManifest.read(tmp_path).solve_min_episodes == 3


def test_each_env_transition_stores_its_own_goal(tmp_path, mocker):
    config = tiny_config(n_envs=3, episodes=1)
    config.env = EnvConfig(name="reacher", max_episode_steps=2)
    spy = mocker.spy(ReplayBuffer, "push")
    run(config, tmp_path)
    goals = [call.args[1].goal for call in spy.call_args_list]
    assert len(goals) == 6
    assert all(goal is not None and goal.shape == (10,) for goal in goals)
    targets = {tuple(np.round(goal[6:8], 12)) for goal in goals}
    assert len(targets) == 3
    for call in spy.call_args_list:
        transition = call.args[1]
        np.testing.assert_array_equal(transition.s[6:8], transition.goal[6:8])


def pendulum_config(variant: str, **run_overrides) -> ExperimentConfig:
    run_values = dict(variant=variant, episodes=300, seeds=(0, 1, 2), stop_on_solve=True, save_checkpoints=False)
    run_values.update(run_overrides)
    return ExperimentConfig(run=RunConfig(**run_values), env=EnvConfig(name="pendulum"))


@pytest.mark.slow
def test_ddpg_solves_pendulum_on_most_seeds(tmp_path):
    result = run(pendulum_config("model_free_ddpg"), tmp_path)
    assert sum(result.solved.values()) >= 2


@pytest.mark.slow
def test_model_based_agent_solves_pendulum_in_fewer_episodes(tmp_path):
    run(pendulum_config("model_based_ac"), tmp_path / "model_based")
    run(pendulum_config("model_free_ddpg"), tmp_path / "model_free")
    report = compare(tmp_path / "model_based", tmp_path / "model_free")
    assert report.run_a.median < report.run_b.median
    assert report.median_ratio < 1.0
