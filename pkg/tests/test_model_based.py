from __future__ import annotations

import numpy as np
import pytest

from gan_actor_critic.agents import DdpgConfig, ModelBasedAgent, ReplayBuffer, WorldModelConfig, load_policy
from gan_actor_critic.agents import model_based as model_based_module
from gan_actor_critic.core.errors import ConfigError, NonFiniteError, SpecMismatchError
from gan_actor_critic.core.models import Transition
from gan_actor_critic.envs.base import EnvSpec

SPEC = EnvSpec(
    name="toy",
    obs_dim=2,
    act_dim=1,
    act_low=(-1.0,),
    act_high=(1.0,),
    max_episode_steps=10,
    solve_threshold=0.0,
)


def make_agent(reward_source: str = "env_native", seed: int = 0, **model_overrides) -> ModelBasedAgent:
    model_values = dict(hidden_sizes=(8,), batch_size=8, n_critic=1, rollout_horizon=2)
    model_values.update(model_overrides)
    return ModelBasedAgent(
        SPEC,
        np.zeros(2),
        DdpgConfig(hidden_sizes=(8,), batch_size=8, warmup_steps=0),
        WorldModelConfig(**model_values),
        reward_source=reward_source,
        seed=seed,
    )


def filled_buffer(seed: int = 0, count: int = 32) -> ReplayBuffer:
    rng = np.random.default_rng(seed)
    buffer = ReplayBuffer(64, 2, 1, seed=seed)
    for _ in range(count):
        s = rng.normal(size=2)
        a = rng.uniform(-1.0, 1.0, size=1)
        buffer.push(Transition(s=s, a=a, r=float(-np.sum(s**2)), s_next=s + 0.1 * a[0]))
    return buffer


def all_parameters(agent: ModelBasedAgent):
    wm = agent.world_model
    nets = (agent.actor, *wm.networks, agent.critic.value, agent.critic.target_value)
    return [net.flatten() for net in nets]


@pytest.mark.parametrize("reward_source", ["env_native", "discriminator"])
def test_train_step_reports_finite_metrics(reward_source):
    agent = make_agent(reward_source)
    metrics = agent.train_step(filled_buffer())
    values = [
        metrics.critic_loss,
        metrics.actor_loss,
        metrics.model_mse,
        metrics.d_loss,
        metrics.g_loss,
        metrics.reward_critic_loss,
        metrics.reward_model_mse,
    ]
    assert np.isfinite(values).all()
    assert metrics.imagined_states == 4
    assert agent.updates == 1


def test_train_step_changes_actor():
    agent = make_agent()
    before = agent.actor.flatten()
    agent.train_step(filled_buffer())
    assert not np.array_equal(agent.actor.flatten(), before)


def test_zero_imagined_fraction_uses_real_states_only():
    agent = make_agent(imagined_fraction=0.0)
    assert agent.train_step(filled_buffer()).imagined_states == 0


def test_identical_seeds_give_identical_updates():
    results = []
    for _ in range(2):
        agent = make_agent("discriminator", seed=4)
        buffer = filled_buffer(seed=4)
        losses = [agent.train_step(buffer).actor_loss for _ in range(3)]
        results.append((losses, agent.actor.flatten()))
    assert results[0][0] == results[1][0]
    np.testing.assert_array_equal(results[0][1], results[1][1])


def test_failed_actor_update_rolls_back_every_network(monkeypatch):
    agent = make_agent()
    buffer = filled_buffer()
    before = all_parameters(agent)

    def failing_step(net, grads, state):
        raise NonFiniteError("injected", op="adam_step")

    expected_sampler = buffer.sampler_state()
    monkeypatch.setattr(model_based_module, "adam_step", failing_step)
    with pytest.raises(NonFiniteError):
        agent.train_step(buffer)
    for old, new in zip(before, all_parameters(agent)):
        np.testing.assert_array_equal(old, new)
    assert agent.world_model.generator_optimizer.step_count == 0
    assert agent.updates == 0
    assert buffer.sampler_state() == expected_sampler


def test_unknown_reward_source_is_rejected():
    with pytest.raises(ConfigError):
        make_agent("oracle")


def test_select_action_respects_bounds():
    agent = make_agent()
    obs = np.array([3.0, -2.0])
    np.testing.assert_array_equal(agent.select_action(obs), agent.select_action(obs))
    assert -1.0 <= agent.select_action(obs, explore=True)[0] <= 1.0
    assert -1.0 <= agent.random_action()[0] <= 1.0


def test_checkpoint_round_trip(tmp_path):
    agent = make_agent("discriminator")
    agent.world_model.set_target(np.array([1.0, 0.5]))
    agent.train_step(filled_buffer())
    path = agent.save(tmp_path / "mb.ckpt")
    loaded = ModelBasedAgent.load(path, SPEC, agent.actor_config, agent.model_config, reward_source="discriminator")
    for old, new in zip(all_parameters(agent), all_parameters(loaded)):
        np.testing.assert_array_equal(old, new)
    np.testing.assert_array_equal(loaded.world_model.target, [1.0, 0.5])
    obs = np.array([0.1, -0.4])
    np.testing.assert_array_equal(load_policy(path).act(obs), agent.select_action(obs))


def test_checkpoint_rejects_other_spec(tmp_path):
    path = make_agent().save(tmp_path / "mb.ckpt")
    other = EnvSpec("other", 2, 2, (-1.0, -1.0), (1.0, 1.0), 10, 0.0)
    with pytest.raises(SpecMismatchError):
        ModelBasedAgent.load(path, other)


def test_discriminator_rewards_use_each_transition_goal(mocker):
    agent = make_agent("discriminator")
    buffer = ReplayBuffer(16, 2, 1, seed=0)
    goals = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    for index in range(8):
        s = np.full(2, 0.1 * index)
        buffer.push(Transition(s=s, a=np.zeros(1), r=0.0, s_next=s + 0.05, goal=goals[index % 2]))
    spy = mocker.spy(agent.world_model, "shaped_reward_batch")
    agent.train_step(buffer)
    value_call = next(call for call in spy.call_args_list if call.kwargs.get("goals") is not None)
    used = value_call.kwargs["goals"]
    assert used.shape == (8, 2)
    assert {tuple(row) for row in used} <= {(1.0, 0.0), (0.0, 1.0)}


def test_native_reward_agent_trains_its_reward_head():
    agent = make_agent("env_native")
    before = agent.world_model.reward_head.flatten()
    metrics = agent.train_step(filled_buffer())
    assert np.isfinite(metrics.reward_model_mse)
    assert not np.array_equal(agent.world_model.reward_head.flatten(), before)
