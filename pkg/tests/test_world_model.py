from __future__ import annotations

import csv

import numpy as np
import pytest

from gan_actor_critic.agents import (
    DeterministicPolicy,
    ModelBasedCritic,
    ReplayBuffer,
    WorldModel,
    WorldModelConfig,
    imagined_rollout,
    model_actor_loss,
    open_loop_rms,
    write_rollout_comparison,
)
from gan_actor_critic.autodiff import ComputationTape, Tensor, finite_diff_check
from gan_actor_critic.autodiff import functional as F
from gan_actor_critic.core.errors import ConfigError, NonFiniteError, ShapeError
from gan_actor_critic.core.models import Batch, Transition
from gan_actor_critic.nn import AdamConfig, AdamState, Layer, Network, adam_step, mlp_new


def linear(weights, bias, output: str = "identity") -> Network:
    return Network(
        [
            Layer(
                Tensor(np.asarray(weights, dtype=np.float64), requires_grad=True),
                Tensor(np.asarray(bias, dtype=np.float64), requires_grad=True),
            )
        ],
        output_activation=output,
    )


def model(
    obs_dim: int = 2,
    act_dim: int = 1,
    *,
    discriminator: Network | None = None,
    generator: Network | None = None,
    reward_critic: Network | None = None,
    reward_head: Network | None = None,
    **overrides,
):
    values = dict(hidden_sizes=(8,), hidden_activation="tanh", conditional=False, batch_size=8, n_critic=2)
    values.update(overrides)
    return WorldModel(
        obs_dim,
        act_dim,
        config=WorldModelConfig(**values),
        seed=0,
        generator=generator,
        discriminator=discriminator,
        reward_critic=reward_critic,
        reward_head=reward_head,
    )


def random_batch(rows: int = 6, obs_dim: int = 2, act_dim: int = 1, seed: int = 0) -> Batch:
    rng = np.random.default_rng(seed)
    return Batch(
        states=rng.normal(size=(rows, obs_dim)),
        actions=rng.uniform(-1.0, 1.0, size=(rows, act_dim)),
        rewards=rng.normal(size=(rows, 1)),
        next_states=rng.normal(size=(rows, obs_dim)),
        dones=np.zeros((rows, 1)),
    )


def filled_buffer(count: int = 32, seed: int = 0) -> ReplayBuffer:
    batch = random_batch(count, seed=seed)
    buffer = ReplayBuffer(64, 2, 1, seed=seed)
    for row in range(count):
        buffer.push(Transition(batch.states[row], batch.actions[row], 0.0, batch.next_states[row]))
    return buffer


def policy_for(obs_dim: int = 2, act_dim: int = 1, seed: int = 0) -> DeterministicPolicy:
    actor = mlp_new([obs_dim, 8, act_dim], "tanh", "tanh", seed=seed)
    return DeterministicPolicy(actor, -np.ones(act_dim), np.ones(act_dim))


# Generator


def test_zero_weight_generator_predicts_its_bias():
    generator = linear(np.zeros((3, 2)), [0.25, -0.5])
    wm = model(generator=generator)
    out = wm.predict_next(np.array([1.0, 2.0]), np.array([0.3]))
    np.testing.assert_array_equal(out.data, [[0.25, -0.5]])


def test_residual_generator_adds_state():
    generator = linear(np.zeros((3, 2)), [0.25, -0.5])
    wm = model(generator=generator, residual=True)
    out = wm.predict_next(np.array([1.0, 2.0]), np.array([0.3]))
    np.testing.assert_array_equal(out.data, [[1.25, 1.5]])


def test_supervised_loss_is_zero_for_exact_generator():
    wm = model()
    batch = random_batch()
    batch.next_states = wm.predict_next(batch.states, batch.actions).data
    assert wm.supervised_model_loss(batch).item() == 0.0


def test_constant_generator_loss_equals_variance():
    wm = model(obs_dim=1, generator=linear(np.zeros((2, 1)), [1.0]))
    batch = Batch(
        states=np.zeros((2, 1)),
        actions=np.zeros((2, 1)),
        rewards=np.zeros((2, 1)),
        next_states=np.array([[0.5], [1.5]]),
        dones=np.zeros((2, 1)),
    )
    assert wm.supervised_model_loss(batch).item() == pytest.approx(0.25)


def test_prediction_gradient_wrt_action_matches_finite_differences():
    wm = model()
    states = np.random.default_rng(1).normal(size=(3, 2))
    actions = Tensor(np.random.default_rng(2).uniform(-1.0, 1.0, size=(3, 1)))
    error = finite_diff_check(lambda a: F.reduce_sum(F.square(wm.predict_next(states, a))), actions, floor=1e-4)
    assert error <= 1e-5


def test_prediction_gradient_wrt_state_matches_finite_differences():
    wm = model()
    actions = np.random.default_rng(2).uniform(-1.0, 1.0, size=(3, 1))
    states = Tensor(np.random.default_rng(1).normal(size=(3, 2)))
    error = finite_diff_check(lambda s: F.reduce_sum(F.square(wm.predict_next(s, actions))), states, floor=1e-4)
    assert error <= 1e-5


def test_adv_weight_zero_reduces_to_supervised_loss():
    wm = model(adv_weight=0.0)
    batch = random_batch()
    assert wm.wgan_g_loss(batch).item() == wm.supervised_model_loss(batch).item()


def test_constant_discriminator_adds_no_generator_gradient():
    batch = random_batch()
    wm = model(adv_weight=0.5, discriminator=linear(np.zeros((2, 1)), [4.0]))
    with ComputationTape() as tape:
        loss = wm.wgan_g_loss(batch)
    adversarial = tape.backward(loss)
    with ComputationTape() as tape:
        loss = wm.supervised_model_loss(batch)
    supervised = tape.backward(loss)
    for param in wm.generator.parameters():
        np.testing.assert_allclose(adversarial.get_or_zeros(param), supervised.get_or_zeros(param), atol=1e-15)


def test_generator_loss_gradient_matches_finite_differences():
    wm = model(adv_weight=0.1)
    batch = random_batch()
    flat = Tensor(wm.generator.flatten())
    error = finite_diff_check(lambda p: wm.wgan_g_loss(batch, wm.generator.unflatten(p)), flat, floor=1e-4)
    assert error <= 1e-5


# Discriminator


def test_zero_weight_reward_critic_scores_zero():
    wm = model(reward_critic=linear(np.zeros((2, 1)), [0.0]))
    assert wm.discriminator_score(np.array([3.0, -1.0])) == 0.0


def test_discriminator_score_is_pure():
    wm = model()
    s = np.array([0.2, 0.9])
    assert wm.discriminator_score(s) == wm.discriminator_score(s)


def test_conditional_score_depends_on_target():
    config = WorldModelConfig(hidden_sizes=(8,), hidden_activation="tanh", conditional=True)
    wm = WorldModel(2, 1, np.zeros(2), config, seed=1)
    s = np.array([0.5, 0.5])
    assert wm.discriminator_score(s) != wm.discriminator_score(s, target=np.array([1.0, -1.0]))
    np.testing.assert_array_equal(wm.target, np.zeros(2))


def test_separated_scores_give_unit_loss():
    wm = model(obs_dim=1, discriminator=linear([[1.0]], [0.0]), lambda_gp=0.0)
    loss, estimate = wm.wgan_d_loss(np.ones((4, 1)), np.zeros((4, 1)))
    assert loss.item() == -1.0
    assert estimate.item() == 1.0


def test_constant_discriminator_has_zero_wasserstein_term():
    wm = model(discriminator=linear(np.zeros((2, 1)), [7.0]), lambda_gp=0.0)
    batch = random_batch()
    assert wm.wasserstein_estimate(batch.states, batch.next_states).item() == 0.0


def test_wasserstein_term_is_antisymmetric():
    wm = model(lambda_gp=0.0)
    batch = random_batch()
    forward, _ = wm.wgan_d_loss(batch.states, batch.next_states)
    swapped, _ = wm.wgan_d_loss(batch.next_states, batch.states)
    assert forward.item() == -swapped.item()


def test_gradient_penalty_of_unit_slope_linear_critic_is_zero():
    wm = model(discriminator=linear([[0.6], [0.8]], [0.1]))
    batch = random_batch()
    assert wm.gradient_penalty(batch.states, batch.next_states).item() == pytest.approx(0.0, abs=1e-8)


def test_gradient_penalty_of_constant_critic_is_one():
    wm = model(discriminator=linear(np.zeros((2, 1)), [3.0]))
    batch = random_batch()
    assert wm.gradient_penalty(batch.states, batch.next_states).item() == 1.0


def test_gradient_penalty_of_doubling_critic_is_one():
    wm = model(obs_dim=1, discriminator=linear([[2.0]], [0.0]))
    real = np.array([[0.0], [1.0], [2.0]])
    fake = np.array([[3.0], [-1.0], [0.5]])
    assert wm.gradient_penalty(real, fake).item() == pytest.approx(1.0, abs=1e-8)


def test_discriminator_loss_gradient_matches_finite_differences():
    wm = model(lambda_gp=10.0)
    batch = random_batch()
    epsilon = np.random.default_rng(4).uniform(size=(batch.states.shape[0], 1))
    flat = Tensor(wm.discriminator.flatten())

    def loss(p: Tensor) -> Tensor:
        value, _ = wm.wgan_d_loss(
            batch.next_states, batch.states, epsilon=epsilon, discriminator=wm.discriminator.unflatten(p)
        )
        return value

    assert finite_diff_check(loss, flat, floor=1e-2) <= 1e-3


# Reward


def test_shaped_reward_is_score_difference():
    wm = model(obs_dim=1, reward_critic=linear([[1.0]], [0.0]), score_convention="score")
    assert wm.shaped_reward(np.array([5.0]), np.array([3.0])) == 2.0
    assert wm.shaped_reward(np.array([3.0]), np.array([3.0])) == 0.0


def test_discounted_variant_scales_next_score():
    wm = model(obs_dim=1, reward_critic=linear([[1.0]], [0.0]), score_convention="score", gamma=0.5)
    assert wm.shaped_reward(np.array([5.0]), np.array([4.0]), discount_variant=True) == 3.0


def test_gap_convention_rewards_rising_critic_score():
    wm = model(obs_dim=1, reward_critic=linear([[1.0]], [0.0]))
    assert wm.shaped_reward(np.array([5.0]), np.array([3.0])) == -2.0
    assert wm.shaped_reward(np.array([3.0]), np.array([5.0])) == 2.0
    assert wm.discriminator_score(np.zeros(1)) == 0.0


def test_episode_reward_telescopes():
    wm = model(hidden_sizes=(16, 16))
    states = np.random.default_rng(5).normal(size=(51, 2))
    total = sum(wm.shaped_reward(states[t], states[t + 1]) for t in range(50))
    expected = wm.discriminator_score(states[0]) - wm.discriminator_score(states[-1])
    assert abs(total - expected) <= 1e-9 * 50


@pytest.mark.parametrize("convention", ["gap", "score"])
def test_reward_is_invariant_to_constant_shift_of_reward_critic(convention):
    base = mlp_new([2, 8, 1], "tanh", seed=3)
    shifted = base.clone()
    shifted.layers[-1].bias.data += 12.5
    s_t, s_t1 = np.array([0.3, -0.7]), np.array([1.1, 0.4])
    first = model(reward_critic=base, score_convention=convention).shaped_reward(s_t, s_t1)
    second = model(reward_critic=shifted, score_convention=convention).shaped_reward(s_t, s_t1)
    assert first == pytest.approx(second, abs=1e-12)


# Reward critic and goals


def test_missing_goal_rows_fall_back_to_target():
    wm = model()
    wm.set_target(np.array([0.5, -0.5]))
    rows = wm.goal_rows(np.array([[1.0, 2.0], [np.nan, np.nan]]), 2)
    np.testing.assert_array_equal(rows, [[1.0, 2.0], [0.5, -0.5]])
    np.testing.assert_array_equal(wm.goal_rows(None, 1), [[0.5, -0.5]])
    with pytest.raises(ShapeError):
        wm.goal_rows(np.zeros((3, 2)), 2)


def test_each_row_is_measured_against_its_own_goal():
    wm = WorldModel(2, 1, np.zeros(2), WorldModelConfig(hidden_sizes=(8,), hidden_activation="tanh"), seed=1)
    states = np.array([[0.1, 0.2], [0.4, -0.3]])
    next_states = np.array([[0.3, 0.1], [0.5, 0.0]])
    goals = np.array([[1.0, 0.0], [-1.0, 0.5]])
    rewards = wm.shaped_reward_batch(states, next_states, goals=goals).data[:, 0]
    for row in range(2):
        expected = wm.shaped_reward(states[row], next_states[row], goal=goals[row])
        assert rewards[row] == pytest.approx(expected, abs=1e-12)
    assert rewards[0] != pytest.approx(wm.shaped_reward(states[0], next_states[0]), abs=1e-9)


def test_separated_goal_and_visited_scores_give_unit_loss():
    wm = model(obs_dim=1, reward_critic=linear([[1.0]], [0.0]), lambda_gp=0.0)
    loss, estimate = wm.reward_critic_loss(np.zeros((4, 1)), np.ones((4, 1)))
    assert loss.item() == -1.0
    assert estimate.item() == 1.0


def test_reward_critic_penalty_ignores_goal_coordinates():
    critic = linear([[0.6], [0.8], [5.0], [-2.0]], [0.1])
    wm = model(reward_critic=critic, conditional=True, lambda_gp=10.0)
    visited = np.random.default_rng(0).normal(size=(5, 2))
    goals = np.random.default_rng(1).normal(size=(5, 2))
    loss, estimate = wm.reward_critic_loss(visited, goals)
    assert loss.item() == pytest.approx(-estimate.item(), abs=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_trained_reward_critic_rewards_reaching_the_goal(seed):
    goal = np.array([1.0, 0.0, 0.0])
    config = WorldModelConfig(hidden_sizes=(16,), hidden_activation="tanh", batch_size=32, reward_critic_lr=5e-3)
    wm = WorldModel(3, 1, goal, config, seed=seed)
    rng = np.random.default_rng(seed)
    angles = np.pi + rng.uniform(-0.5, 0.5, size=256)
    hanging = np.column_stack([np.cos(angles), np.sin(angles), rng.uniform(-1.0, 1.0, size=256)])
    buffer = ReplayBuffer(256, 3, 1, seed=seed)
    for row in range(255):
        buffer.push(Transition(hanging[row], np.zeros(1), 0.0, hanging[row + 1], goal=goal))
    for _ in range(300):
        wm.reward_critic_step(buffer.sample(32))
    assert wm.shaped_reward(np.array([-1.0, 0.0, 0.0]), goal, goal=goal) > 0.0


# Reward head


def test_reward_model_loss_is_mean_squared_error():
    wm = model(reward_head=linear(np.zeros((3, 1)), [1.0]))
    batch = random_batch()
    assert wm.reward_model_loss(batch).item() == pytest.approx(float(np.mean((1.0 - batch.rewards) ** 2)))


def test_native_reward_actor_loss_flows_through_reward_head():
    wm = model(reward_head=linear([[0.0], [0.0], [1.0]], [0.0]), gamma=0.0)
    critic = ModelBasedCritic(2, wm.config)
    policy = policy_for()
    states = random_batch().states
    with ComputationTape() as tape:
        loss = model_actor_loss(wm, critic, policy, states, include_shaped_reward=False)
    grads = tape.backward(loss)
    assert loss.item() == pytest.approx(-float(np.mean(policy.actions(Tensor(states)).data)))
    assert any(np.any(grads.get_or_zeros(param)) for param in policy.actor.parameters())


# Value critic and actor


def test_value_target_hand_example():
    value = linear(np.zeros((2, 1)), [2.0])
    critic = ModelBasedCritic(2, WorldModelConfig(gamma=0.99), value=value)
    assert critic.value_target(np.array([0.1]), np.array([[0.5, 0.5]]))[0, 0] == pytest.approx(2.08)


def test_value_target_with_zero_gamma_or_zero_value_is_reward():
    critic = ModelBasedCritic(2, WorldModelConfig(gamma=0.0, hidden_sizes=(4,)))
    assert critic.value_target(np.array([0.3]), np.array([[1.0, 1.0]]))[0, 0] == 0.3
    zero = ModelBasedCritic(2, WorldModelConfig(), value=linear(np.zeros((2, 1)), [0.0]))
    assert zero.value_target(np.array([0.3]), np.array([[1.0, 1.0]]))[0, 0] == 0.3


def test_actor_loss_with_constant_critics_and_zero_gamma_is_flat():
    wm = model(reward_critic=linear(np.zeros((2, 1)), [1.0]), gamma=0.0)
    critic = ModelBasedCritic(2, wm.config)
    policy = policy_for()
    with ComputationTape() as tape:
        loss = model_actor_loss(wm, critic, policy, random_batch().states)
    grads = tape.backward(loss)
    assert loss.item() == 0.0
    for param in policy.actor.parameters():
        assert not np.any(grads.get_or_zeros(param))


def test_actor_loss_gradient_matches_finite_differences():
    wm = model()
    critic = ModelBasedCritic(2, wm.config, seed=1)
    policy = policy_for(seed=2)
    states = random_batch().states
    flat = Tensor(policy.actor.flatten())
    error = finite_diff_check(
        lambda p: model_actor_loss(wm, critic, policy, states, actor=policy.actor.unflatten(p)), flat, floor=1e-4
    )
    assert error <= 1e-5


def test_actor_loss_is_deterministic():
    wm = model()
    critic = ModelBasedCritic(2, wm.config)
    policy = policy_for()
    states = random_batch().states
    assert model_actor_loss(wm, critic, policy, states).item() == model_actor_loss(wm, critic, policy, states).item()


# Rollouts


def test_single_step_rollout_matches_model_and_reward():
    wm = model()
    policy = policy_for()
    s0 = np.array([0.4, -0.3])
    rollout = imagined_rollout(wm, policy, s0, 1)
    assert not rollout.truncated
    (transition,) = rollout.transitions
    expected_next = wm.predict_next(s0, policy.act(s0)).data[0]
    np.testing.assert_allclose(transition.s_next, expected_next, rtol=1e-12)
    assert transition.r == pytest.approx(wm.shaped_reward(s0, expected_next), abs=1e-12)
    assert transition.synthetic


def test_rollout_is_deterministic():
    wm = model()
    policy = policy_for()
    s0 = np.random.default_rng(0).normal(size=(4, 2))
    first = imagined_rollout(wm, policy, s0, 3)
    second = imagined_rollout(wm, policy, s0, 3)
    assert len(first.transitions) == 12
    np.testing.assert_array_equal(first.final_states, second.final_states)


def test_rollout_keeps_each_row_goal():
    wm = model(conditional=True)
    goals = np.array([[1.0, 0.0], [0.0, 1.0]])
    rollout = imagined_rollout(wm, policy_for(), np.zeros((2, 2)), 2, goals)
    np.testing.assert_array_equal([t.goal for t in rollout.transitions], np.tile(goals, (2, 1)))
    second = rollout.transitions[1]
    assert second.r == pytest.approx(wm.shaped_reward(second.s, second.s_next, goal=goals[1]), abs=1e-12)


def test_divergent_model_truncates_rollout():
    generator = linear(np.full((3, 2), 1e200), [0.0, 0.0])
    wm = model(generator=generator)
    rollout = imagined_rollout(wm, policy_for(), np.array([1.0, 1.0]), 3)
    assert rollout.truncated
    assert rollout.error
    assert len(rollout.transitions) == 1


def test_synthetic_transitions_never_enter_real_buffer():
    rollout = imagined_rollout(model(), policy_for(), np.array([0.1, 0.2]), 2)
    buffer = ReplayBuffer(8, 2, 1)
    with pytest.raises(ValueError):
        buffer.push(rollout.transitions[0])
    assert len(buffer) == 0


def test_open_loop_helpers(tmp_path):
    predicted = np.array([[0.0, 1.0], [1.0, 1.0]])
    actual = np.array([[0.0, 0.0], [1.0, 3.0]])
    np.testing.assert_allclose(open_loop_rms(predicted, actual), [0.0, np.sqrt(2.5)])
    path = write_rollout_comparison(tmp_path / "rollout.csv", predicted, actual)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["step", "dim", "predicted", "actual"]
    assert len(rows) == 5


def test_open_loop_predict_chains_predictions():
    wm = model()
    s0 = np.array([0.1, 0.2])
    actions = np.array([[0.5], [-0.5]])
    predicted = wm.open_loop_predict(s0, actions)
    first = wm.predict_next(s0, actions[0]).data[0]
    np.testing.assert_allclose(predicted[0], first, rtol=1e-12)
    np.testing.assert_allclose(predicted[1], wm.predict_next(first, actions[1]).data[0], rtol=1e-12)


# Training and persistence


def test_train_step_reports_finite_metrics():
    wm = model()
    metrics = wm.train_step(filled_buffer())
    values = [
        metrics.d_loss,
        metrics.g_loss,
        metrics.model_mse,
        metrics.wasserstein_estimate,
        metrics.reward_critic_loss,
        metrics.reward_model_mse,
    ]
    assert np.isfinite(values).all()
    assert wm.discriminator_optimizer.step_count == 2
    assert wm.reward_critic_optimizer.step_count == 2
    assert wm.generator_optimizer.step_count == 1
    assert wm.reward_head_optimizer.step_count == 1


def test_failed_train_step_rolls_back_networks_and_sampler(monkeypatch):
    wm = model()
    buffer = filled_buffer()
    before = [net.flatten() for net in wm.networks]
    expected = buffer.sampler_state()

    def failing_step(batch):
        raise NonFiniteError("injected", op="generator_step")

    monkeypatch.setattr(wm, "generator_step", failing_step)
    with pytest.raises(NonFiniteError):
        wm.train_step(buffer)
    for old, net in zip(before, wm.networks):
        np.testing.assert_array_equal(old, net.flatten())
    assert buffer.sampler_state() == expected
    assert wm.reward_critic_optimizer.step_count == 0


def test_save_and_load_round_trip(tmp_path):
    wm = WorldModel(2, 1, np.array([1.0, 0.0]), WorldModelConfig(hidden_sizes=(8,)), seed=3)
    path = wm.save(tmp_path / "wm.ckpt")
    loaded = WorldModel.load(path, WorldModelConfig(hidden_sizes=(8,)))
    for old, new in zip(wm.networks, loaded.networks):
        np.testing.assert_array_equal(old.flatten(), new.flatten())
    np.testing.assert_array_equal(loaded.target, wm.target)
    s = np.array([0.3, 0.3])
    assert loaded.discriminator_score(s) == wm.discriminator_score(s)


def test_config_validation():
    with pytest.raises(ConfigError):
        WorldModelConfig(score_convention="reward").validate()
    with pytest.raises(ConfigError):
        WorldModelConfig(imagined_fraction=1.5).validate()


@pytest.mark.slow
def test_discriminator_estimates_distance_between_shifted_gaussians():
    wm = model(obs_dim=1, hidden_sizes=(64, 64), hidden_activation="relu", lambda_gp=10.0)
    optimizer = AdamState.for_network(wm.discriminator, AdamConfig(lr=1e-3, beta1=0.5, beta2=0.9))
    rng = np.random.default_rng(0)
    for _ in range(3000):
        real = rng.normal(0.0, 1.0, size=(64, 1))
        fake = rng.normal(3.0, 1.0, size=(64, 1))
        with ComputationTape() as tape:
            loss, _ = wm.wgan_d_loss(real, fake)
        adam_step(wm.discriminator, tape.backward(loss), optimizer)
    estimate = wm.wasserstein_estimate(rng.normal(0.0, 1.0, size=(2000, 1)), rng.normal(3.0, 1.0, size=(2000, 1)))
    assert 2.0 <= estimate.item() <= 3.5
