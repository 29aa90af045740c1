from __future__ import annotations

import csv

import numpy as np
import pytest

from gan_actor_critic.bridge import (
    BlindActor,
    BridgeConfig,
    BridgeStream,
    StatelessMdp,
    build_trainers,
    equivalence_check,
    gated_actor_update,
    generator_gradient,
    run_bridge,
)
from gan_actor_critic.autodiff import ComputationTape, Tensor
from gan_actor_critic.bridge.trainers import discriminator_objective, td_critic_loss
from gan_actor_critic.core.errors import ConfigError, NonFiniteError, ShapeError, StreamDesyncError
from gan_actor_critic.nn import Network, mlp_new

DATASET = np.arange(10.0).reshape(-1, 1)


def small_config(**overrides) -> BridgeConfig:
    values = dict(hidden_sizes=(8,), batch_size=16, dataset_size=128, steps=20, generator_lr=1e-3, discriminator_lr=1e-3)
    values.update(overrides)
    return BridgeConfig(**values)


def test_forced_real_coin_shows_dataset_sample():
    mdp = StatelessMdp(DATASET)
    shown, reward = mdp.mdp_step(np.array([42.0]), coin=True, index=3)
    np.testing.assert_array_equal(shown, [3.0])
    assert reward == 1.0


def test_forced_fake_coin_shows_actor_sample():
    mdp = StatelessMdp(DATASET)
    shown, reward = mdp.mdp_step(np.array([42.0]), coin=False)
    np.testing.assert_array_equal(shown, [42.0])
    assert reward == 0.0


def test_real_fraction_tracks_p_real():
    mdp = StatelessMdp(DATASET, p_real=0.3, seed=1)
    rewards = [mdp.mdp_step(np.array([0.5]))[1] for _ in range(10000)]
    assert abs(np.mean(rewards) - 0.3) < 0.02


def test_shown_real_samples_do_not_depend_on_actor():
    first, second = StatelessMdp(DATASET, seed=7), StatelessMdp(DATASET, seed=7)
    for step in range(50):
        a, reward_a = first.mdp_step(np.array([100.0 + step]))
        b, reward_b = second.mdp_step(np.array([-100.0 - step]))
        assert reward_a == reward_b
        if reward_a == 1.0:
            np.testing.assert_array_equal(a, b)


def test_mdp_rejects_bad_samples():
    mdp = StatelessMdp(DATASET)
    with pytest.raises(ShapeError):
        mdp.mdp_step(np.array([1.0, 2.0]))
    with pytest.raises(NonFiniteError):
        mdp.mdp_step(np.array([np.inf]))
    with pytest.raises(ShapeError):
        StatelessMdp(np.zeros((0, 1)))


def test_blind_actor_checks_noise_dimension():
    with pytest.raises(ShapeError):
        BlindActor(mlp_new([2, 1]), noise_dim=3)


def test_streams_with_equal_seeds_agree():
    a = BridgeStream(DATASET, batch_size=8, noise_dim=2, seed=3)
    b = BridgeStream(DATASET, batch_size=8, noise_dim=2, seed=3)
    for _ in range(3):
        first, second = a.draw(), b.draw()
        np.testing.assert_array_equal(first.coins, second.coins)
        np.testing.assert_array_equal(first.noise, second.noise)
    assert a.position == 3


def test_gated_update_is_zero_when_only_real_samples_were_shown():
    actor = BlindActor(mlp_new([1, 4, 1], "tanh", seed=0))
    critic = mlp_new([1, 4, 1], "tanh", seed=1)
    grads = gated_actor_update(actor, critic, np.ones((5, 1)), np.ones(5))
    assert all(not np.any(g) for g in grads)


def test_gated_update_uses_fake_rows_only():
    actor = BlindActor(mlp_new([1, 4, 1], "tanh", seed=0))
    critic = mlp_new([1, 4, 1], "tanh", seed=1)
    z = np.array([[0.1], [0.2], [0.3], [0.4]])
    rewards = np.array([1.0, 0.0, 1.0, 0.0])
    gated = gated_actor_update(actor, critic, z, rewards)
    expected = generator_gradient(actor.generator, critic, z[[1, 3]], "wasserstein")
    for got, want in zip(gated, expected):
        np.testing.assert_array_equal(got, want)


def test_equivalence_with_zero_steps_is_exact():
    gan, ac = build_trainers(small_config(), seed=0)
    assert equivalence_check(gan, ac, 0) == 0.0


@pytest.mark.parametrize(
    "overrides",
    [
        {},
        {"lambda_gp": 10.0},
        {"objective": "cross_entropy"},
        {"dataset": "mixture", "data_dim": 2, "noise_dim": 2},
    ],
)
def test_paired_trainers_stay_identical(overrides):
    gan, ac = build_trainers(small_config(**overrides), seed=11)
    before = gan.flat_parameters()
    deviation = equivalence_check(gan, ac, 100, seed=11)
    assert deviation <= 1e-9
    assert deviation == 0.0
    assert not np.array_equal(gan.flat_parameters(), before)


def test_different_seed_control_diverges():
    gan, ac = build_trainers(small_config(), seed=0)
    assert equivalence_check(gan, ac, 20, seed=0, ac_seed=1) > 0.0


def constant_critic(value: float) -> Network:
    critic = mlp_new([1, 8, 1], "tanh", "identity", seed=3)
    critic.layers[-1].weight.data[...] = 0.0
    critic.layers[-1].bias.data[...] = value
    return critic


def critic_gradients(critic: Network, rows: np.ndarray, rewards: np.ndarray, loss: str) -> np.ndarray:
    real = rewards == 1.0
    with ComputationTape() as tape:
        if loss == "td_mse":
            value = td_critic_loss(critic(Tensor(rows)), rewards)
        else:
            value = discriminator_objective(loss, critic(Tensor(rows[real])), critic(Tensor(rows[~real])))
    grads = tape.backward(value)
    return np.concatenate([grads.get_or_zeros(param).ravel() for param in critic.parameters()])


def test_td_critic_gradient_is_half_the_wasserstein_one_at_one_half():
    rows = np.linspace(-2.0, 2.0, 8).reshape(-1, 1)
    rewards = np.array([1.0, 0.0] * 4)
    critic = constant_critic(0.5)
    td = critic_gradients(critic, rows, rewards, "td_mse")
    wasserstein = critic_gradients(critic, rows, rewards, "wasserstein")
    assert np.any(wasserstein != 0.0)
    np.testing.assert_allclose(td, 0.5 * wasserstein, atol=1e-12)


def test_td_critic_gradient_departs_from_wasserstein_elsewhere():
    rows = np.linspace(-2.0, 2.0, 8).reshape(-1, 1)
    balanced = np.array([1.0, 0.0] * 4)
    off_centre = constant_critic(0.2)
    assert critic_gradients(off_centre, rows, balanced, "wasserstein")[-1] == pytest.approx(0.0, abs=1e-12)
    assert critic_gradients(off_centre, rows, balanced, "td_mse")[-1] == pytest.approx(-0.6)

    unbalanced = np.array([1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0])
    centred = constant_critic(0.5)
    assert critic_gradients(centred, rows, unbalanced, "wasserstein")[-1] == pytest.approx(0.0, abs=1e-12)
    assert critic_gradients(centred, rows, unbalanced, "td_mse")[-1] == pytest.approx(-0.5)


def test_td_mse_actor_critic_drifts_from_the_gan():
    gan, ac = build_trainers(small_config(ac_critic_loss="td_mse"), seed=0)
    assert equivalence_check(gan, ac, 20, seed=0) > 0.0


def test_desynchronised_streams_are_reported():
    gan, ac = build_trainers(small_config(), seed=0)
    gan.stream.draw()
    with pytest.raises(StreamDesyncError):
        equivalence_check(gan, ac, 1)


def test_run_bridge_writes_trace(tmp_path):
    report = run_bridge(small_config(steps=5), seed=2, out_dir=tmp_path)
    assert report.deviation == 0.0
    assert report.control_deviation is not None and report.control_deviation > 0.0
    assert report.trace_path is not None
    rows = list(csv.reader(report.trace_path.open()))
    assert rows[0] == ["step", "deviation", "gan_wasserstein", "ac_wasserstein"]
    assert len(rows) == 6
    assert all(float(row[1]) == 0.0 for row in rows[1:])


def test_config_validation():
    with pytest.raises(ConfigError):
        BridgeConfig(objective="hinge").validate()
    with pytest.raises(ConfigError):
        BridgeConfig(p_real=2.0).validate()
    with pytest.raises(ConfigError):
        BridgeConfig(ac_critic_loss="huber").validate()
