from __future__ import annotations

import numpy as np
import pytest

from gan_actor_critic.autodiff import ComputationTape, Tensor
from gan_actor_critic.autodiff import functional as F
from gan_actor_critic.core.errors import CheckpointError, ConfigError, NonFiniteError, ShapeError
from gan_actor_critic.nn import (
    AdamConfig,
    AdamState,
    Layer,
    Network,
    TrainingSnapshot,
    adam_step,
    load_network,
    mlp_new,
    save_network,
    soft_update,
)
from gan_actor_critic.nn.checkpoint import decode_container, encode_container, network_entries, network_from_entries


def scalar_network(value: float) -> Network:
    return Network([Layer(Tensor([[value]], requires_grad=True), Tensor([0.0], requires_grad=True))])


def test_mlp_new_is_seed_deterministic():
    a = mlp_new([4, 16, 2], seed=3)
    b = mlp_new([4, 16, 2], seed=3)
    c = mlp_new([4, 16, 2], seed=4)
    np.testing.assert_array_equal(a.flatten(), b.flatten())
    assert not np.array_equal(a.flatten(), c.flatten())


def test_mlp_new_respects_init_bound_and_zero_bias():
    net = mlp_new([9, 5], seed=0)
    assert np.all(np.abs(net.layers[0].weight.data) <= 1.0 / 3.0)
    np.testing.assert_array_equal(net.layers[0].bias.data, np.zeros(5))


def test_mlp_new_rejects_bad_sizes():
    with pytest.raises(ConfigError):
        mlp_new([4])
    with pytest.raises(ConfigError):
        mlp_new([4, 0, 2])


def test_forward_is_pure():
    net = mlp_new([3, 8, 2], "tanh", "tanh", seed=1)
    batch = Tensor(np.random.default_rng(0).normal(size=(5, 3)))
    np.testing.assert_array_equal(net(batch).data, net(batch).data)
    assert net(batch).shape == (5, 2)


def test_forward_rejects_wrong_width():
    with pytest.raises(ShapeError):
        mlp_new([3, 2])(Tensor(np.ones((1, 4))))


def test_adam_first_step_matches_hand_computation():
    net = scalar_network(1.0)
    state = AdamState.for_network(net, AdamConfig(lr=1e-3))
    adam_step(net, [np.array([[0.1]]), np.array([0.0])], state)
    assert net.layers[0].weight.data[0, 0] - 1.0 == pytest.approx(-9.99999e-4, rel=1e-6)
    assert state.step_count == 1


def test_adam_with_zero_gradient_leaves_parameters():
    net = mlp_new([2, 3, 1], seed=0)
    before = net.flatten()
    adam_step(net, [np.zeros_like(p.data) for p in net.parameters()], AdamState.for_network(net))
    np.testing.assert_array_equal(net.flatten(), before)


def test_adam_with_zero_lr_is_identity():
    net = mlp_new([2, 3, 1], seed=0)
    before = net.flatten()
    grads = [np.ones_like(p.data) for p in net.parameters()]
    adam_step(net, grads, AdamState.for_network(net, AdamConfig(lr=0.0)))
    np.testing.assert_array_equal(net.flatten(), before)


def test_adam_equal_gradients_give_equal_updates():
    net = Network([Layer(Tensor([[1.0, 1.0]], requires_grad=True), Tensor([0.0, 0.0], requires_grad=True))])
    adam_step(net, [np.array([[0.3, 0.3]]), np.zeros(2)], AdamState.for_network(net))
    weight = net.layers[0].weight.data
    assert weight[0, 0] == weight[0, 1]


def test_adam_rejects_non_finite_gradient_without_change():
    net = mlp_new([2, 1], seed=0)
    state = AdamState.for_network(net)
    before = net.flatten()
    grads = [np.full_like(p.data, np.nan) for p in net.parameters()]
    with pytest.raises(NonFiniteError):
        adam_step(net, grads, state)
    np.testing.assert_array_equal(net.flatten(), before)
    assert state.step_count == 0


def test_adam_consumes_gradient_map():
    net = mlp_new([2, 1], seed=0)
    before = net.flatten()
    with ComputationTape() as tape:
        loss = F.reduce_mean(F.square(net(Tensor([[1.0, 2.0]]))))
    adam_step(net, tape.backward(loss), AdamState.for_network(net, AdamConfig(lr=0.01)))
    assert not np.array_equal(net.flatten(), before)


def test_soft_update_endpoints_and_midpoint():
    target, source = scalar_network(0.0), scalar_network(2.0)
    soft_update(target, source, 0.0)
    assert target.layers[0].weight.data[0, 0] == 0.0
    soft_update(target, source, 0.5)
    assert target.layers[0].weight.data[0, 0] == 1.0
    soft_update(target, source, 1.0)
    np.testing.assert_array_equal(target.flatten(), source.flatten())


def test_soft_update_rejects_architecture_mismatch():
    with pytest.raises(ShapeError):
        soft_update(mlp_new([2, 3, 1]), mlp_new([2, 4, 1]), 0.5)


def test_clone_is_independent_and_detached_shares_storage():
    net = mlp_new([2, 2], seed=0)
    clone = net.clone()
    view = net.detached()
    net.layers[0].weight.data[0, 0] += 1.0
    assert clone.layers[0].weight.data[0, 0] != net.layers[0].weight.data[0, 0]
    assert view.layers[0].weight.data[0, 0] == net.layers[0].weight.data[0, 0]
    assert not view.layers[0].weight.requires_grad


def test_unflatten_gradient_matches_parameter_gradient():
    net = mlp_new([2, 3, 1], "tanh", seed=2)
    batch = Tensor([[0.5, -1.0], [1.5, 0.25]])
    flat = Tensor(net.flatten(), requires_grad=True)
    with ComputationTape() as tape:
        loss = F.reduce_mean(net.unflatten(flat)(batch))
    by_flat = tape.backward(loss)[flat]
    with ComputationTape() as tape:
        loss = F.reduce_mean(net(batch))
    grads = tape.backward(loss)
    by_param = np.concatenate([grads.get_or_zeros(p).reshape(-1) for p in net.parameters()])
    np.testing.assert_allclose(by_flat, by_param, rtol=1e-12, atol=1e-15)


def test_training_snapshot_restores_parameters_and_moments():
    net = mlp_new([2, 1], seed=0)
    state = AdamState.for_network(net)
    snapshot = TrainingSnapshot.capture([net], [state])
    before = net.flatten()
    adam_step(net, [np.ones_like(p.data) for p in net.parameters()], state)
    snapshot.restore()
    np.testing.assert_array_equal(net.flatten(), before)
    assert state.step_count == 0
    assert all(not np.any(m) for m in state.m)


def test_network_checkpoint_round_trip_is_bit_exact(tmp_path):
    net = mlp_new([3, 5, 2], "tanh", "tanh", seed=11)
    path = save_network(tmp_path / "net.ckpt", net, {"step": np.array([42.0])})
    loaded, metadata = load_network(path)
    np.testing.assert_array_equal(loaded.flatten(), net.flatten())
    assert loaded.same_architecture(net)
    assert metadata["step"][0] == 42.0


def test_container_rejects_bad_magic_and_truncation():
    payload = encode_container({"w": np.arange(4.0)})
    with pytest.raises(CheckpointError, match="magic"):
        decode_container(b"NOPE" + payload[4:])
    with pytest.raises(CheckpointError):
        decode_container(payload[:-3])


def test_inconsistent_layer_entries_raise_checkpoint_error():
    entries = network_entries(mlp_new([3, 5, 2], seed=0), "net.")
    entries["net.layers.1.weight"] = np.zeros((4, 2))
    with pytest.raises(CheckpointError, match="Inconsistent"):
        network_from_entries(entries, "net.")

    entries = network_entries(mlp_new([3, 2], seed=0), "net.")
    entries["net.layers.0.bias"] = np.zeros(3)
    with pytest.raises(CheckpointError):
        network_from_entries(entries, "net.")
