"""Fully connected networks built on the autodiff tensors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from gan_actor_critic.autodiff import Tensor, functional as F
from gan_actor_critic.autodiff.tensor import Array
from gan_actor_critic.core.errors import ConfigError, ShapeError

HIDDEN_ACTIVATIONS = ("relu", "tanh")
OUTPUT_ACTIVATIONS = ("identity", "tanh")


@dataclass
class Layer:
    weight: Tensor
    bias: Tensor


def init_bound(fan_in: int) -> float:
    """Half-width of the uniform weight initialisation for a layer with ``fan_in`` inputs."""

    return 1.0 / math.sqrt(fan_in)


class Network:
    """Multi-layer perceptron ``x -> act(x W + b)`` with weights stored ``[in × out]``."""

    def __init__(
        self,
        layers: Sequence[Layer],
        *,
        hidden_activation: str = "relu",
        output_activation: str = "identity",
    ) -> None:
        if not layers:
            raise ConfigError("A network needs at least one layer")
        if hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f"Unknown hidden activation {hidden_activation!r}", "hidden_activation")
        if output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigError(f"Unknown output activation {output_activation!r}", "output_activation")
        for index, layer in enumerate(layers):
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.weight.shape[1],):
                raise ShapeError(
                    f"Layer {index} weight/bias shapes disagree", layer.weight.shape, layer.bias.shape
                )
            if index and layers[index - 1].weight.shape[1] != layer.weight.shape[0]:
                raise ShapeError(
                    f"Layer {index} does not chain with layer {index - 1}",
                    layers[index - 1].weight.shape,
                    layer.weight.shape,
                )
        self.layers: List[Layer] = list(layers)
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation

    @property
    def layer_sizes(self) -> List[int]:
        return [self.layers[0].weight.shape[0]] + [layer.weight.shape[1] for layer in self.layers]

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weight.shape[1]

    @property
    def num_parameters(self) -> int:
        return sum(layer.weight.size + layer.bias.size for layer in self.layers)

    def parameters(self) -> List[Tensor]:
        params: List[Tensor] = []
        for layer in self.layers:
            params.extend((layer.weight, layer.bias))
        return params

    def named_parameters(self) -> List[Tuple[str, Tensor]]:
        named: List[Tuple[str, Tensor]] = []
        for index, layer in enumerate(self.layers):
            named.append((f"layers.{index}.weight", layer.weight))
            named.append((f"layers.{index}.bias", layer.bias))
        return named

    def forward(self, batch: Tensor) -> Tensor:
        if batch.ndim != 2 or batch.shape[1] != self.in_dim:
            raise ShapeError("Network input width mismatch", batch.shape, (-1, self.in_dim))
        x = batch
        last = len(self.layers) - 1
        for index, layer in enumerate(self.layers):
            x = F.add(F.matmul(x, layer.weight), layer.bias)
            activation = self.output_activation if index == last else self.hidden_activation
            x = _activate(x, activation)
        return x

    __call__ = forward

    def same_architecture(self, other: "Network") -> bool:
        return (
            self.layer_sizes == other.layer_sizes
            and self.hidden_activation == other.hidden_activation
            and self.output_activation == other.output_activation
        )

    def clone(self) -> "Network":
        """Deep copy with trainable parameters."""

        return self._rebuild(
            [
                Layer(Tensor(layer.weight.data, requires_grad=True), Tensor(layer.bias.data, requires_grad=True))
                for layer in self.layers
            ]
        )

    def detached(self) -> "Network":
        """View sharing this network's parameter storage that never receives gradients."""

        return self._rebuild(
            [Layer(layer.weight.detach(), layer.bias.detach()) for layer in self.layers]
        )

    def flatten(self) -> Array:
        return np.concatenate([param.data.reshape(-1) for param in self.parameters()])

    def unflatten(self, flat: Tensor) -> "Network":
        """Network whose parameters are differentiable slices of ``flat``.

        Used to express a loss as a function of one parameter vector, e.g. for
        finite-difference gradient checks.
        """

        if flat.shape != (self.num_parameters,):
            raise ShapeError("Flat parameter vector has the wrong length", flat.shape, (self.num_parameters,))
        row = F.reshape(flat, (1, self.num_parameters))
        layers: List[Layer] = []
        offset = 0
        for layer in self.layers:
            fan_in, fan_out = layer.weight.shape
            weight = F.reshape(F.slice_(row, offset, offset + fan_in * fan_out), (fan_in, fan_out))
            offset += fan_in * fan_out
            bias = F.reshape(F.slice_(row, offset, offset + fan_out), (fan_out,))
            offset += fan_out
            layers.append(Layer(weight, bias))
        return self._rebuild(layers)

    def load_flat(self, values: Array) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.num_parameters,):
            raise ShapeError("Flat parameter vector has the wrong length", values.shape, (self.num_parameters,))
        offset = 0
        for param in self.parameters():
            param.data[...] = values[offset : offset + param.size].reshape(param.shape)
            offset += param.size

    def _rebuild(self, layers: List[Layer]) -> "Network":
        return Network(
            layers,
            hidden_activation=self.hidden_activation,
            output_activation=self.output_activation,
        )


def _activate(x: Tensor, activation: str) -> Tensor:
    if activation == "relu":
        return F.relu(x)
    if activation == "tanh":
        return F.tanh(x)
    return x


def mlp_new(
    layer_sizes: Sequence[int],
    hidden_act: str = "relu",
    output_act: str = "identity",
    seed: int = 0,
) -> Network:
    """Build an MLP with ``U[-1/sqrt(in), 1/sqrt(in)]`` weights and zero biases.

    The same ``seed`` always produces bit-identical parameters.
    """

    sizes = list(layer_sizes)
    if len(sizes) < 2:
        raise ConfigError(f"An MLP needs at least two layer sizes, got {sizes}", "layer_sizes")
    if any(int(size) != size or size <= 0 for size in sizes):
        raise ConfigError(f"Layer sizes must be positive integers, got {sizes}", "layer_sizes")

    rng = np.random.default_rng(seed)
    layers: List[Layer] = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = init_bound(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        layers.append(
            Layer(Tensor(weight, requires_grad=True), Tensor(np.zeros(fan_out), requires_grad=True))
        )
    return Network(layers, hidden_activation=hidden_act, output_activation=output_act)


def forward(net: Network, batch: Tensor) -> Tensor:
    return net.forward(batch)


__all__ = ["Layer", "Network", "forward", "init_bound", "mlp_new"]
