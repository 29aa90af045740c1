"""Adam with bias correction and target-network soft updates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from gan_actor_critic.autodiff import GradientMap
from gan_actor_critic.autodiff.tensor import Array
from gan_actor_critic.core.errors import NonFiniteError, ShapeError

from .network import Network


Gradients = Union[GradientMap, Sequence[Array]]


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First/second moment estimates mirroring a network's parameters."""

    m: List[Array]
    v: List[Array]
    hyper: AdamConfig = field(default_factory=AdamConfig)
    step_count: int = 0

    @classmethod
    def for_network(cls, net: Network, hyper: AdamConfig | None = None) -> "AdamState":
        params = net.parameters()
        return cls(
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
            hyper=hyper or AdamConfig(),
        )

    def copy(self) -> "AdamState":
        return AdamState(
            m=[m.copy() for m in self.m],
            v=[v.copy() for v in self.v],
            hyper=self.hyper,
            step_count=self.step_count,
        )


def _collect_gradients(net: Network, grads: Gradients) -> List[Array]:
    params = net.parameters()
    if isinstance(grads, GradientMap):
        collected = [grads.get_or_zeros(p) for p in params]
    else:
        collected = [np.asarray(g, dtype=np.float64) for g in grads]
        if len(collected) != len(params):
            raise ShapeError(f"Expected {len(params)} gradient buffers, got {len(collected)}")
    for param, grad in zip(params, collected):
        if grad.shape != param.shape:
            raise ShapeError("Gradient does not mirror its parameter", grad.shape, param.shape)
    return collected


def adam_step(net: Network, grads: Gradients, state: AdamState) -> Tuple[Network, AdamState]:
    """Apply one Adam update in place: ``θ ← θ − lr·m̂/(√v̂ + ε)``.

    Non-finite gradients reject the step before anything is modified.
    """

    collected = _collect_gradients(net, grads)
    params = net.parameters()
    if len(state.m) != len(params) or any(m.shape != p.shape for m, p in zip(state.m, params)):
        raise ShapeError("Adam state does not mirror the network parameters")
    for index, grad in enumerate(collected):
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(
                f"Non-finite gradient for parameter {index}; Adam step rejected", op="adam_step"
            )

    hyper = state.hyper
    step = state.step_count + 1
    correction1 = 1.0 - hyper.beta1**step
    correction2 = 1.0 - hyper.beta2**step
    for param, grad, m, v in zip(params, collected, state.m, state.v):
        m *= hyper.beta1
        m += (1.0 - hyper.beta1) * grad
        v *= hyper.beta2
        v += (1.0 - hyper.beta2) * (grad * grad)
        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
    state.step_count = step
    return net, state


def soft_update(target: Network, source: Network, tau: float) -> Network:
    """Polyak-average ``source`` into ``target``: ``θ' ← τθ + (1 − τ)θ'``.

    ``tau == 1`` copies bit-exactly and ``tau == 0`` leaves the target untouched.
    """

    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if not target.same_architecture(source):
        raise ShapeError(
            "soft_update needs identical architectures", target.layer_sizes, source.layer_sizes
        )
    if tau == 0.0:
        return target
    for target_param, source_param in zip(target.parameters(), source.parameters()):
        if tau == 1.0:
            np.copyto(target_param.data, source_param.data)
        else:
            target_param.data[...] = tau * source_param.data + (1.0 - tau) * target_param.data
    return target


def hard_update(target: Network, source: Network) -> Network:
    return soft_update(target, source, 1.0)


@dataclass
class TrainingSnapshot:
    """Copy of network parameters and optimizer moments taken before an update.

    ``restore`` writes the copies back in place, so references held elsewhere
    (policies, detached views) see the rolled-back values.
    """

    networks: List[Network]
    params: List[Array]
    optimizers: List[AdamState]
    saved_optimizers: List[AdamState]

    @classmethod
    def capture(cls, networks: Sequence[Network], optimizers: Sequence[AdamState] = ()) -> "TrainingSnapshot":
        return cls(
            networks=list(networks),
            params=[net.flatten() for net in networks],
            optimizers=list(optimizers),
            saved_optimizers=[state.copy() for state in optimizers],
        )

    def restore(self) -> None:
        for net, flat in zip(self.networks, self.params):
            net.load_flat(flat)
        for state, saved in zip(self.optimizers, self.saved_optimizers):
            for live, kept in zip(state.m + state.v, saved.m + saved.v):
                np.copyto(live, kept)
            state.step_count = saved.step_count


__all__ = ["AdamConfig", "AdamState", "TrainingSnapshot", "adam_step", "hard_update", "soft_update"]
