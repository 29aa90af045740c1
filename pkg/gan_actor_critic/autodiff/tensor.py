"""Dense float64 tensors and the define-by-run computation tape.

A :class:`ComputationTape` is used as a context manager. While it is active,
every primitive applied through :func:`op_apply` whose inputs require
gradients is recorded on it; outside of any tape primitives evaluate eagerly
and their results are constants. Calling :meth:`ComputationTape.backward`
replays the recorded backward rules in reverse order.

Example
-------
```python
from gan_actor_critic.autodiff import ComputationTape, Tensor, functional as F

x = Tensor(3.0, requires_grad=True)
with ComputationTape() as tape:
    loss = F.square(x)
grads = tape.backward(loss)
assert grads[x] == 6.0
```
"""

from __future__ import annotations

import contextvars
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import (
    Any,
    Callable,
    Dict,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import numpy as np
from numpy.typing import NDArray

from gan_actor_critic.core.errors import EngineError, NonFiniteError, ShapeError, TapeError

logger = logging.getLogger(__name__)

Array = NDArray[np.float64]
TensorLike = Union["Tensor", float, int, Sequence[float], Sequence[Sequence[float]], Array]

ForwardFn = Callable[..., Array]
BackwardFn = Callable[[Array, Array, Sequence[Array], Mapping[str, Any]], Sequence[Optional[Array]]]
ValidateFn = Callable[[Sequence[Tuple[int, ...]], Mapping[str, Any]], None]

MAX_RANK = 2

_ACTIVE_TAPE: contextvars.ContextVar[Optional["ComputationTape"]] = contextvars.ContextVar(
    "gan_actor_critic_active_tape", default=None
)


class Tensor:
    """Dense float64 array of rank 0, 1 or 2 that can take part in gradient flow."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data: TensorLike, *, requires_grad: bool = False) -> None:
        if isinstance(data, Tensor):
            data = data.data
        array = np.array(data, dtype=np.float64)
        if array.ndim > MAX_RANK:
            raise ShapeError(f"Tensors are limited to rank {MAX_RANK}, got shape {array.shape}")
        if array.size == 0:
            raise ShapeError(f"Tensors need positive dimension sizes, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise NonFiniteError("Tensor values must be finite")
        self.data: Array = array
        self.requires_grad = requires_grad
        self.grad: Optional[Array] = None

    @classmethod
    def _wrap(cls, array: Array, requires_grad: bool) -> "Tensor":
        tensor = cls.__new__(cls)
        tensor.data = array
        tensor.requires_grad = requires_grad
        tensor.grad = None
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> Array:
        return self.data.copy()

    def detach(self) -> "Tensor":
        """Return a tensor sharing this tensor's data that never receives gradients."""

        return Tensor._wrap(self.data, False)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other: TensorLike) -> "Tensor":
        return op_apply("add", [self, other])

    def __radd__(self, other: TensorLike) -> "Tensor":
        return op_apply("add", [other, self])

    def __sub__(self, other: TensorLike) -> "Tensor":
        return op_apply("sub", [self, other])

    def __rsub__(self, other: TensorLike) -> "Tensor":
        return op_apply("sub", [other, self])

    def __mul__(self, other: TensorLike) -> "Tensor":
        return op_apply("mul", [self, other])

    def __rmul__(self, other: TensorLike) -> "Tensor":
        return op_apply("mul", [other, self])

    def __neg__(self) -> "Tensor":
        return op_apply("neg", [self])

    def __matmul__(self, other: TensorLike) -> "Tensor":
        return op_apply("matmul", [self, other])


def as_tensor(value: TensorLike) -> Tensor:
    """Return ``value`` if it already is a tensor, otherwise wrap it as a constant."""

    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass(frozen=True)
class Primitive:
    """Forward and backward rule of a differentiable primitive operation."""

    name: str
    forward: ForwardFn
    backward: BackwardFn
    validate: Optional[ValidateFn] = None


_PRIMITIVES: Dict[str, Primitive] = {}


def register_primitive(primitive: Primitive) -> Primitive:
    if primitive.name in _PRIMITIVES:
        raise EngineError(f"Primitive {primitive.name!r} is already registered")
    _PRIMITIVES[primitive.name] = primitive
    return primitive


def registered_primitives() -> List[str]:
    return sorted(_PRIMITIVES)


@dataclass
class TapeNode:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    primitive: Primitive
    attrs: Mapping[str, Any] = field(default_factory=dict)


class GradientMap:
    """Gradients of a loss with respect to the requires-grad leaves of one tape."""

    def __init__(self, entries: Optional[Dict[int, Tuple[Tensor, Array]]] = None) -> None:
        self._entries: Dict[int, Tuple[Tensor, Array]] = entries or {}

    def get(self, tensor: Tensor) -> Optional[Array]:
        entry = self._entries.get(id(tensor))
        if entry is None or entry[0] is not tensor:
            return None
        return entry[1]

    def __getitem__(self, tensor: Tensor) -> Array:
        grad = self.get(tensor)
        if grad is None:
            raise KeyError(f"No gradient recorded for {tensor!r}")
        return grad

    def __contains__(self, tensor: object) -> bool:
        return isinstance(tensor, Tensor) and self.get(tensor) is not None

    def __len__(self) -> int:
        return len(self._entries)

    def items(self) -> Iterator[Tuple[Tensor, Array]]:
        return iter(self._entries.values())

    def get_or_zeros(self, tensor: Tensor) -> Array:
        grad = self.get(tensor)
        if grad is None:
            return np.zeros_like(tensor.data)
        return grad


class ComputationTape:
    """Ordered record of primitive applications supporting one reverse pass."""

    def __init__(self) -> None:
        self.nodes: List[TapeNode] = []
        self._produced: Set[int] = set()
        self._consumed = False
        self._token: Optional[contextvars.Token[Optional[ComputationTape]]] = None

    def __enter__(self) -> "ComputationTape":
        if self._token is not None:
            raise TapeError("Tape is already active")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc_info: object) -> None:
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None

    def _record(self, node: TapeNode) -> None:
        self.nodes.append(node)
        self._produced.add(id(node.output))

    def produced(self, tensor: Tensor) -> bool:
        return id(tensor) in self._produced

    def backward(self, loss: Tensor) -> GradientMap:
        """Propagate d(loss)/d(leaf) to every requires-grad leaf recorded on this tape.

        The tape can be replayed only once; a second call raises
        :class:`TapeError`. Leaves that were detached never get an entry.
        """

        if self._consumed:
            raise TapeError("backward was already called on this tape")
        if loss.ndim != 0:
            raise TapeError(f"Loss must be a scalar, got shape {loss.shape}")
        self._consumed = True

        leaves: Dict[int, Tuple[Tensor, Array]] = {}
        if not self.produced(loss):
            if loss.requires_grad:
                leaves[id(loss)] = (loss, np.ones_like(loss.data))
            return self._finish(leaves)

        grads: Dict[int, Array] = {id(loss): np.ones_like(loss.data)}
        leaf_refs: Dict[int, Tensor] = {}
        for node in reversed(self.nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            input_grads = node.primitive.backward(
                upstream, node.output.data, [t.data for t in node.inputs], node.attrs
            )
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = grad
                if key not in self._produced:
                    leaf_refs[key] = tensor

        for key, tensor in leaf_refs.items():
            leaves[key] = (tensor, np.asarray(grads[key], dtype=np.float64).reshape(tensor.shape))
        return self._finish(leaves)

    def _finish(self, leaves: Dict[int, Tuple[Tensor, Array]]) -> GradientMap:
        for tensor, grad in leaves.values():
            tensor.grad = grad.copy()
        logger.debug("Backward pass over %s nodes reached %s leaves", len(self.nodes), len(leaves))
        return GradientMap(leaves)


def active_tape() -> Optional[ComputationTape]:
    return _ACTIVE_TAPE.get()


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate primitives without recording them on any tape."""

    token = _ACTIVE_TAPE.set(None)
    try:
        yield
    finally:
        _ACTIVE_TAPE.reset(token)


def op_apply(op: str, inputs: Sequence[TensorLike], **attrs: Any) -> Tensor:
    """Apply a registered primitive and record it on the active tape."""

    primitive = _PRIMITIVES.get(op)
    if primitive is None:
        raise EngineError(f"Unknown primitive {op!r}")
    tensors = [as_tensor(value) for value in inputs]
    arrays = [tensor.data for tensor in tensors]
    if primitive.validate is not None:
        primitive.validate([array.shape for array in arrays], attrs)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = np.asarray(primitive.forward(*arrays, **attrs), dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"Primitive {op!r} produced a non-finite output", op=op)

    tape = _ACTIVE_TAPE.get()
    requires_grad = tape is not None and any(tensor.requires_grad for tensor in tensors)
    result = Tensor._wrap(out, requires_grad)
    if tape is not None and requires_grad:
        tape._record(TapeNode(op, tuple(tensors), result, primitive, dict(attrs)))
    return result


def backward(tape: ComputationTape, loss: Tensor) -> GradientMap:
    return tape.backward(loss)


__all__ = [
    "Array",
    "ComputationTape",
    "GradientMap",
    "Primitive",
    "Tensor",
    "TensorLike",
    "TapeNode",
    "active_tape",
    "as_tensor",
    "backward",
    "no_grad",
    "op_apply",
    "register_primitive",
    "registered_primitives",
]
