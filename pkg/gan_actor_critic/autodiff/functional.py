"""Differentiable primitives and their functional wrappers.

Elementwise binary primitives broadcast in (batch, feature) rank-2 semantics:
equal shapes, scalars, and rows/columns against matrices. Reductions, layout
primitives and ``row_norm`` cover what the networks and losses need.

Subgradient choices: ``relu`` has derivative 0 at 0, ``clamp`` has derivative 0
on and beyond its bounds, ``row_norm`` has derivative 0 at the zero vector.
"""

from __future__ import annotations

from typing import Any, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from gan_actor_critic.core.errors import ShapeError

from .tensor import Array, Primitive, Tensor, TensorLike, op_apply, register_primitive

Shape = Tuple[int, ...]
Bound = Union[float, Sequence[float], Array]


def _unbroadcast(grad: Array, shape: Shape) -> Array:
    """Sum ``grad`` over the axes that were broadcast to reach its shape."""

    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _validate_broadcast(op: str) -> Any:
    def validate(shapes: Sequence[Shape], attrs: Mapping[str, Any]) -> None:
        left, right = shapes
        try:
            np.broadcast_shapes(left, right)
        except ValueError:
            raise ShapeError(f"Cannot broadcast operands of {op!r}", left, right) from None

    return validate


def _validate_matmul(shapes: Sequence[Shape], attrs: Mapping[str, Any]) -> None:
    left, right = shapes
    if len(left) != 2 or len(right) != 2 or left[1] != right[0]:
        raise ShapeError("matmul needs [m×k] @ [k×n] operands", left, right)


def _validate_axis(shapes: Sequence[Shape], attrs: Mapping[str, Any]) -> None:
    axis = attrs.get("axis")
    if axis is not None and not 0 <= axis < len(shapes[0]):
        raise ShapeError(f"Axis {axis} out of range for shape {shapes[0]}")


def _validate_concat(shapes: Sequence[Shape], attrs: Mapping[str, Any]) -> None:
    axis = attrs["axis"]
    first = shapes[0]
    if not 0 <= axis < len(first):
        raise ShapeError(f"Axis {axis} out of range for shape {first}")
    for other in shapes[1:]:
        if len(other) != len(first) or any(
            a != b for i, (a, b) in enumerate(zip(first, other)) if i != axis
        ):
            raise ShapeError("concat operands disagree off the concat axis", first, other)


def _validate_slice(shapes: Sequence[Shape], attrs: Mapping[str, Any]) -> None:
    shape = shapes[0]
    axis, start, stop = attrs["axis"], attrs["start"], attrs["stop"]
    if not 0 <= axis < len(shape) or not 0 <= start < stop <= shape[axis]:
        raise ShapeError(f"Slice [{start}:{stop}] on axis {axis} is invalid for shape {shape}")


def _validate_reshape(shapes: Sequence[Shape], attrs: Mapping[str, Any]) -> None:
    target = tuple(attrs["shape"])
    if int(np.prod(target)) != int(np.prod(shapes[0])) or len(target) > 2:
        raise ShapeError("reshape must preserve the element count", shapes[0], target)


def _validate_row_norm(shapes: Sequence[Shape], attrs: Mapping[str, Any]) -> None:
    if len(shapes[0]) != 2:
        raise ShapeError(f"row_norm needs a rank-2 operand, got shape {shapes[0]}")


def _expand_reduced(grad: Array, shape: Shape, axis: Optional[int], keepdims: bool) -> Array:
    if axis is not None and not keepdims:
        grad = np.expand_dims(grad, axis)
    return np.array(np.broadcast_to(grad, shape))


def _sigmoid(x: Array) -> Array:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _row_norm_backward(g: Array, out: Array, xs: Sequence[Array], attrs: Mapping[str, Any]) -> Sequence[Optional[Array]]:
    (x,) = xs
    positive = out > 0.0
    safe = np.where(positive, out, 1.0)
    return ((g * positive / safe)[:, None] * x,)


def _concat_backward(g: Array, out: Array, xs: Sequence[Array], attrs: Mapping[str, Any]) -> Sequence[Optional[Array]]:
    axis = attrs["axis"]
    offsets = np.cumsum([x.shape[axis] for x in xs])[:-1]
    return tuple(np.split(g, offsets, axis=axis))


def _slice_forward(x: Array, *, axis: int, start: int, stop: int) -> Array:
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    return x[tuple(index)].copy()


def _slice_backward(g: Array, out: Array, xs: Sequence[Array], attrs: Mapping[str, Any]) -> Sequence[Optional[Array]]:
    (x,) = xs
    grad = np.zeros_like(x)
    index = [slice(None)] * x.ndim
    index[attrs["axis"]] = slice(attrs["start"], attrs["stop"])
    grad[tuple(index)] = g
    return (grad,)


def _clamp_backward(g: Array, out: Array, xs: Sequence[Array], attrs: Mapping[str, Any]) -> Sequence[Optional[Array]]:
    (x,) = xs
    inside = (x > attrs["low"]) & (x < attrs["high"])
    return (g * inside,)


for _primitive in (
    Primitive(
        "matmul",
        lambda a, b: a @ b,
        lambda g, out, xs, attrs: (g @ xs[1].T, xs[0].T @ g),
        _validate_matmul,
    ),
    Primitive(
        "add",
        np.add,
        lambda g, out, xs, attrs: (_unbroadcast(g, xs[0].shape), _unbroadcast(g, xs[1].shape)),
        _validate_broadcast("add"),
    ),
    Primitive(
        "sub",
        np.subtract,
        lambda g, out, xs, attrs: (_unbroadcast(g, xs[0].shape), _unbroadcast(-g, xs[1].shape)),
        _validate_broadcast("sub"),
    ),
    Primitive(
        "mul",
        np.multiply,
        lambda g, out, xs, attrs: (
            _unbroadcast(g * xs[1], xs[0].shape),
            _unbroadcast(g * xs[0], xs[1].shape),
        ),
        _validate_broadcast("mul"),
    ),
    Primitive("neg", np.negative, lambda g, out, xs, attrs: (-g,)),
    Primitive(
        "scale",
        lambda x, *, factor: x * factor,
        lambda g, out, xs, attrs: (g * attrs["factor"],),
    ),
    Primitive("tanh", np.tanh, lambda g, out, xs, attrs: (g * (1.0 - out * out),)),
    Primitive(
        "relu",
        lambda x: np.maximum(x, 0.0),
        lambda g, out, xs, attrs: (g * (xs[0] > 0.0),),
    ),
    Primitive(
        "softplus",
        lambda x: np.logaddexp(0.0, x),
        lambda g, out, xs, attrs: (g * _sigmoid(xs[0]),),
    ),
    Primitive("square", lambda x: x * x, lambda g, out, xs, attrs: (2.0 * xs[0] * g,)),
    Primitive(
        "sum",
        lambda x, *, axis=None, keepdims=False: np.sum(x, axis=axis, keepdims=keepdims),
        lambda g, out, xs, attrs: (
            _expand_reduced(g, xs[0].shape, attrs.get("axis"), attrs.get("keepdims", False)),
        ),
        _validate_axis,
    ),
    Primitive(
        "mean",
        lambda x, *, axis=None, keepdims=False: np.mean(x, axis=axis, keepdims=keepdims),
        lambda g, out, xs, attrs: (
            _expand_reduced(g, xs[0].shape, attrs.get("axis"), attrs.get("keepdims", False))
            / (xs[0].size if attrs.get("axis") is None else xs[0].shape[attrs["axis"]]),
        ),
        _validate_axis,
    ),
    Primitive(
        "concat",
        lambda *xs, axis: np.concatenate(xs, axis=axis),
        _concat_backward,
        _validate_concat,
    ),
    Primitive("slice", _slice_forward, _slice_backward, _validate_slice),
    Primitive(
        "reshape",
        lambda x, *, shape: x.reshape(shape).copy(),
        lambda g, out, xs, attrs: (g.reshape(xs[0].shape),),
        _validate_reshape,
    ),
    Primitive(
        "clamp",
        lambda x, *, low, high: np.clip(x, low, high),
        _clamp_backward,
    ),
    Primitive(
        "row_norm",
        lambda x: np.sqrt(np.sum(x * x, axis=1)),
        _row_norm_backward,
        _validate_row_norm,
    ),
):
    register_primitive(_primitive)


def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    return op_apply("matmul", [a, b])


def add(a: TensorLike, b: TensorLike) -> Tensor:
    return op_apply("add", [a, b])


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    return op_apply("sub", [a, b])


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    return op_apply("mul", [a, b])


def neg(x: TensorLike) -> Tensor:
    return op_apply("neg", [x])


def scale(x: TensorLike, factor: float) -> Tensor:
    return op_apply("scale", [x], factor=float(factor))


def tanh(x: TensorLike) -> Tensor:
    return op_apply("tanh", [x])


def relu(x: TensorLike) -> Tensor:
    return op_apply("relu", [x])


def softplus(x: TensorLike) -> Tensor:
    """``log(1 + exp(x))``, evaluated stably; ``softplus(-x) == -log(sigmoid(x))``."""

    return op_apply("softplus", [x])


def square(x: TensorLike) -> Tensor:
    return op_apply("square", [x])


def reduce_sum(x: TensorLike, axis: Optional[int] = None, *, keepdims: bool = False) -> Tensor:
    return op_apply("sum", [x], axis=axis, keepdims=keepdims)


def reduce_mean(x: TensorLike, axis: Optional[int] = None, *, keepdims: bool = False) -> Tensor:
    return op_apply("mean", [x], axis=axis, keepdims=keepdims)


def concat(tensors: Sequence[TensorLike], axis: int = 1) -> Tensor:
    return op_apply("concat", list(tensors), axis=axis)


def slice_(x: TensorLike, start: int, stop: int, axis: int = 1) -> Tensor:
    return op_apply("slice", [x], axis=axis, start=start, stop=stop)


def reshape(x: TensorLike, shape: Sequence[int]) -> Tensor:
    return op_apply("reshape", [x], shape=tuple(shape))


def clamp(x: TensorLike, low: Bound, high: Bound) -> Tensor:
    low_array = np.asarray(low, dtype=np.float64)
    high_array = np.asarray(high, dtype=np.float64)
    if np.any(low_array > high_array):
        raise ShapeError("clamp needs low <= high")
    return op_apply("clamp", [x], low=low_array, high=high_array)


def row_norm(x: TensorLike) -> Tensor:
    """Euclidean norm of every row of a rank-2 tensor, shape ``[B]``."""

    return op_apply("row_norm", [x])


__all__ = [
    "add",
    "clamp",
    "concat",
    "matmul",
    "mul",
    "neg",
    "reduce_mean",
    "reduce_sum",
    "relu",
    "reshape",
    "row_norm",
    "scale",
    "slice_",
    "softplus",
    "square",
    "sub",
    "tanh",
]
