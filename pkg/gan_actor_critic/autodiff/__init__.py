"""Reverse-mode automatic differentiation over dense float64 tensors."""

from . import functional
from .gradcheck import finite_diff_check
from .tensor import (
    ComputationTape,
    GradientMap,
    Tensor,
    active_tape,
    as_tensor,
    backward,
    no_grad,
    op_apply,
    registered_primitives,
)

__all__ = [
    "ComputationTape",
    "GradientMap",
    "Tensor",
    "active_tape",
    "as_tensor",
    "backward",
    "finite_diff_check",
    "functional",
    "no_grad",
    "op_apply",
    "registered_primitives",
]
