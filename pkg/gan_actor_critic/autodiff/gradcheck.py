from __future__ import annotations

from typing import Callable

import numpy as np

from gan_actor_critic.core.errors import NonFiniteError, TapeError

from .tensor import Array, ComputationTape, Tensor, no_grad

ScalarFn = Callable[[Tensor], Tensor]


def finite_diff_check(f: ScalarFn, x: Tensor, eps: float = 1e-6, *, floor: float = 1e-12) -> float:
    """Compare reverse-mode gradients of ``f`` at ``x`` with central differences.

    Returns ``max_i |analytic_i - numeric_i| / (|numeric_i| + floor)``. ``f``
    must map a tensor shaped like ``x`` to a scalar tensor and be
    deterministic. Raising ``floor`` turns the measure into an absolute error
    for coordinates whose true gradient is close to zero.
    """

    if eps <= 0.0:
        raise ValueError("eps must be positive")

    base = np.array(x.data, dtype=np.float64)
    leaf = Tensor(base, requires_grad=True)
    with ComputationTape() as tape:
        loss = f(leaf)
    analytic = tape.backward(loss).get_or_zeros(leaf).reshape(-1)

    flat = base.reshape(-1)
    numeric = np.zeros_like(flat)
    for coordinate in range(flat.size):
        plus = flat.copy()
        plus[coordinate] += eps
        minus = flat.copy()
        minus[coordinate] -= eps
        upper = _evaluate(f, plus.reshape(base.shape), coordinate)
        lower = _evaluate(f, minus.reshape(base.shape), coordinate)
        numeric[coordinate] = (upper - lower) / (2.0 * eps)

    errors = np.abs(analytic - numeric) / (np.abs(numeric) + floor)
    return float(np.max(errors)) if errors.size else 0.0


def _evaluate(f: ScalarFn, values: Array, coordinate: int) -> float:
    try:
        with no_grad():
            out = f(Tensor(values))
    except NonFiniteError as exc:
        raise NonFiniteError(
            f"Function became non-finite when perturbing coordinate {coordinate}: {exc}",
            op=exc.op,
            coordinate=coordinate,
        ) from exc
    if out.ndim != 0:
        raise TapeError(f"finite_diff_check needs a scalar function, got shape {out.shape}")
    return out.item()


__all__ = ["finite_diff_check"]
