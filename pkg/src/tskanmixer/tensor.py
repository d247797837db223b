"""Dense float64 array primitives with hand-written backward passes.

Arrays are plain ``numpy.ndarray`` objects of dtype float64. Every op checks
its output for NaN/Inf and raises :class:`NonFiniteError` instead of letting
bad values travel further down the network.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

DTYPE = np.float64


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class NonFiniteError(FloatingPointError):
    """An operation produced NaN or Inf."""


def as_tensor(data) -> np.ndarray:
    """Copy ``data`` into a contiguous float64 array."""
    return np.array(data, dtype=DTYPE, order="C")


def check_finite(x: np.ndarray, where: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        bad = int(np.size(x) - np.count_nonzero(np.isfinite(x)))
        raise NonFiniteError(f"{where}: {bad} non-finite value(s) in output of shape {x.shape}")
    return x


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product ``a @ b``; leading (batch) dimensions broadcast."""
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
    try:
        out = np.matmul(a, b)
    except ValueError as exc:
        raise ShapeError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}") from exc
    return check_finite(out, "matmul")


def matmul_backward(a: np.ndarray, b: np.ndarray, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``a @ b`` w.r.t. ``a`` and ``b`` given the upstream ``grad``.

    Broadcast batch dimensions are summed out so each gradient has the shape
    of its operand.
    """
    ga = np.matmul(grad, np.swapaxes(b, -1, -2))
    gb = np.matmul(np.swapaxes(a, -1, -2), grad)
    return _unbroadcast(ga, np.shape(a)), _unbroadcast(gb, np.shape(b))


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def transpose_time_feature(x: np.ndarray) -> np.ndarray:
    """Swap the time and feature axes of a ``[B, L, C]`` array."""
    if np.ndim(x) != 3:
        raise ShapeError(f"transpose_time_feature expects a rank-3 array, got shape {np.shape(x)}")
    return np.ascontiguousarray(np.swapaxes(x, 1, 2))


@dataclass(frozen=True)
class Activation:
    """A pointwise function paired with its derivative."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]


def _sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=DTYPE)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _silu(x):
    return x * _sigmoid(x)


def _dsilu(x):
    s = _sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


relu = Activation("relu", lambda x: np.maximum(x, 0.0), lambda x: (x > 0).astype(DTYPE))
silu = Activation("silu", _silu, _dsilu)
sigmoid = Activation("sigmoid", _sigmoid, lambda x: _sigmoid(x) * (1.0 - _sigmoid(x)))


def elementwise(x: np.ndarray, act: Activation) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    return check_finite(act.f(x), act.name)


def elementwise_backward(x: np.ndarray, act: Activation, grad: np.ndarray) -> np.ndarray:
    return grad * act.df(np.asarray(x, dtype=DTYPE))
