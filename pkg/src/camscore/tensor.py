"""Dense float64 tensor type and the elementwise math the CAM pipeline uses.

Everything here is a pure function over immutable :class:`Tensor` values, so
any number of threads may call these concurrently. Reductions run in a fixed
order, which keeps results bit-reproducible regardless of caller parallelism.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import NumericError, ShapeMismatchError

GATING_FUNCTIONS = ("tanh", "relu", "sigmoid", "swish", "mish")


class Tensor:
    """Immutable N-dimensional array of finite 64-bit floats.

    Data is stored flat in row-major order behind a read-only NumPy view.
    Constructors reject NaN/Inf and zero-sized extents.
    """

    __slots__ = ("_data",)

    def __init__(self, values, shape: Sequence[int] | None = None):
        arr = np.array(values, dtype=np.float64, order="C")
        if shape is not None:
            arr = arr.reshape(tuple(shape))
        if arr.ndim == 0 or arr.size == 0:
            raise ShapeMismatchError(f"tensor extents must all be positive, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NumericError("tensor values must be finite")
        arr.flags.writeable = False
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        """Read-only NumPy view of the values."""
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def item(self) -> float:
        if self._data.size != 1:
            raise ShapeMismatchError("item() requires a single-element tensor")
        return float(self._data.reshape(-1)[0])

    def tolist(self):
        return self._data.tolist()

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


def _wrap(arr: np.ndarray) -> Tensor:
    if not np.all(np.isfinite(arr)):
        raise NumericError("operation produced a non-finite value")
    return Tensor(arr)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of two same-shaped tensors."""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"hadamard shapes differ: {a.shape} vs {b.shape}")
    with np.errstate(over="ignore"):
        out = a.data * b.data
    return _wrap(out)


def minmax_normalize(a: Tensor) -> Tensor:
    """Rescale to [0, 1] via (a - min) / (max - min).

    A constant input (max == min) maps to all zeros rather than dividing
    by zero.
    """
    lo = float(a.data.min())
    hi = float(a.data.max())
    if hi == lo:
        return Tensor(np.zeros(a.shape))
    return _wrap((a.data - lo) / (hi - lo))


# float64 rounds tanh(x) to exactly +-1.0 once |x| exceeds ~19; nudge those
# back so outputs stay strictly inside (-1, 1).
_TANH_LIMIT = np.nextafter(1.0, 0.0)


def tanh_map(a: Tensor) -> Tensor:
    """Elementwise hyperbolic tangent; outputs lie strictly in (-1, 1)."""
    return _wrap(np.clip(np.tanh(a.data), -_TANH_LIMIT, _TANH_LIMIT))


def relu_map(a: Tensor) -> Tensor:
    """Elementwise max(0, x)."""
    return _wrap(np.maximum(0.0, a.data))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + e^x), computed as max(x, 0) + log1p(e^-|x|) for stability.
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def gating(a: Tensor, fn: str) -> Tensor:
    """Apply one of the selectable elementwise gates.

    fn is one of ``tanh``, ``relu``, ``sigmoid``, ``swish`` (x * sigmoid(x))
    or ``mish`` (x * tanh(softplus(x))).
    """
    if fn == "tanh":
        return tanh_map(a)
    if fn == "relu":
        return relu_map(a)
    if fn == "sigmoid":
        return _wrap(_sigmoid(a.data))
    if fn == "swish":
        return _wrap(a.data * _sigmoid(a.data))
    if fn == "mish":
        return _wrap(a.data * np.tanh(_softplus(a.data)))
    raise ValueError(f"unknown gating function {fn!r}; expected one of {GATING_FUNCTIONS}")


def softmax(a: Tensor) -> Tensor:
    """Stable softmax of a 1-D tensor (max-subtracted exponentials)."""
    if a.ndim != 1:
        raise ShapeMismatchError(f"softmax expects a 1-D tensor, got shape {a.shape}")
    return _wrap(softmax_rows(a.data[None, :])[0])


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax of a (B, M) array. Internal helper."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=1, keepdims=True)


def bilinear_upsample(a: Tensor, out_h: int, out_w: int) -> Tensor:
    """Resize a 2-D map with bilinear interpolation.

    Samples at half-pixel centers (``src = (dst + 0.5) * ratio - 0.5``,
    clamped to the source grid), so constants are preserved exactly and all
    outputs stay inside [min(a), max(a)].
    """
    if a.ndim != 2:
        raise ShapeMismatchError(f"bilinear_upsample expects a 2-D tensor, got shape {a.shape}")
    if out_h < 1 or out_w < 1:
        raise ShapeMismatchError("output extents must be positive")
    out = kernels.bilinear_resize(np.ascontiguousarray(a.data[None, :, :]), out_h, out_w)
    return _wrap(out[0])


def weighted_channel_sum(maps: Tensor, weights: Iterable[float]) -> Tensor:
    """Sum of per-channel maps scaled by per-channel weights.

    maps has shape (K, h, w). Channels are accumulated in ascending order,
    independent of any caller-side parallelism.
    """
    w = [float(v) for v in weights]
    if maps.ndim != 3:
        raise ShapeMismatchError(f"expected a (K, h, w) stack, got shape {maps.shape}")
    if len(w) != maps.shape[0]:
        raise ShapeMismatchError(f"{maps.shape[0]} channels but {len(w)} weights")
    acc = np.zeros(maps.shape[1:], dtype=np.float64)
    for k in range(maps.shape[0]):
        acc += w[k] * maps.data[k]
    return _wrap(acc)
