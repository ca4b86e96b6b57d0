"""Classifier abstraction with activation capture, plus the reference CNN.

A backend wraps one classifier: it exposes deterministic forward inference,
named tap layers whose post-activation feature maps can be captured, and
(optionally) a resume-from-layer forward path and analytic gradients. The
bundled :class:`ReferenceCNN` supports everything and is small enough to be
checked against straight-line scalar arithmetic.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CapabilityError, NumericError, ShapeMismatchError
from .preprocess import PreprocessSpec
from .tensor import Tensor, softmax_rows


@dataclass(frozen=True)
class ActivationStack:
    """The K post-activation channel maps of one tapped layer."""

    layer_id: str
    maps: Tensor  # (K, h, w)

    def __post_init__(self):
        if self.maps.ndim != 3:
            raise ShapeMismatchError(f"activation stack must be (K, h, w), got {self.maps.shape}")

    @property
    def channels(self) -> int:
        return self.maps.shape[0]


class ClassifierBackend(ABC):
    """Deterministic classifier with named intermediate tap points.

    Implementations must guarantee that two forwards on identical input give
    bit-identical logits, and that tapping a layer never perturbs the logits.
    A loaded backend is immutable; concurrent forwards from multiple threads
    are safe.
    """

    @property
    @abstractmethod
    def input_shape(self) -> tuple[int, int, int]:
        """Expected input extents (C, H, W)."""

    @property
    @abstractmethod
    def num_classes(self) -> int:
        ...

    @property
    @abstractmethod
    def tap_layers(self) -> tuple[str, ...]:
        ...

    @property
    def supports_forward_from(self) -> bool:
        return False

    @property
    def supports_analytic_gradient(self) -> bool:
        return False

    @property
    def preprocess_spec(self) -> PreprocessSpec:
        return PreprocessSpec()

    def describe(self) -> dict:
        """Capability descriptor."""
        return {
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
            "tap_layers": list(self.tap_layers),
            "supports_forward_from": self.supports_forward_from,
            "supports_analytic_gradient": self.supports_analytic_gradient,
        }

    @abstractmethod
    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """Run inference; returns (logits, probs) with probs = softmax(logits)."""

    @abstractmethod
    def forward_with_tap(self, x: Tensor, layer_id: str) -> tuple[Tensor, Tensor, ActivationStack]:
        """Like forward, additionally capturing the named layer's activations."""

    def forward_from(self, layer_id: str, stack: ActivationStack) -> Tensor:
        raise CapabilityError(f"{type(self).__name__} does not support forward_from")

    def analytic_gradient(self, x: Tensor, class_c: int, layer_id: str) -> Tensor:
        raise CapabilityError(f"{type(self).__name__} does not support analytic gradients")

    def forward_batch(self, xs: np.ndarray) -> np.ndarray:
        """Logits for a (B, C, H, W) batch; default loops over forward()."""
        return np.stack([self.forward(Tensor(xs[i]))[0].data for i in range(xs.shape[0])])

    def _check_input(self, x: Tensor) -> None:
        if x.shape != self.input_shape:
            raise ShapeMismatchError(f"input shape {x.shape} != expected {self.input_shape}")


class ReferenceCNN(ClassifierBackend):
    """Bundled deterministic CNN: conv3x3-relu-pool / conv3x3-relu-pool / dense.

    The single tap layer is ``pool2``, the pooled output of the last
    convolution block, so the network suffix after the tap is the flatten
    plus the dense readout. Flattening is row-major over (channel, row,
    col), which fixes the meaning of each dense weight column.

    All arithmetic is float64. Parameters are kept exactly as constructed;
    the weight-file round trip stores them as float32 (see camscore.weights).
    """

    TAP_LAYER = "pool2"

    def __init__(
        self,
        conv1_w,
        conv1_b,
        conv2_w,
        conv2_b,
        dense_w,
        dense_b,
        input_shape: tuple[int, int, int] = (3, 64, 64),
        seed: int | None = None,
    ):
        self._conv1_w = _param(conv1_w, 4, "conv1 weights")
        self._conv1_b = _param(conv1_b, 1, "conv1 bias")
        self._conv2_w = _param(conv2_w, 4, "conv2 weights")
        self._conv2_b = _param(conv2_b, 1, "conv2 bias")
        self._dense_w = _param(dense_w, 2, "dense weights")
        self._dense_b = _param(dense_b, 1, "dense bias")
        self._input_shape = tuple(int(v) for v in input_shape)
        self._seed = seed

        c, h, w = self._input_shape
        if h % 4 or w % 4:
            raise ShapeMismatchError("input height and width must be divisible by 4")
        if self._conv1_w.shape[1] != c or self._conv1_w.shape[2:] != (3, 3):
            raise ShapeMismatchError(f"conv1 weights {self._conv1_w.shape} do not fit input {self._input_shape}")
        if self._conv2_w.shape[1] != self._conv1_w.shape[0] or self._conv2_w.shape[2:] != (3, 3):
            raise ShapeMismatchError("conv2 input channels do not match conv1 output channels")
        if self._conv1_b.shape[0] != self._conv1_w.shape[0] or self._conv2_b.shape[0] != self._conv2_w.shape[0]:
            raise ShapeMismatchError("conv bias length does not match channel count")
        k = self._conv2_w.shape[0]
        self._tap_shape = (k, h // 4, w // 4)
        flat = k * (h // 4) * (w // 4)
        if self._dense_w.shape[1] != flat:
            raise ShapeMismatchError(f"dense expects {self._dense_w.shape[1]} features, tap provides {flat}")
        if self._dense_b.shape[0] != self._dense_w.shape[0]:
            raise ShapeMismatchError("dense bias length does not match class count")

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return self._input_shape

    @property
    def num_classes(self) -> int:
        return self._dense_w.shape[0]

    @property
    def tap_layers(self) -> tuple[str, ...]:
        return (self.TAP_LAYER,)

    @property
    def tap_shape(self) -> tuple[int, int, int]:
        """(K, h, w) extents of the tapped activation stack."""
        return self._tap_shape

    @property
    def seed(self) -> int | None:
        """Generator seed if the weights came from generate_reference()."""
        return self._seed

    @property
    def supports_forward_from(self) -> bool:
        return True

    @property
    def supports_analytic_gradient(self) -> bool:
        return True

    @property
    def preprocess_spec(self) -> PreprocessSpec:
        _, h, w = self._input_shape
        return PreprocessSpec(resize_h=h, resize_w=w)

    @property
    def parameters(self) -> dict[str, np.ndarray]:
        """Named parameter arrays in payload order."""
        return {
            "conv1.weight": self._conv1_w,
            "conv1.bias": self._conv1_b,
            "conv2.weight": self._conv2_w,
            "conv2.bias": self._conv2_b,
            "dense.weight": self._dense_w,
            "dense.bias": self._dense_b,
        }

    def _core(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a = kernels.conv2d(xs, self._conv1_w, self._conv1_b)
        a = np.maximum(a, 0.0)
        a = kernels.maxpool2(a)
        a = kernels.conv2d(a, self._conv2_w, self._conv2_b)
        a = np.maximum(a, 0.0)
        taps = kernels.maxpool2(a)
        flat = taps.reshape(xs.shape[0], -1)
        logits = kernels.dense(flat, self._dense_w, self._dense_b)
        return logits, taps

    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        self._check_input(x)
        logits, _ = self._core(x.data[None])
        return Tensor(logits[0]), Tensor(softmax_rows(logits)[0])

    def forward_with_tap(self, x: Tensor, layer_id: str) -> tuple[Tensor, Tensor, ActivationStack]:
        self._check_input(x)
        self._check_layer(layer_id)
        logits, taps = self._core(x.data[None])
        stack = ActivationStack(layer_id, Tensor(taps[0]))
        return Tensor(logits[0]), Tensor(softmax_rows(logits)[0]), stack

    def forward_from(self, layer_id: str, stack: ActivationStack) -> Tensor:
        self._check_layer(layer_id)
        if stack.maps.shape != self._tap_shape:
            raise ShapeMismatchError(f"stack shape {stack.maps.shape} != tap shape {self._tap_shape}")
        return Tensor(self.forward_from_batch(stack.maps.data[None])[0])

    def forward_from_batch(self, stacks: np.ndarray) -> np.ndarray:
        """Suffix logits for a (B, K, h, w) batch of tap activations."""
        if tuple(stacks.shape[1:]) != self._tap_shape:
            raise ShapeMismatchError(f"stack shape {stacks.shape[1:]} != tap shape {self._tap_shape}")
        flat = np.ascontiguousarray(stacks.reshape(stacks.shape[0], -1))
        return kernels.dense(flat, self._dense_w, self._dense_b)

    def forward_batch(self, xs: np.ndarray) -> np.ndarray:
        if tuple(xs.shape[1:]) != self._input_shape:
            raise ShapeMismatchError(f"batch item shape {xs.shape[1:]} != expected {self._input_shape}")
        return self._core(np.ascontiguousarray(xs))[0]

    def analytic_gradient(self, x: Tensor, class_c: int, layer_id: str) -> Tensor:
        """d logit[class_c] / d tap activations, shape (K, h, w).

        The suffix after the tap is linear (flatten + dense), so the gradient
        is the class row of the dense weights, reshaped.
        """
        self._check_input(x)
        self._check_layer(layer_id)
        if not 0 <= class_c < self.num_classes:
            raise ValueError(f"class index {class_c} out of range for {self.num_classes} classes")
        return Tensor(self._dense_w[class_c].reshape(self._tap_shape))

    def _check_layer(self, layer_id: str) -> None:
        if layer_id not in self.tap_layers:
            raise ValueError(f"unknown tap layer {layer_id!r}; available: {list(self.tap_layers)}")


def _param(values, ndim: int, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
    if arr.ndim != ndim:
        raise ShapeMismatchError(f"{what} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{what} contain non-finite values")
    arr.flags.writeable = False
    return arr
