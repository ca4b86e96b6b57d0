"""GradCAM, ScoreCAM, and ScoreCAM++ pipelines over a classifier backend.

The score-based methods share one flow: capture the tap-layer activation
stack, upsample each channel map to input resolution and squash it into a
mask, Hadamard-multiply each mask with the input, run the masked images
through the classifier to score each channel by its confidence change, and
finally ReLU the weighted channel sum.

The two methods differ in two switches, exposed on :class:`CamConfig`:

* ``gate_normalizer``: the per-channel mask squash. Off means min-max
  rescaling to [0, 1] (ScoreCAM); on means the configured gating function,
  tanh by default (ScoreCAM++).
* ``gate_aggregation``: whether the gating function is also applied to the
  activation maps inside the final weighted sum (ScoreCAM++) or the raw
  activations are summed (ScoreCAM).

Masked forwards run in channel batches, optionally across worker threads.
Scores are written by channel index and the final sum runs in ascending
channel order, so results are bit-identical for any batch size or worker
count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import tensor as tn
from .backend import ActivationStack, ClassifierBackend
from .errors import CamScoreError, CapabilityError, ShapeMismatchError
from .tensor import Tensor, softmax_rows

METHODS = ("gradcam", "scorecam", "scorecampp")
GRADIENT_MODES = ("auto", "analytic", "finite_difference")


@dataclass
class CamConfig:
    """Method selection plus the ablation switches.

    ``gate_normalizer`` / ``gate_aggregation`` default to the method's
    canonical setting when left as None: both on for scorecampp, both off
    for scorecam. ``cic_softmax`` optionally renormalizes the channel scores
    with a softmax before aggregation (off by default; the plain
    confidence-increase scores are used as-is).
    """

    method: str = "scorecampp"
    gating_fn: str = "tanh"
    gate_normalizer: bool | None = None
    gate_aggregation: bool | None = None
    cic_softmax: bool = False
    mask_batch_size: int = 32
    target_class: int | str = "predicted"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.gating_fn not in tn.GATING_FUNCTIONS:
            raise ValueError(
                f"unknown gating function {self.gating_fn!r}; expected one of {tn.GATING_FUNCTIONS}"
            )
        if self.mask_batch_size < 1:
            raise ValueError("mask_batch_size must be >= 1")
        if isinstance(self.target_class, str) and self.target_class != "predicted":
            raise ValueError("target_class must be an index or 'predicted'")
        gated = self.method == "scorecampp"
        if self.gate_normalizer is None:
            self.gate_normalizer = gated
        if self.gate_aggregation is None:
            self.gate_aggregation = gated

    def label(self) -> str:
        """Stable identifier used in report rows and artifact filenames."""
        parts = [self.method]
        if self.method == "scorecampp":
            if self.gating_fn != "tanh":
                parts.append(self.gating_fn)
            if not self.gate_normalizer:
                parts.append("nonorm")
            if not self.gate_aggregation:
                parts.append("noagg")
        if self.cic_softmax and self.method != "gradcam":
            parts.append("cicsm")
        return "-".join(parts)


@dataclass(frozen=True)
class CICWeights:
    """Per-channel confidence-increase scores for one target class."""

    class_c: int
    scores: tuple[float, ...]


@dataclass(frozen=True)
class SaliencyMap:
    """Saliency at activation resolution plus its renderable form.

    ``raw`` is the ReLU-clamped weighted channel sum at tap resolution;
    ``normalized_full`` is raw upsampled to input resolution and min-max
    rescaled to [0, 1].
    """

    raw: Tensor
    normalized_full: Tensor


@dataclass(frozen=True)
class Explanation:
    """One method run on one input: the map plus the forward-pass context."""

    saliency: SaliencyMap
    class_c: int
    logits: Tensor
    probs: Tensor
    weights: CICWeights | None
    method: str


def build_masks(stack: ActivationStack, cfg: CamConfig, input_h: int, input_w: int) -> Tensor:
    """Per-channel masks: upsample each activation map, then squash it.

    Returns a (K, input_h, input_w) tensor. The squash is min-max when
    ``cfg.gate_normalizer`` is off, else the configured gating function.
    Upsampling happens before the squash.
    """
    maps = stack.maps
    out = np.empty((maps.shape[0], input_h, input_w), dtype=np.float64)
    for k in range(maps.shape[0]):
        up = tn.bilinear_upsample(Tensor(maps.data[k]), input_h, input_w)
        if cfg.gate_normalizer:
            mask = tn.gating(up, cfg.gating_fn)
        else:
            mask = tn.minmax_normalize(up)
        out[k] = mask.data
    return Tensor(out)


def cic_scores(
    backend: ClassifierBackend,
    x: Tensor,
    class_c: int,
    masks: Tensor,
    cfg: CamConfig,
    workers: int = 1,
    baseline_prob: float | None = None,
) -> CICWeights:
    """Channel-wise increase of confidence: f(x o mask_k) - f(x).

    f is the softmax probability of ``class_c``. The baseline f(x) is
    computed once (or passed in by a caller that already ran the forward).
    Masks are broadcast across the image's channel axis. Channel batches may
    run on worker threads; every score lands in a fixed per-channel slot, so
    the result is independent of scheduling.
    """
    if masks.ndim != 3 or masks.shape[1:] != x.shape[1:]:
        raise ShapeMismatchError(f"masks {masks.shape} do not match input {x.shape}")
    k_total = masks.shape[0]
    if baseline_prob is None:
        _, probs = backend.forward(x)
        baseline_prob = float(probs.data[class_c])

    xd = x.data
    md = masks.data
    scores = np.empty(k_total, dtype=np.float64)
    batches = [
        (k0, min(k0 + cfg.mask_batch_size, k_total))
        for k0 in range(0, k_total, cfg.mask_batch_size)
    ]

    def run(bounds: tuple[int, int]) -> None:
        k0, k1 = bounds
        try:
            masked = xd[None, :, :, :] * md[k0:k1, None, :, :]
            logits = backend.forward_batch(masked)
            scores[k0:k1] = softmax_rows(logits)[:, class_c] - baseline_prob
        except CamScoreError:
            raise
        except Exception as exc:
            raise CamScoreError(f"masked forward failed for channels {k0}..{k1 - 1}: {exc}") from exc

    if workers <= 1 or len(batches) == 1:
        for bounds in batches:
            run(bounds)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(run, bounds) for bounds in batches]:
                fut.result()
    return CICWeights(class_c=class_c, scores=tuple(float(s) for s in scores))


def explain(
    backend: ClassifierBackend,
    x: Tensor,
    cfg: CamConfig,
    layer_id: str | None = None,
    workers: int = 1,
    gradient_mode: str = "auto",
) -> Explanation:
    """Run one CAM method end to end on one preprocessed input."""
    layer = _resolve_layer(backend, layer_id)
    _, input_h, input_w = x.shape
    logits, probs, stack = backend.forward_with_tap(x, layer)
    class_c = _resolve_class(backend, probs, cfg.target_class)

    if cfg.method == "gradcam":
        grads = _gradients(backend, x, class_c, layer, mode=gradient_mode)
        alpha = [float(np.mean(grads.data[k])) for k in range(stack.channels)]
        cic = None
        gate = None
        weights = alpha
    else:
        masks = build_masks(stack, cfg, input_h, input_w)
        cic = cic_scores(
            backend, x, class_c, masks, cfg,
            workers=workers, baseline_prob=float(probs.data[class_c]),
        )
        weights = list(cic.scores)
        if cfg.cic_softmax:
            weights = list(tn.softmax(Tensor(weights)).data)
        gate = cfg.gating_fn if (cfg.method == "scorecampp" and cfg.gate_aggregation) else None

    maps = stack.maps if gate is None else tn.gating(stack.maps, gate)
    raw = tn.relu_map(tn.weighted_channel_sum(maps, weights))
    up = tn.bilinear_upsample(raw, input_h, input_w)
    saliency = SaliencyMap(raw=raw, normalized_full=tn.minmax_normalize(up))
    return Explanation(
        saliency=saliency, class_c=class_c, logits=logits, probs=probs,
        weights=cic, method=cfg.method,
    )


def scorecam(
    backend: ClassifierBackend,
    x: Tensor,
    class_c: int | str = "predicted",
    layer_id: str | None = None,
    workers: int = 1,
) -> SaliencyMap:
    """ScoreCAM: min-max masks, confidence-increase weights, raw aggregation."""
    cfg = CamConfig(method="scorecam", target_class=class_c)
    return explain(backend, x, cfg, layer_id=layer_id, workers=workers).saliency


def scorecampp(
    backend: ClassifierBackend,
    x: Tensor,
    class_c: int | str = "predicted",
    layer_id: str | None = None,
    cfg: CamConfig | None = None,
    workers: int = 1,
) -> SaliencyMap:
    """ScoreCAM++: gated masks and gated aggregation (tanh by default)."""
    if cfg is None:
        cfg = CamConfig(method="scorecampp", target_class=class_c)
    elif cfg.method != "scorecampp":
        raise ValueError("cfg.method must be 'scorecampp'")
    return explain(backend, x, cfg, layer_id=layer_id, workers=workers).saliency


def gradcam(
    backend: ClassifierBackend,
    x: Tensor,
    class_c: int | str = "predicted",
    layer_id: str | None = None,
    gradient_mode: str = "auto",
) -> SaliencyMap:
    """GradCAM: channel weights are spatial means of the class-logit gradient."""
    cfg = CamConfig(method="gradcam", target_class=class_c)
    return explain(backend, x, cfg, layer_id=layer_id, gradient_mode=gradient_mode).saliency


def _resolve_class(backend: ClassifierBackend, probs: Tensor, target) -> int:
    if target == "predicted":
        # np.argmax returns the first maximum, i.e. the lowest tied index.
        return int(np.argmax(probs.data))
    c = int(target)
    if not 0 <= c < backend.num_classes:
        raise ValueError(f"class index {c} out of range for {backend.num_classes} classes")
    return c


def _resolve_layer(backend: ClassifierBackend, layer_id: str | None) -> str:
    if layer_id is None:
        if not backend.tap_layers:
            raise CapabilityError("backend declares no tap layers")
        return backend.tap_layers[-1]
    return layer_id


def _gradients(
    backend: ClassifierBackend,
    x: Tensor,
    class_c: int,
    layer_id: str,
    mode: str = "auto",
) -> Tensor:
    if mode not in GRADIENT_MODES:
        raise ValueError(f"unknown gradient mode {mode!r}; expected one of {GRADIENT_MODES}")
    if mode == "analytic" or (mode == "auto" and backend.supports_analytic_gradient):
        return backend.analytic_gradient(x, class_c, layer_id)
    if mode == "finite_difference" or backend.supports_forward_from:
        return finite_difference_gradient(backend, x, class_c, layer_id)
    raise CapabilityError("backend supports neither analytic gradients nor forward_from")


def finite_difference_gradient(
    backend: ClassifierBackend,
    x: Tensor,
    class_c: int,
    layer_id: str,
    chunk: int = 256,
) -> Tensor:
    """Central-difference gradient of logit[class_c] w.r.t. tap activations.

    Per-element step eps = max(1e-4, 1e-4 * |a|), which stays stable across
    activation scales. Uses the backend's resume-from-tap forward path.
    """
    if not backend.supports_forward_from:
        raise CapabilityError("finite differences require forward_from support")
    _, _, stack = backend.forward_with_tap(x, layer_id)
    shape = stack.maps.shape
    base = stack.maps.data.ravel()
    n = base.size
    eps = np.maximum(1e-4, 1e-4 * np.abs(base))

    batch_eval = getattr(backend, "forward_from_batch", None)

    def suffix_logits(flat_batch: np.ndarray) -> np.ndarray:
        stacks = flat_batch.reshape((-1,) + shape)
        if batch_eval is not None:
            return np.asarray(batch_eval(stacks))
        rows = [
            backend.forward_from(layer_id, ActivationStack(layer_id, Tensor(stacks[i]))).data
            for i in range(stacks.shape[0])
        ]
        return np.stack(rows)

    grad = np.empty(n, dtype=np.float64)
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        rows = np.arange(i1 - i0)
        idx = np.arange(i0, i1)
        plus = np.tile(base, (i1 - i0, 1))
        minus = plus.copy()
        plus[rows, idx] += eps[idx]
        minus[rows, idx] -= eps[idx]
        lp = suffix_logits(plus)[:, class_c]
        lm = suffix_logits(minus)[:, class_c]
        grad[i0:i1] = (lp - lm) / (2.0 * eps[idx])
    return Tensor(grad.reshape(shape))
