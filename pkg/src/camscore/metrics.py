"""Saliency evaluation metrics over per-image confidence records.

Four aggregates per method, matching the usual CAM evaluation suite:

* Average Drop %  - mean relative confidence loss when the classifier sees
  only the explanation-masked input (lower is better).
* Increase in Confidence - share of images whose masked-input confidence
  strictly exceeds the full-image confidence (higher is better).
* Win % - share of images on which the method's confidence drop is the
  smallest among all compared methods; ties are shared, every minimizer
  wins (higher is better).
* Average Drop in Logit - mean decrease of the target-class logit when the
  salient region is removed from the image (higher is better).

Record sums use math.fsum, so every aggregate is invariant under record
ordering. Percentages are computed as ``100 * count / N`` in one division,
which keeps complementary percentages summing to exactly 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .engine import SaliencyMap
from .errors import NumericError, ShapeMismatchError
from .tensor import Tensor

METRIC_NAMES = (
    "Average Drop %",
    "Increase in Confidence",
    "Win %",
    "Average Drop in Logit",
)


@dataclass(frozen=True)
class ConfidenceRecord:
    """Confidences and logits for one (image, method, class) evaluation.

    y_full / o_masked are target-class softmax probabilities on the whole
    image and on the explanation-masked image. logit_full / logit_removed
    are the target-class raw logits on the whole image and on the image
    with the salient region removed.
    """

    image_id: str
    method_id: str
    class_c: int
    y_full: float
    o_masked: float
    logit_full: float
    logit_removed: float

    def __post_init__(self):
        for name in ("y_full", "o_masked"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not (math.isfinite(self.logit_full) and math.isfinite(self.logit_removed)):
            raise NumericError("record logits must be finite")


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated metrics per method over N images."""

    n_images: int
    per_method: dict[str, dict[str, float]]

    def methods(self) -> list[str]:
        return list(self.per_method)


def masked_input(x: Tensor, saliency: SaliencyMap) -> Tensor:
    """The input weighted by the normalized saliency map (soft mask)."""
    mask = _check_mask(x, saliency)
    return Tensor(x.data * mask[None, :, :])


def removed_input(x: Tensor, saliency: SaliencyMap) -> Tensor:
    """The input with the salient region suppressed: x o (1 - mask).

    Computed as x minus the masked input so that masked + removed
    reconstructs x (exactly for 0/1 masks, to within one rounding in
    general).
    """
    mask = _check_mask(x, saliency)
    return Tensor(x.data - x.data * mask[None, :, :])


def _check_mask(x: Tensor, saliency: SaliencyMap) -> np.ndarray:
    mask = saliency.normalized_full.data
    if x.ndim != 3 or x.shape[1:] != mask.shape:
        raise ShapeMismatchError(f"saliency {mask.shape} does not match input {x.shape}")
    return mask


def average_drop(records: Sequence[ConfidenceRecord]) -> float:
    """Mean of max(0, y - O) / y over records, as a percentage.

    A record with y == 0 contributes zero (there is no confidence to lose).
    """
    _require_nonempty(records)
    terms = [
        0.0 if r.y_full == 0.0 else max(0.0, r.y_full - r.o_masked) / r.y_full
        for r in records
    ]
    return math.fsum(terms) * 100.0 / len(records)


def increase_in_confidence(records: Sequence[ConfidenceRecord]) -> float:
    """Percentage of records with o_masked strictly above y_full."""
    _require_nonempty(records)
    hits = sum(1 for r in records if r.y_full < r.o_masked)
    return 100.0 * hits / len(records)


def win_percentage(records: Iterable[ConfidenceRecord]) -> dict[str, float]:
    """Per-method percentage of images where its confidence drop is minimal.

    The drop is the raw difference y - O. Requires at least two methods and
    a record for every (image, method) pair. Ties are shared: every method
    attaining the per-image minimum collects a win, so with ties the
    percentages can sum past 100.
    """
    drops: dict[str, dict[str, float]] = {}
    methods: list[str] = []
    for r in records:
        if r.method_id not in methods:
            methods.append(r.method_id)
        per_image = drops.setdefault(r.image_id, {})
        if r.method_id in per_image:
            raise ValueError(f"duplicate record for image {r.image_id!r} method {r.method_id!r}")
        per_image[r.method_id] = r.y_full - r.o_masked
    if len(methods) < 2:
        raise ValueError("win percentage needs records from at least two methods")
    wins = {m: 0 for m in methods}
    for image_id, per_image in drops.items():
        missing = [m for m in methods if m not in per_image]
        if missing:
            raise ValueError(f"image {image_id!r} lacks records for methods {missing}")
        best = min(per_image.values())
        for m, d in per_image.items():
            if d == best:
                wins[m] += 1
    n = len(drops)
    return {m: 100.0 * wins[m] / n for m in methods}


def average_logit_drop(records: Sequence[ConfidenceRecord]) -> float:
    """Mean of (logit_full - logit_removed) over records."""
    _require_nonempty(records)
    return math.fsum(r.logit_full - r.logit_removed for r in records) / len(records)


def aggregate_report(records: Sequence[ConfidenceRecord]) -> MetricsReport:
    """Group records by method and compute all four aggregates.

    With a single method the Win % column is trivially 100 (the method is
    its own minimizer on every image).
    """
    _require_nonempty(records)
    by_method: dict[str, list[ConfidenceRecord]] = {}
    for r in records:
        by_method.setdefault(r.method_id, []).append(r)
    if len(by_method) >= 2:
        win = win_percentage(records)
    else:
        win = {m: 100.0 for m in by_method}
    n_images = len({r.image_id for r in records})
    per_method = {
        m: {
            METRIC_NAMES[0]: average_drop(rs),
            METRIC_NAMES[1]: increase_in_confidence(rs),
            METRIC_NAMES[2]: win[m],
            METRIC_NAMES[3]: average_logit_drop(rs),
        }
        for m, rs in by_method.items()
    }
    return MetricsReport(n_images=n_images, per_method=per_method)


def _require_nonempty(records: Sequence[ConfidenceRecord]) -> None:
    if not records:
        raise ValueError("need at least one record")
