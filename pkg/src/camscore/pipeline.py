"""End-to-end batch tool: images in, saliency maps, overlays and reports out.

For every image x method pair the runner renders a saliency PNG and an
overlay PNG and collects a confidence record (full-image confidence,
masked-input confidence, and the target-class logits with and without the
salient region). Records are aggregated into the metric report and written
as CSV or JSON.

Reruns are byte-identical: records are assembled in input order, floats are
serialized with repr, and nothing timing- or worker-dependent enters the
artifacts. Images may be processed by a thread pool; within one image the
masked forwards are channel-batched by the engine.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import engine, metrics, render
from .backend import ClassifierBackend
from .errors import PipelineError
from .metrics import ConfidenceRecord, MetricsReport, aggregate_report, masked_input, removed_input
from .preprocess import load_image, preprocess_array
from .weights import generate_reference, load_weights

OVERLAY_ALPHA = 0.5
REPORT_FORMATS = ("csv", "json")


@dataclass
class RunConfig:
    """Configuration for one batch run."""

    image_paths: list[str] = field(default_factory=list)
    methods: list[engine.CamConfig] = field(default_factory=list)
    model_path: str | None = None
    tap_layer: str | None = None
    output_dir: str = "camscore-out"
    report_format: str = "json"
    mask_batch_size: int = 32
    worker_count: int = 1
    seed: int = 42

    def __post_init__(self):
        if self.report_format not in REPORT_FORMATS:
            raise ValueError(f"report_format must be one of {REPORT_FORMATS}")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")


@dataclass
class BatchResult:
    report: MetricsReport
    records: list[ConfidenceRecord]
    artifacts: list[Path]
    failures: list[tuple[str, str]]
    report_path: Path


def resolve_backend(cfg: RunConfig) -> ClassifierBackend:
    """Load the configured weight file, or generate the seeded reference CNN."""
    if cfg.model_path:
        return load_weights(cfg.model_path)
    return generate_reference(cfg.seed)


def run_batch(cfg: RunConfig, backend: ClassifierBackend | None = None) -> BatchResult:
    """Run every configured method on every image and write all artifacts."""
    if not cfg.image_paths:
        raise PipelineError("no input images given")
    if not cfg.methods:
        raise PipelineError("no methods configured")
    backend = backend if backend is not None else resolve_backend(cfg)
    methods = [replace(m, mask_batch_size=cfg.mask_batch_size) for m in cfg.methods]

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    image_ids = _unique_ids([Path(p).stem for p in cfg.image_paths])
    labels = _unique_ids([m.label() for m in methods])

    def process(index: int):
        path = cfg.image_paths[index]
        image_id = image_ids[index]
        rgb = load_image(path)
        x = preprocess_array(rgb, backend.preprocess_spec)
        records: list[ConfidenceRecord] = []
        artifacts: list[Path] = []
        for method, label in zip(methods, labels):
            exp = engine.explain(backend, x, method, layer_id=cfg.tap_layer)
            c = exp.class_c
            masked = masked_input(x, exp.saliency)
            removed = removed_input(x, exp.saliency)
            masked_logits, masked_probs = backend.forward(masked)
            removed_logits, _ = backend.forward(removed)
            records.append(ConfidenceRecord(
                image_id=image_id,
                method_id=label,
                class_c=c,
                y_full=float(exp.probs.data[c]),
                o_masked=float(masked_probs.data[c]),
                logit_full=float(exp.logits.data[c]),
                logit_removed=float(removed_logits.data[c]),
            ))
            saliency_path = out_dir / f"{image_id}_{label}_saliency.png"
            overlay_path = out_dir / f"{image_id}_{label}_overlay.png"
            render.write_png(saliency_path, render.saliency_to_gray(exp.saliency))
            render.write_png(overlay_path, render.render_overlay(rgb, exp.saliency, OVERLAY_ALPHA))
            artifacts.extend([saliency_path, overlay_path])
        return records, artifacts

    results: list = [None] * len(cfg.image_paths)
    failures: list[tuple[str, str]] = []
    if cfg.worker_count == 1 or len(cfg.image_paths) == 1:
        for i in range(len(cfg.image_paths)):
            try:
                results[i] = process(i)
            except Exception as exc:  # noqa: BLE001 - per-image failures are collected
                results[i] = exc
    else:
        with ThreadPoolExecutor(max_workers=cfg.worker_count) as pool:
            futures = {i: pool.submit(process, i) for i in range(len(cfg.image_paths))}
            for i, fut in futures.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    results[i] = exc

    all_records: list[ConfidenceRecord] = []
    all_artifacts: list[Path] = []
    for i, res in enumerate(results):
        if isinstance(res, Exception):
            failures.append((cfg.image_paths[i], str(res)))
        else:
            recs, arts = res
            all_records.extend(recs)
            all_artifacts.extend(arts)

    if not all_records:
        details = "; ".join(f"{p}: {msg}" for p, msg in failures)
        raise PipelineError(f"all images failed: {details}")

    report = aggregate_report(all_records)
    report_path = out_dir / f"report.{cfg.report_format}"
    text = format_report(report, all_records, cfg.report_format)
    report_path.write_text(text, encoding="utf-8")
    all_artifacts.append(report_path)
    return BatchResult(
        report=report, records=all_records, artifacts=all_artifacts,
        failures=failures, report_path=report_path,
    )


def format_report(report: MetricsReport, records: list[ConfidenceRecord], fmt: str) -> str:
    """Serialize records plus the aggregate block, deterministically."""
    if fmt == "json":
        doc = {
            "n_images": report.n_images,
            "records": [
                {
                    "image_id": r.image_id,
                    "method": r.method_id,
                    "class_c": r.class_c,
                    "y_full": r.y_full,
                    "o_masked": r.o_masked,
                    "logit_full": r.logit_full,
                    "logit_removed": r.logit_removed,
                }
                for r in records
            ],
            "aggregates": report.per_method,
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["image_id", "method", "class_c", "y_full", "o_masked",
                         "logit_full", "logit_removed"])
        for r in records:
            writer.writerow([r.image_id, r.method_id, r.class_c, repr(r.y_full),
                             repr(r.o_masked), repr(r.logit_full), repr(r.logit_removed)])
        writer.writerow([])
        writer.writerow(["metric", "method", "value"])
        for method, values in report.per_method.items():
            for name in metrics.METRIC_NAMES:
                writer.writerow([name, method, repr(values[name])])
        return buf.getvalue()
    raise ValueError(f"report format must be one of {REPORT_FORMATS}")


def parse_config_file(path) -> dict[str, str]:
    """Read a flat ``key = value`` config file; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _unique_ids(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for name in names:
        count = seen.get(name, 0)
        seen[name] = count + 1
        out.append(name if count == 0 else f"{name}_{count + 1}")
    return out
