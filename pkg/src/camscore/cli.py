"""Command-line interface.

Subcommands:

* ``explain``  - run one method on one image, write saliency + overlay PNGs.
* ``bench``    - run a batch of images x methods, write PNGs and the report.
* ``gen-model`` - emit a reference-CNN weight file from a seed.

``bench`` accepts a flat ``key = value`` config file via --config; any flag
given on the command line overrides the file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import engine, pipeline, render
from .errors import CamScoreError
from .metrics import METRIC_NAMES
from .preprocess import load_image, preprocess_array
from .tensor import GATING_FUNCTIONS
from .weights import generate_reference, save_weights

IMAGE_SUFFIXES = (".png", ".bmp")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except CamScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="camscore", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    explain = sub.add_parser("explain", help="explain one image with one method")
    _model_flags(explain)
    _method_flags(explain)
    explain.add_argument("--images", nargs=1, required=True, metavar="IMAGE",
                         help="input image (PNG or BMP)")
    explain.add_argument("--method", default="scorecampp",
                         choices=list(engine.METHODS), help="CAM method")
    explain.add_argument("--out", default="camscore-out", help="output directory")
    explain.set_defaults(func=_cmd_explain)

    bench = sub.add_parser("bench", help="run images x methods and report metrics")
    bench.add_argument("--config", help="flat key = value config file")
    _model_flags(bench, default_none=True)
    _method_flags(bench, default_none=True)
    bench.add_argument("--images", nargs="+", metavar="PATH",
                       help="image files and/or directories of PNG/BMP files")
    bench.add_argument("--method", action="append", choices=list(engine.METHODS),
                       help="CAM method; repeat for several")
    bench.add_argument("--out", help="output directory")
    bench.add_argument("--report-format", choices=list(pipeline.REPORT_FORMATS),
                       help="report file format (default json)")
    bench.set_defaults(func=_cmd_bench)

    gen = sub.add_parser("gen-model", help="write a reference-CNN weight file")
    gen.add_argument("--seed", type=int, default=42, help="generator seed")
    gen.add_argument("--out", required=True, help="output weight file path")
    gen.add_argument("--input-size", type=int, default=64,
                     help="square input height/width (must be divisible by 4)")
    gen.add_argument("--classes", type=int, default=10, help="number of classes")
    gen.set_defaults(func=_cmd_gen_model)
    return parser


def _model_flags(p: argparse.ArgumentParser, default_none: bool = False) -> None:
    p.add_argument("--model", default=None,
                   help="weight file; omitted: generate the reference CNN from --seed")
    p.add_argument("--tap-layer", default=None, help="tap layer id (default: backend's last)")
    p.add_argument("--seed", type=int, default=None if default_none else 42,
                   help="reference-CNN seed when no --model is given")
    p.add_argument("--workers", type=int, default=None if default_none else 1,
                   help="worker threads")
    p.add_argument("--batch-size", type=int, default=None if default_none else 32,
                   help="channels per masked-forward batch")


def _method_flags(p: argparse.ArgumentParser, default_none: bool = False) -> None:
    p.add_argument("--gating", default=None if default_none else "tanh",
                   choices=list(GATING_FUNCTIONS),
                   help="gating function for scorecampp")
    p.add_argument("--no-gate-normalizer", action="store_true",
                   help="scorecampp: keep min-max mask normalization")
    p.add_argument("--no-gate-aggregation", action="store_true",
                   help="scorecampp: aggregate raw activations")
    p.add_argument("--cic-softmax", action="store_true",
                   help="softmax the channel scores before aggregation")


def _make_cam_config(method: str, args, batch_size: int) -> engine.CamConfig:
    return engine.CamConfig(
        method=method,
        gating_fn=args.gating or "tanh",
        gate_normalizer=False if args.no_gate_normalizer and method == "scorecampp" else None,
        gate_aggregation=False if args.no_gate_aggregation and method == "scorecampp" else None,
        cic_softmax=bool(args.cic_softmax),
        mask_batch_size=batch_size,
    )


def _expand_images(paths: list[str]) -> list[str]:
    out: list[str] = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            out.extend(str(f) for f in sorted(path.iterdir())
                       if f.suffix.lower() in IMAGE_SUFFIXES)
        else:
            out.append(str(path))
    return out


def _cmd_explain(args, parser) -> int:
    cfg = _make_cam_config(args.method, args, args.batch_size)
    run = pipeline.RunConfig(
        image_paths=_expand_images(args.images), methods=[cfg],
        model_path=args.model, tap_layer=args.tap_layer, seed=args.seed,
    )
    backend = pipeline.resolve_backend(run)
    image_path = run.image_paths[0]
    rgb = load_image(image_path)
    x = preprocess_array(rgb, backend.preprocess_spec)
    exp = engine.explain(backend, x, cfg, layer_id=args.tap_layer, workers=args.workers)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(image_path).stem
    label = cfg.label()
    saliency_path = out_dir / f"{stem}_{label}_saliency.png"
    overlay_path = out_dir / f"{stem}_{label}_overlay.png"
    render.write_png(saliency_path, render.saliency_to_gray(exp.saliency))
    render.write_png(overlay_path, render.render_overlay(rgb, exp.saliency, pipeline.OVERLAY_ALPHA))
    print(f"class {exp.class_c}  p={float(exp.probs.data[exp.class_c]):.6f}  "
          f"logit={float(exp.logits.data[exp.class_c]):.6f}")
    print(saliency_path)
    print(overlay_path)
    return 0


def _cmd_bench(args, parser) -> int:
    file_cfg = pipeline.parse_config_file(args.config) if args.config else {}

    def pick(flag_value, key: str, fallback):
        if flag_value is not None:
            return flag_value
        if key in file_cfg:
            return file_cfg[key]
        return fallback

    images = args.images or _split_list(file_cfg.get("images", ""))
    images = _expand_images(images)
    if not images:
        parser.error("bench needs at least one input image (--images or config 'images')")
    methods = args.method or _split_list(file_cfg.get("methods", "")) or ["scorecampp"]
    for m in methods:
        if m not in engine.METHODS:
            parser.error(f"unknown method {m!r} in config; expected one of {engine.METHODS}")

    args.gating = pick(args.gating, "gating", "tanh")
    if not args.no_gate_normalizer:
        args.no_gate_normalizer = _truthy(file_cfg.get("no_gate_normalizer"))
    if not args.no_gate_aggregation:
        args.no_gate_aggregation = _truthy(file_cfg.get("no_gate_aggregation"))
    if not args.cic_softmax:
        args.cic_softmax = _truthy(file_cfg.get("cic_softmax"))
    batch_size = int(pick(args.batch_size, "batch_size", 32))

    run = pipeline.RunConfig(
        image_paths=images,
        methods=[_make_cam_config(m, args, batch_size) for m in methods],
        model_path=pick(args.model, "model", None),
        tap_layer=pick(args.tap_layer, "tap_layer", None),
        output_dir=str(pick(args.out, "out", "camscore-out")),
        report_format=str(pick(args.report_format, "report_format", "json")),
        mask_batch_size=batch_size,
        worker_count=int(pick(args.workers, "workers", 1)),
        seed=int(pick(args.seed, "seed", 42)),
    )
    result = pipeline.run_batch(run)
    _print_report(result)
    if result.failures:
        for path, msg in result.failures:
            print(f"failed: {path}: {msg}", file=sys.stderr)
        return 1
    return 0


def _cmd_gen_model(args, parser) -> int:
    if args.input_size % 4:
        parser.error("--input-size must be divisible by 4")
    backend = generate_reference(args.seed, input_shape=(3, args.input_size, args.input_size),
                                 num_classes=args.classes)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_weights(out, backend)
    print(f"wrote {out} (seed {args.seed}, input {backend.input_shape}, "
          f"{backend.num_classes} classes)")
    return 0


def _print_report(result: pipeline.BatchResult) -> None:
    print(f"report: {result.report_path}")
    print(f"images: {result.report.n_images}  records: {len(result.records)}")
    for method, values in result.report.per_method.items():
        cells = "  ".join(f"{name}={values[name]:.4f}" for name in METRIC_NAMES)
        print(f"  {method}: {cells}")


def _split_list(value: str) -> list[str]:
    return [v for v in (part.strip() for part in value.split(",")) if v]


def _truthy(value: str | None) -> bool:
    return str(value).strip().lower() in ("1", "true", "yes", "on")


if __name__ == "__main__":
    sys.exit(main())
