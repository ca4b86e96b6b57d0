"""Benchmark the compiled kernels against the NumPy fallback.

Run with ``python -m camscore.benchmark``. Times the four hot kernels plus a
full masked-inference sweep (the ScoreCAM inner loop) on each available
kernel path and prints a comparison table.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import kernels
from .weights import generate_reference


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads(mod):
    rng = np.random.default_rng(7)
    x = rng.standard_normal((16, 3, 64, 64))
    w1 = rng.standard_normal((8, 3, 3, 3)) * 0.1
    b1 = rng.standard_normal(8) * 0.1
    pooled = rng.standard_normal((16, 16, 32, 32))
    flat = rng.standard_normal((16, 4096))
    dw = rng.standard_normal((10, 4096)) * 0.1
    db = rng.standard_normal(10) * 0.1
    small = np.ascontiguousarray(rng.standard_normal((16, 16, 16)))
    return {
        "conv2d 16x3x64x64 -> 8ch": lambda: mod.conv2d(x, w1, b1),
        "maxpool2 16x16x32x32": lambda: mod.maxpool2(pooled),
        "dense 16x4096 -> 10": lambda: mod.dense(flat, dw, db),
        "bilinear 16x16x16 -> 64x64": lambda: mod.bilinear_resize(small, 64, 64),
    }


def _masked_sweep(backend, x):
    # One ScoreCAM-style pass: K masked forwards in batches of 8.
    masks = np.abs(np.sin(np.arange(16)[:, None, None] * 0.37
                          + np.linspace(0, 3, 64 * 64).reshape(64, 64)))
    for k0 in range(0, 16, 8):
        batch = x[None] * masks[k0:k0 + 8, None]
        backend.forward_batch(batch)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5, help="timing repetitions (best-of)")
    args = parser.parse_args(argv)

    available = kernels.available_backends()
    print(f"active kernel path: {kernels.active_backend()}")
    print(f"available: {', '.join(available)}\n")

    timings: dict[str, dict[str, float]] = {}
    for name, mod in available.items():
        timings[name] = {label: _time(fn, args.repeats) for label, fn in _workloads(mod).items()}

    backend = generate_reference(42)
    rng = np.random.default_rng(11)
    x = rng.standard_normal((3, 64, 64))
    sweep: dict[str, float] = {}
    for name, mod in available.items():
        saved = kernels._active
        kernels._active = mod
        try:
            sweep[name] = _time(lambda: _masked_sweep(backend, x), args.repeats)
        finally:
            kernels._active = saved
    for name in timings:
        timings[name]["masked sweep (16 forwards)"] = sweep[name]

    labels = list(next(iter(timings.values())))
    width = max(len(label) for label in labels)
    header = f"{'workload'.ljust(width)}  " + "  ".join(f"{n:>12}" for n in timings)
    print(header)
    print("-" * len(header))
    for label in labels:
        row = "  ".join(f"{timings[n][label] * 1e3:>10.3f}ms" for n in timings)
        print(f"{label.ljust(width)}  {row}")
    if "compiled" in timings and "python" in timings:
        print()
        for label in labels:
            ratio = timings["python"][label] / timings["compiled"][label]
            print(f"{label.ljust(width)}  compiled is {ratio:5.2f}x vs python")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
