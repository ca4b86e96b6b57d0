"""Reference-CNN weight files and deterministic weight generation.

File format ``CSW1``, byte-exact:

* magic bytes ``CSW1``
* header length: unsigned 32-bit little-endian integer
* header: UTF-8 JSON with keys ``version`` (1), ``input_shape`` ([C, H, W]),
  ``num_classes``, ``seed`` (integer or null), ``tap_layer``, and ``layers``
  (ordered list of specs with ``type`` in conv / relu / maxpool / dense)
* payload: the parameter tensors as raw little-endian float32, flattened
  row-major, concatenated in layer order with weights before biases.

Generated weights come from SplitMix64 seeded with the user seed: each draw
advances the state by 0x9E3779B97F4A7C15 and mixes it (xor-shift 30 /
multiply 0xBF58476D1CE4E5B9 / xor-shift 27 / multiply 0x94D049BB133111EB /
xor-shift 31); the top 53 bits give a uniform in [0, 1), mapped to
[-0.1, 0.1] and quantized to float32 so every platform and every save/load
round trip yields the identical backend.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .backend import ReferenceCNN
from .errors import WeightFormatError

MAGIC = b"CSW1"
VERSION = 1

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 pseudo-random generator over 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform float64 in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53


def _draw(prng: SplitMix64, shape: tuple[int, ...]) -> np.ndarray:
    n = int(np.prod(shape))
    vals = np.empty(n, dtype=np.float64)
    for i in range(n):
        vals[i] = (prng.uniform() * 2.0 - 1.0) * 0.1
    return vals.astype(np.float32).astype(np.float64).reshape(shape)


def generate_reference(
    seed: int,
    input_shape: tuple[int, int, int] = (3, 64, 64),
    num_classes: int = 10,
    channels: tuple[int, int] = (8, 16),
) -> ReferenceCNN:
    """Build the reference CNN with deterministic seed-derived weights."""
    c, h, w = input_shape
    f1, f2 = channels
    prng = SplitMix64(seed)
    conv1_w = _draw(prng, (f1, c, 3, 3))
    conv1_b = _draw(prng, (f1,))
    conv2_w = _draw(prng, (f2, f1, 3, 3))
    conv2_b = _draw(prng, (f2,))
    flat = f2 * (h // 4) * (w // 4)
    dense_w = _draw(prng, (num_classes, flat))
    dense_b = _draw(prng, (num_classes,))
    return ReferenceCNN(
        conv1_w, conv1_b, conv2_w, conv2_b, dense_w, dense_b,
        input_shape=input_shape, seed=seed,
    )


def _layer_specs(backend: ReferenceCNN) -> list[dict]:
    p = backend.parameters
    c, _, _ = backend.input_shape
    f1 = p["conv1.weight"].shape[0]
    f2 = p["conv2.weight"].shape[0]
    return [
        {"name": "conv1", "type": "conv", "in_channels": c, "out_channels": f1,
         "kernel": 3, "stride": 1, "padding": 1},
        {"name": "relu1", "type": "relu"},
        {"name": "pool1", "type": "maxpool", "size": 2, "stride": 2},
        {"name": "conv2", "type": "conv", "in_channels": f1, "out_channels": f2,
         "kernel": 3, "stride": 1, "padding": 1},
        {"name": "relu2", "type": "relu"},
        {"name": "pool2", "type": "maxpool", "size": 2, "stride": 2},
        {"name": "dense", "type": "dense",
         "in_features": p["dense.weight"].shape[1],
         "out_features": p["dense.weight"].shape[0]},
    ]


def save_weights(path, backend: ReferenceCNN) -> None:
    """Write a backend's parameters as a CSW1 file (float32 payload)."""
    header = {
        "version": VERSION,
        "input_shape": list(backend.input_shape),
        "num_classes": backend.num_classes,
        "seed": backend.seed,
        "tap_layer": backend.TAP_LAYER,
        "layers": _layer_specs(backend),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for param in backend.parameters.values():
            fh.write(np.asarray(param, dtype="<f4").tobytes(order="C"))


def load_weights(path) -> ReferenceCNN:
    """Read a CSW1 file, validating header and payload byte counts."""
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise WeightFormatError(f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    if len(blob) < 8:
        raise WeightFormatError(f"{path}: truncated before header length")
    (header_len,) = struct.unpack("<I", blob[4:8])
    if len(blob) < 8 + header_len:
        raise WeightFormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightFormatError(f"{path}: unparseable header: {exc}") from exc

    if header.get("version") != VERSION:
        raise WeightFormatError(f"{path}: unsupported version {header.get('version')!r}")
    layers = header.get("layers")
    if not isinstance(layers, list):
        raise WeightFormatError(f"{path}: header missing layer list")
    types = [layer.get("type") for layer in layers]
    if types != ["conv", "relu", "maxpool", "conv", "relu", "maxpool", "dense"]:
        raise WeightFormatError(f"{path}: unexpected layer topology {types}")
    conv1, _, _, conv2, _, pool2, dense = layers
    if header.get("tap_layer") != pool2.get("name"):
        raise WeightFormatError(
            f"{path}: tap layer {header.get('tap_layer')!r} is not the final pooled conv output"
        )

    input_shape = tuple(int(v) for v in header["input_shape"])
    payload = blob[8 + header_len:]
    offset = 0

    def take(count: int, layer: str) -> np.ndarray:
        nonlocal offset
        nbytes = count * 4
        if offset + nbytes > len(payload):
            have = (len(payload) - offset) // 4
            raise WeightFormatError(
                f"{path}: payload truncated in layer '{layer}' (need {count} floats, have {have})"
            )
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        offset += nbytes
        return arr.astype(np.float64)

    f1_out, f1_in = int(conv1["out_channels"]), int(conv1["in_channels"])
    f2_out, f2_in = int(conv2["out_channels"]), int(conv2["in_channels"])
    d_out, d_in = int(dense["out_features"]), int(dense["in_features"])
    if int(header.get("num_classes", -1)) != d_out:
        raise WeightFormatError(f"{path}: num_classes disagrees with dense out_features")
    conv1_w = take(f1_out * f1_in * 9, conv1["name"]).reshape(f1_out, f1_in, 3, 3)
    conv1_b = take(f1_out, conv1["name"])
    conv2_w = take(f2_out * f2_in * 9, conv2["name"]).reshape(f2_out, f2_in, 3, 3)
    conv2_b = take(f2_out, conv2["name"])
    dense_w = take(d_out * d_in, dense["name"]).reshape(d_out, d_in)
    dense_b = take(d_out, dense["name"])
    if offset != len(payload):
        raise WeightFormatError(f"{path}: {len(payload) - offset} trailing payload bytes")

    seed = header.get("seed")
    return ReferenceCNN(
        conv1_w, conv1_b, conv2_w, conv2_b, dense_w, dense_b,
        input_shape=input_shape,
        seed=None if seed is None else int(seed),
    )
