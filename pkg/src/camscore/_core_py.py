"""NumPy implementations of the hot kernels.

This is the fallback path used when the compiled extension
(:mod:`camscore._core`) is not importable. Both paths follow the same
accumulation orders so a given install produces identical results no matter
how calls are batched:

* ``conv2d`` starts each output at its bias and adds the kernel taps in
  ascending ``(c_in, ky, kx)`` order. Every add is elementwise, so results
  do not depend on the batch size.
* ``dense`` reduces each row independently; the reduction order depends only
  on the feature length, never on how many rows are in the batch.
* ``bilinear_resize`` uses the lerp form with half-pixel source centers
  (``src = (dst + 0.5) * size_ratio - 0.5``, clamped) and clamps each output
  to the range of its four source neighbors.
"""

import numpy as np


def conv2d(x, w, b):
    """Same-padded stride-1 convolution.

    x: (B, C, H, W), w: (F, C, k, k) with odd k, b: (F,). Returns (B, F, H, W).
    """
    batch, cin, h, width = x.shape
    fout, _, k, _ = w.shape
    pad = k // 2
    xp = np.zeros((batch, cin, h + 2 * pad, width + 2 * pad), dtype=np.float64)
    xp[:, :, pad:pad + h, pad:pad + width] = x
    out = np.empty((batch, fout, h, width), dtype=np.float64)
    for f in range(fout):
        acc = np.full((batch, h, width), b[f], dtype=np.float64)
        for c in range(cin):
            for ky in range(k):
                for kx in range(k):
                    acc += w[f, c, ky, kx] * xp[:, c, ky:ky + h, kx:kx + width]
        out[:, f] = acc
    return out


def maxpool2(x):
    """2x2 max pooling with stride 2; spatial dims must be even."""
    batch, c, h, w = x.shape
    return x.reshape(batch, c, h // 2, 2, w // 2, 2).max(axis=(3, 5))


def dense(x, w, b):
    """Affine layer. x: (B, N), w: (M, N), b: (M,). Returns (B, M)."""
    return (w[None, :, :] * x[:, None, :]).sum(axis=2) + b


def bilinear_resize(x, out_h, out_w):
    """Bilinear resize of (C, H, W) to (C, out_h, out_w), half-pixel centers."""
    c, h, w = x.shape
    sy = np.clip((np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    sx = np.clip((np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    y0 = sy.astype(np.int64)
    x0 = sx.astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    ty = (sy - y0)[None, :, None]
    tx = (sx - x0)[None, None, :]

    v00 = x[:, y0[:, None], x0[None, :]]
    v01 = x[:, y0[:, None], x1[None, :]]
    v10 = x[:, y1[:, None], x0[None, :]]
    v11 = x[:, y1[:, None], x1[None, :]]

    top = v00 + tx * (v01 - v00)
    bot = v10 + tx * (v11 - v10)
    out = top + ty * (bot - top)

    # Rounding may spill a hair past the true bilinear range; clamp to the
    # local neighborhood so outputs never leave [min(x), max(x)].
    lo = np.minimum(np.minimum(v00, v01), np.minimum(v10, v11))
    hi = np.maximum(np.maximum(v00, v01), np.maximum(v10, v11))
    return np.clip(out, lo, hi)
