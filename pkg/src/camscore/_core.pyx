# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: convolution, pooling, dense, bilinear resize.

Mirrors camscore._core_py operation for operation with the same accumulation
orders (conv taps ascending (c_in, ky, kx) from the bias; per-pixel lerp form
for bilinear), so the two paths stay numerically interchangeable. Loops run
with the GIL released, letting thread pools overlap masked forwards.
"""

import numpy as np


def conv2d(const double[:, :, :, ::1] x, const double[:, :, :, ::1] w, const double[::1] b):
    """Same-padded stride-1 convolution; see camscore._core_py.conv2d."""
    cdef Py_ssize_t batch = x.shape[0], cin = x.shape[1], h = x.shape[2], width = x.shape[3]
    cdef Py_ssize_t fout = w.shape[0], k = w.shape[2], pad = k // 2
    out_arr = np.empty((batch, fout, h, width), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n, f, c, ky, kx, oy, ox, iy, ix
    cdef double acc, wv
    with nogil:
        for n in range(batch):
            for f in range(fout):
                for oy in range(h):
                    for ox in range(width):
                        acc = b[f]
                        for c in range(cin):
                            for ky in range(k):
                                iy = oy + ky - pad
                                if iy < 0 or iy >= h:
                                    continue
                                for kx in range(k):
                                    ix = ox + kx - pad
                                    if ix < 0 or ix >= width:
                                        continue
                                    wv = w[f, c, ky, kx]
                                    acc += wv * x[n, c, iy, ix]
                        out[n, f, oy, ox] = acc
    return out_arr


def maxpool2(const double[:, :, :, ::1] x):
    """2x2/stride-2 max pooling; spatial dims must be even."""
    cdef Py_ssize_t batch = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = h // 2, ow = w // 2
    out_arr = np.empty((batch, c, oh, ow), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n, ch, oy, ox
    cdef double m, v
    with nogil:
        for n in range(batch):
            for ch in range(c):
                for oy in range(oh):
                    for ox in range(ow):
                        m = x[n, ch, 2 * oy, 2 * ox]
                        v = x[n, ch, 2 * oy, 2 * ox + 1]
                        if v > m:
                            m = v
                        v = x[n, ch, 2 * oy + 1, 2 * ox]
                        if v > m:
                            m = v
                        v = x[n, ch, 2 * oy + 1, 2 * ox + 1]
                        if v > m:
                            m = v
                        out[n, ch, oy, ox] = m
    return out_arr


def dense(const double[:, ::1] x, const double[:, ::1] w, const double[::1] b):
    """Affine layer: (B, N) x (M, N) + (M,) -> (B, M)."""
    cdef Py_ssize_t batch = x.shape[0], nfeat = x.shape[1], m = w.shape[0]
    out_arr = np.empty((batch, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t n, i, j
    cdef double acc
    with nogil:
        for n in range(batch):
            for i in range(m):
                acc = 0.0
                for j in range(nfeat):
                    acc += w[i, j] * x[n, j]
                out[n, i] = acc + b[i]
    return out_arr


def bilinear_resize(const double[:, :, ::1] x, Py_ssize_t out_h, Py_ssize_t out_w):
    """Bilinear resize of (C, H, W), half-pixel centers, neighborhood-clamped."""
    cdef Py_ssize_t c = x.shape[0], h = x.shape[1], w = x.shape[2]
    out_arr = np.empty((c, out_h, out_w), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double ry = h / <double> out_h, rx = w / <double> out_w
    cdef Py_ssize_t ch, oy, ox, y0, x0, y1, x1
    cdef double sy, sx, ty, tx, v00, v01, v10, v11, top, bot, val, lo, hi
    with nogil:
        for oy in range(out_h):
            sy = (oy + 0.5) * ry - 0.5
            if sy < 0.0:
                sy = 0.0
            if sy > h - 1.0:
                sy = h - 1.0
            y0 = <Py_ssize_t> sy
            y1 = y0 + 1
            if y1 > h - 1:
                y1 = h - 1
            ty = sy - y0
            for ox in range(out_w):
                sx = (ox + 0.5) * rx - 0.5
                if sx < 0.0:
                    sx = 0.0
                if sx > w - 1.0:
                    sx = w - 1.0
                x0 = <Py_ssize_t> sx
                x1 = x0 + 1
                if x1 > w - 1:
                    x1 = w - 1
                tx = sx - x0
                for ch in range(c):
                    v00 = x[ch, y0, x0]
                    v01 = x[ch, y0, x1]
                    v10 = x[ch, y1, x0]
                    v11 = x[ch, y1, x1]
                    top = v00 + tx * (v01 - v00)
                    bot = v10 + tx * (v11 - v10)
                    val = top + ty * (bot - top)
                    lo = v00
                    if v01 < lo:
                        lo = v01
                    if v10 < lo:
                        lo = v10
                    if v11 < lo:
                        lo = v11
                    hi = v00
                    if v01 > hi:
                        hi = v01
                    if v10 > hi:
                        hi = v10
                    if v11 > hi:
                        hi = v11
                    if val < lo:
                        val = lo
                    if val > hi:
                        val = hi
                    out[ch, oy, ox] = val
    return out_arr
