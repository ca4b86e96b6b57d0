"""Kernel dispatch: compiled core when available, NumPy fallback otherwise.

The choice is made once at import. Set ``CAMSCORE_KERNELS=python`` or
``CAMSCORE_KERNELS=compiled`` to force a path (the benchmark and the parity
tests use this to compare both).
"""

import os

from . import _core_py

try:
    from . import _core  # type: ignore[attr-defined]
except ImportError:
    _core = None

_FORCED = os.environ.get("CAMSCORE_KERNELS", "").strip().lower()
if _FORCED == "python":
    _active = _core_py
elif _FORCED == "compiled":
    if _core is None:
        raise ImportError(
            "CAMSCORE_KERNELS=compiled but the camscore._core extension is not built"
        )
    _active = _core
else:
    _active = _core if _core is not None else _core_py


def active_backend():
    """Name of the kernel path in use: 'compiled' or 'python'."""
    return "compiled" if _active is _core and _core is not None else "python"


def available_backends():
    """Mapping of backend name to kernel module, for benchmarks and tests."""
    out = {"python": _core_py}
    if _core is not None:
        out["compiled"] = _core
    return out


def conv2d(x, w, b):
    return _active.conv2d(x, w, b)


def maxpool2(x):
    return _active.maxpool2(x)


def dense(x, w, b):
    return _active.dense(x, w, b)


def bilinear_resize(x, out_h, out_w):
    return _active.bilinear_resize(x, out_h, out_w)
