"""Kernel backend selection.

The hot inner loops (convolution, transposed convolution, max pooling and
their backward passes) exist twice: a compiled Cython extension
(:mod:`exmo.kernels._native`) and a vectorized numpy fallback
(:mod:`exmo.kernels._python`). The native backend is picked at import when
the extension is importable; ``EXMO_KERNELS=native|python`` forces a choice.

Both backends implement the same six functions with identical semantics and
a fixed per-element reduction order, so results are deterministic within a
backend regardless of caller-side threading.
"""

import importlib
import os

from . import _python

_FUNCTIONS = (
    "conv2d_forward",
    "conv2d_backward",
    "maxpool2_forward",
    "maxpool2_backward",
    "deconv2d_forward",
    "deconv2d_backward",
)


def _load_native():
    return importlib.import_module("exmo.kernels._native")


def _select():
    forced = os.environ.get("EXMO_KERNELS", "").strip().lower()
    if forced == "python":
        return _python, "python"
    if forced == "native":
        return _load_native(), "native"
    if forced:
        raise ValueError(f"unknown EXMO_KERNELS value: {forced!r}")
    try:
        return _load_native(), "native"
    except ImportError:
        return _python, "python"


_impl, BACKEND = _select()

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2_forward = _impl.maxpool2_forward
maxpool2_backward = _impl.maxpool2_backward
deconv2d_forward = _impl.deconv2d_forward
deconv2d_backward = _impl.deconv2d_backward


def backend_name():
    """Name of the active kernel backend ('native' or 'python')."""
    return BACKEND


def available_backends():
    names = ["python"]
    try:
        _load_native()
    except ImportError:
        pass
    else:
        names.insert(0, "native")
    return names
