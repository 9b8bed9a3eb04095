"""Vectorized numpy implementations of the hot kernels.

Fallback backend used when the compiled extension is unavailable. All
functions operate on a single sample laid out channel-first (C, H, W) and
accept float32 or float64 arrays. Geometry is fixed to the network's needs:
3x3 kernels, stride-1 "same" convolution, 2x2/stride-2 max pooling, and
stride-2 transposed convolution that exactly doubles the spatial extents.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(x, w, b):
    """Correlate x (Ci,H,W) with w (Co,Ci,3,3), zero padding 1, stride 1."""
    ci, h, wd = x.shape
    xp = np.zeros((ci, h + 2, wd + 2), dtype=x.dtype)
    xp[:, 1:-1, 1:-1] = x
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))  # (Ci,H,W,3,3)
    y = np.tensordot(w, win, axes=([1, 2, 3], [0, 3, 4]))
    y += b[:, None, None]
    return np.ascontiguousarray(y)


def conv2d_backward(gy, x, w):
    ci, h, wd = x.shape
    xp = np.zeros((ci, h + 2, wd + 2), dtype=x.dtype)
    xp[:, 1:-1, 1:-1] = x
    xwin = sliding_window_view(xp, (3, 3), axis=(1, 2))
    gw = np.tensordot(gy, xwin, axes=([1, 2], [1, 2]))  # (Co,Ci,3,3)
    gb = gy.sum(axis=(1, 2))

    # grad wrt input: full correlation of gy with the flipped kernels
    co = gy.shape[0]
    gyp = np.zeros((co, h + 2, wd + 2), dtype=gy.dtype)
    gyp[:, 1:-1, 1:-1] = gy
    gwin = sliding_window_view(gyp, (3, 3), axis=(1, 2))  # (Co,H,W,3,3)
    wf = w[:, :, ::-1, ::-1]
    gx = np.tensordot(wf, gwin, axes=([0, 2, 3], [0, 3, 4]))
    return np.ascontiguousarray(gx), np.ascontiguousarray(gw), gb


def maxpool2_forward(x):
    """2x2/stride-2 max pool; returns pooled map and per-window argmax codes.

    Codes are row-major window positions 0..3; numpy argmax takes the first
    maximum, which realizes the row-major tie-break.
    """
    c, h, wd = x.shape
    win = x.reshape(c, h // 2, 2, wd // 2, 2).transpose(0, 1, 3, 2, 4)
    flat = win.reshape(c, h // 2, wd // 2, 4)
    codes = flat.argmax(axis=-1).astype(np.uint8)
    y = np.take_along_axis(flat, codes[..., None].astype(np.intp), axis=-1)[..., 0]
    return np.ascontiguousarray(y), codes


def maxpool2_backward(gy, codes):
    c, oh, ow = gy.shape
    gx = np.zeros((c, oh * 2, ow * 2), dtype=gy.dtype)
    ci, oy, ox = np.ogrid[:c, :oh, :ow]
    gx[ci, 2 * oy + (codes >> 1), 2 * ox + (codes & 1)] = gy
    return gx


def _stuffed(x, h, wd):
    """Zero-stuffed and padded input realizing the transposed convolution."""
    ci = x.shape[0]
    # top/left pad 1, bottom/right pad 2 around the (2h-1, 2w-1) stuffed grid
    sp = np.zeros((ci, 2 * h + 2, 2 * wd + 2), dtype=x.dtype)
    sp[:, 1 : 2 * h : 2, 1 : 2 * wd : 2] = x
    return sp


def deconv2d_forward(x, w, b):
    """Transposed convolution, stride 2, kernel 3, padding 1, output padding 1.

    Output spatial extents are exactly double the input's.
    """
    ci, h, wd = x.shape
    sp = _stuffed(x, h, wd)
    win = sliding_window_view(sp, (3, 3), axis=(1, 2))  # (Ci,2h,2w,3,3)
    wf = w[:, :, ::-1, ::-1]
    y = np.tensordot(wf, win, axes=([1, 2, 3], [0, 3, 4]))
    y += b[:, None, None]
    return np.ascontiguousarray(y)


def deconv2d_backward(gy, x, w):
    ci, h, wd = x.shape
    co = gy.shape[0]
    gyp = np.zeros((co, 2 * h + 2, 2 * wd + 2), dtype=gy.dtype)
    gyp[:, 1:-1, 1:-1] = gy
    # windows anchored at the stuffed input positions: gyp[:, 2i+k, 2j+l]
    gwin = sliding_window_view(gyp, (3, 3), axis=(1, 2))[:, ::2, ::2]  # (Co,h,w,3,3)
    gx = np.tensordot(w, gwin, axes=([0, 2, 3], [0, 3, 4]))
    gw = np.tensordot(gwin, x, axes=([1, 2], [1, 2])).transpose(0, 3, 1, 2)
    gb = gy.sum(axis=(1, 2))
    return np.ascontiguousarray(gx), np.ascontiguousarray(gw), gb
