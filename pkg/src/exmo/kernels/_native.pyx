# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: 3x3 conv, stride-2 transposed conv, 2x2 max pool.

Single-sample (C, H, W) layout, float32 or float64. Loops release the GIL so
Python-level thread pools get real parallelism; every output element is
reduced in a fixed order, keeping results independent of thread count.
"""

import numpy as np

cimport cython


ctypedef fused floating:
    float
    double


cdef inline Py_ssize_t imax(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a > b else b


cdef inline Py_ssize_t imin(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a < b else b


def _out(floating[:, :, ::1] like, shape):
    if floating is float:
        return np.zeros(shape, dtype=np.float32)
    else:
        return np.zeros(shape, dtype=np.float64)


def conv2d_forward(floating[:, :, ::1] x, floating[:, :, :, ::1] w, floating[::1] b):
    cdef Py_ssize_t co_n = w.shape[0], ci_n = w.shape[1]
    cdef Py_ssize_t h = x.shape[1], wd = x.shape[2]
    y_arr = _out(x, (co_n, h, wd))
    cdef floating[:, :, ::1] y = y_arr
    cdef Py_ssize_t co, ci, ky, kx, oy, ox, y0, y1, x0, x1
    cdef floating wv, bv
    with nogil:
        for co in range(co_n):
            bv = b[co]
            for oy in range(h):
                for ox in range(wd):
                    y[co, oy, ox] = bv
        for co in range(co_n):
            for ci in range(ci_n):
                for ky in range(3):
                    y0 = imax(0, 1 - ky)
                    y1 = imin(h, h + 1 - ky)
                    for kx in range(3):
                        x0 = imax(0, 1 - kx)
                        x1 = imin(wd, wd + 1 - kx)
                        wv = w[co, ci, ky, kx]
                        for oy in range(y0, y1):
                            for ox in range(x0, x1):
                                y[co, oy, ox] += wv * x[ci, oy + ky - 1, ox + kx - 1]
    return y_arr


def conv2d_backward(floating[:, :, ::1] gy, floating[:, :, ::1] x,
                    floating[:, :, :, ::1] w):
    cdef Py_ssize_t co_n = w.shape[0], ci_n = w.shape[1]
    cdef Py_ssize_t h = x.shape[1], wd = x.shape[2]
    gx_arr = _out(x, (ci_n, h, wd))
    gw_arr = _out(x, (co_n, ci_n, 3, 3))
    gb_arr = _out(x, (co_n,))
    cdef floating[:, :, ::1] gx = gx_arr
    cdef floating[:, :, :, ::1] gw = gw_arr
    cdef floating[::1] gb = gb_arr
    cdef Py_ssize_t co, ci, ky, kx, oy, ox, iy, ix, y0, y1, x0, x1
    cdef floating acc, wv
    with nogil:
        for co in range(co_n):
            acc = 0
            for oy in range(h):
                for ox in range(wd):
                    acc += gy[co, oy, ox]
            gb[co] = acc
        for co in range(co_n):
            for ci in range(ci_n):
                for ky in range(3):
                    y0 = imax(0, 1 - ky)
                    y1 = imin(h, h + 1 - ky)
                    for kx in range(3):
                        x0 = imax(0, 1 - kx)
                        x1 = imin(wd, wd + 1 - kx)
                        acc = 0
                        for oy in range(y0, y1):
                            for ox in range(x0, x1):
                                acc += gy[co, oy, ox] * x[ci, oy + ky - 1, ox + kx - 1]
                        gw[co, ci, ky, kx] = acc
        # gather form: iy = oy + ky - 1  =>  oy = iy - ky + 1
        for ci in range(ci_n):
            for co in range(co_n):
                for ky in range(3):
                    y0 = imax(0, ky - 1)
                    y1 = imin(h, h + ky - 1)
                    for kx in range(3):
                        x0 = imax(0, kx - 1)
                        x1 = imin(wd, wd + kx - 1)
                        wv = w[co, ci, ky, kx]
                        for iy in range(y0, y1):
                            for ix in range(x0, x1):
                                gx[ci, iy, ix] += wv * gy[co, iy - ky + 1, ix - kx + 1]
    return gx_arr, gw_arr, gb_arr


def maxpool2_forward(floating[:, :, ::1] x):
    cdef Py_ssize_t c_n = x.shape[0], h = x.shape[1], wd = x.shape[2]
    cdef Py_ssize_t oh = h // 2, ow = wd // 2
    y_arr = _out(x, (c_n, oh, ow))
    codes_arr = np.zeros((c_n, oh, ow), dtype=np.uint8)
    cdef floating[:, :, ::1] y = y_arr
    cdef unsigned char[:, :, ::1] codes = codes_arr
    cdef Py_ssize_t c, oy, ox
    cdef floating best, v
    cdef unsigned char code
    with nogil:
        for c in range(c_n):
            for oy in range(oh):
                for ox in range(ow):
                    best = x[c, 2 * oy, 2 * ox]
                    code = 0
                    v = x[c, 2 * oy, 2 * ox + 1]
                    if v > best:
                        best = v
                        code = 1
                    v = x[c, 2 * oy + 1, 2 * ox]
                    if v > best:
                        best = v
                        code = 2
                    v = x[c, 2 * oy + 1, 2 * ox + 1]
                    if v > best:
                        best = v
                        code = 3
                    y[c, oy, ox] = best
                    codes[c, oy, ox] = code
    return y_arr, codes_arr


def maxpool2_backward(floating[:, :, ::1] gy, unsigned char[:, :, ::1] codes):
    cdef Py_ssize_t c_n = gy.shape[0], oh = gy.shape[1], ow = gy.shape[2]
    gx_arr = _out(gy, (c_n, oh * 2, ow * 2))
    cdef floating[:, :, ::1] gx = gx_arr
    cdef Py_ssize_t c, oy, ox
    cdef unsigned char code
    with nogil:
        for c in range(c_n):
            for oy in range(oh):
                for ox in range(ow):
                    code = codes[c, oy, ox]
                    gx[c, 2 * oy + (code >> 1), 2 * ox + (code & 1)] = gy[c, oy, ox]
    return gx_arr


def deconv2d_forward(floating[:, :, ::1] x, floating[:, :, :, ::1] w, floating[::1] b):
    cdef Py_ssize_t co_n = w.shape[0], ci_n = w.shape[1]
    cdef Py_ssize_t h = x.shape[1], wd = x.shape[2]
    cdef Py_ssize_t oh = 2 * h, ow = 2 * wd
    y_arr = _out(x, (co_n, oh, ow))
    cdef floating[:, :, ::1] y = y_arr
    cdef Py_ssize_t co, ci, ky, kx, iy, ix, iy0, ix0, oy, ox
    cdef floating wv, bv
    with nogil:
        for co in range(co_n):
            bv = b[co]
            for oy in range(oh):
                for ox in range(ow):
                    y[co, oy, ox] = bv
        # scatter: oy = 2*iy + ky - 1, ox = 2*ix + kx - 1
        for co in range(co_n):
            for ci in range(ci_n):
                for ky in range(3):
                    iy0 = 1 if ky == 0 else 0
                    for kx in range(3):
                        ix0 = 1 if kx == 0 else 0
                        wv = w[co, ci, ky, kx]
                        for iy in range(iy0, h):
                            oy = 2 * iy + ky - 1
                            for ix in range(ix0, wd):
                                y[co, oy, 2 * ix + kx - 1] += wv * x[ci, iy, ix]
    return y_arr


def deconv2d_backward(floating[:, :, ::1] gy, floating[:, :, ::1] x,
                      floating[:, :, :, ::1] w):
    cdef Py_ssize_t co_n = w.shape[0], ci_n = w.shape[1]
    cdef Py_ssize_t h = x.shape[1], wd = x.shape[2]
    cdef Py_ssize_t oh = 2 * h, ow = 2 * wd
    gx_arr = _out(x, (ci_n, h, wd))
    gw_arr = _out(x, (co_n, ci_n, 3, 3))
    gb_arr = _out(x, (co_n,))
    cdef floating[:, :, ::1] gx = gx_arr
    cdef floating[:, :, :, ::1] gw = gw_arr
    cdef floating[::1] gb = gb_arr
    cdef Py_ssize_t co, ci, ky, kx, iy, ix, iy0, ix0, oy, ox
    cdef floating acc, wv
    with nogil:
        for co in range(co_n):
            acc = 0
            for oy in range(oh):
                for ox in range(ow):
                    acc += gy[co, oy, ox]
            gb[co] = acc
        for co in range(co_n):
            for ci in range(ci_n):
                for ky in range(3):
                    iy0 = 1 if ky == 0 else 0
                    for kx in range(3):
                        ix0 = 1 if kx == 0 else 0
                        acc = 0
                        for iy in range(iy0, h):
                            oy = 2 * iy + ky - 1
                            for ix in range(ix0, wd):
                                acc += x[ci, iy, ix] * gy[co, oy, 2 * ix + kx - 1]
                        gw[co, ci, ky, kx] = acc
        for ci in range(ci_n):
            for co in range(co_n):
                for ky in range(3):
                    iy0 = 1 if ky == 0 else 0
                    for kx in range(3):
                        ix0 = 1 if kx == 0 else 0
                        wv = w[co, ci, ky, kx]
                        for iy in range(iy0, h):
                            oy = 2 * iy + ky - 1
                            for ix in range(ix0, wd):
                                gx[ci, iy, ix] += wv * gy[co, oy, 2 * ix + kx - 1]
    return gx_arr, gw_arr, gb_arr
