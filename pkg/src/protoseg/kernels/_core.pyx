# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: conv patch gather/scatter, bilinear resampling,
connected-component counting. Mirrors protoseg.kernels.pure exactly."""

import numpy as np

cimport numpy as cnp
from cython cimport floating

cnp.import_array()


def conv_out_size(Py_ssize_t size, Py_ssize_t k, Py_ssize_t stride,
                  Py_ssize_t pad, Py_ssize_t dil):
    return (size + 2 * pad - dil * (k - 1) - 1) // stride + 1


def _im2col_impl(floating[:, :, :, ::1] x, floating[:, :, ::1] out,
                 Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad, Py_ssize_t dil):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - dil * (k - 1) - 1) // stride + 1
    cdef Py_ssize_t ow = (w + 2 * pad - dil * (k - 1) - 1) // stride + 1
    cdef Py_ssize_t bi, ci, ki, kj, oy, ox, iy, ix, row
    cdef floating val
    for bi in range(b):
        for ci in range(c):
            for ki in range(k):
                for kj in range(k):
                    row = ci * k * k + ki * k + kj
                    for oy in range(oh):
                        iy = oy * stride + ki * dil - pad
                        for ox in range(ow):
                            ix = ox * stride + kj * dil - pad
                            if 0 <= iy < h and 0 <= ix < w:
                                val = x[bi, ci, iy, ix]
                            else:
                                val = 0
                            out[bi, row, oy * ow + ox] = val


def im2col(x, k, stride, pad, dil):
    b, c, h, w = x.shape
    oh = conv_out_size(h, k, stride, pad, dil)
    ow = conv_out_size(w, k, stride, pad, dil)
    out = np.empty((b, c * k * k, oh * ow), dtype=x.dtype)
    x = np.ascontiguousarray(x)
    _im2col_impl(x, out, k, stride, pad, dil)
    return out


def _col2im_impl(floating[:, :, ::1] cols, floating[:, :, :, ::1] out,
                 Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad, Py_ssize_t dil):
    cdef Py_ssize_t b = out.shape[0], c = out.shape[1], h = out.shape[2], w = out.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - dil * (k - 1) - 1) // stride + 1
    cdef Py_ssize_t ow = (w + 2 * pad - dil * (k - 1) - 1) // stride + 1
    cdef Py_ssize_t bi, ci, ki, kj, oy, ox, iy, ix, row
    for bi in range(b):
        for ci in range(c):
            for ki in range(k):
                for kj in range(k):
                    row = ci * k * k + ki * k + kj
                    for oy in range(oh):
                        iy = oy * stride + ki * dil - pad
                        if iy < 0 or iy >= h:
                            continue
                        for ox in range(ow):
                            ix = ox * stride + kj * dil - pad
                            if 0 <= ix < w:
                                out[bi, ci, iy, ix] += cols[bi, row, oy * ow + ox]


def col2im(cols, x_shape, k, stride, pad, dil):
    out = np.zeros(x_shape, dtype=cols.dtype)
    cols = np.ascontiguousarray(cols)
    _col2im_impl(cols, out, k, stride, pad, dil)
    return out


def _interp_axis(Py_ssize_t n_in, Py_ssize_t n_out):
    """Source indices and weights for align-corners=false interpolation."""
    cdef double scale = (<double> n_in) / (<double> n_out)
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w1 = src - i0
    return i0, i1, w1


def _bilinear_fwd_impl(floating[:, :, ::1] x, floating[:, :, ::1] out,
                       Py_ssize_t[::1] y0, Py_ssize_t[::1] y1, double[::1] wy,
                       Py_ssize_t[::1] x0, Py_ssize_t[::1] x1, double[::1] wx):
    cdef Py_ssize_t c = x.shape[0], oh = out.shape[1], ow = out.shape[2]
    cdef Py_ssize_t ci, oy, ox
    cdef double a, b
    for ci in range(c):
        for oy in range(oh):
            for ox in range(ow):
                a = (1 - wx[ox]) * x[ci, y0[oy], x0[ox]] + wx[ox] * x[ci, y0[oy], x1[ox]]
                b = (1 - wx[ox]) * x[ci, y1[oy], x0[ox]] + wx[ox] * x[ci, y1[oy], x1[ox]]
                out[ci, oy, ox] = <floating> ((1 - wy[oy]) * a + wy[oy] * b)


def bilinear_forward(x, out_h, out_w):
    c, h, w = x.shape
    y0, y1, wy = _interp_axis(h, out_h)
    x0, x1, wx = _interp_axis(w, out_w)
    out = np.empty((c, out_h, out_w), dtype=x.dtype)
    x = np.ascontiguousarray(x)
    _bilinear_fwd_impl(x, out, y0, y1, wy, x0, x1, wx)
    return out


def _bilinear_bwd_impl(floating[:, :, ::1] g, floating[:, :, ::1] out,
                       Py_ssize_t[::1] y0, Py_ssize_t[::1] y1, double[::1] wy,
                       Py_ssize_t[::1] x0, Py_ssize_t[::1] x1, double[::1] wx):
    cdef Py_ssize_t c = g.shape[0], oh = g.shape[1], ow = g.shape[2]
    cdef Py_ssize_t ci, oy, ox
    cdef double gv
    for ci in range(c):
        for oy in range(oh):
            for ox in range(ow):
                gv = g[ci, oy, ox]
                out[ci, y0[oy], x0[ox]] += <floating> ((1 - wy[oy]) * (1 - wx[ox]) * gv)
                out[ci, y0[oy], x1[ox]] += <floating> ((1 - wy[oy]) * wx[ox] * gv)
                out[ci, y1[oy], x0[ox]] += <floating> (wy[oy] * (1 - wx[ox]) * gv)
                out[ci, y1[oy], x1[ox]] += <floating> (wy[oy] * wx[ox] * gv)


def bilinear_backward(g, in_h, in_w):
    c, oh, ow = g.shape
    y0, y1, wy = _interp_axis(in_h, oh)
    x0, x1, wx = _interp_axis(in_w, ow)
    out = np.zeros((c, in_h, in_w), dtype=g.dtype)
    g = np.ascontiguousarray(g)
    _bilinear_bwd_impl(g, out, y0, y1, wy, x0, x1, wx)
    return out


def count_components(mask):
    """Number of 8-connected components of nonzero pixels in a 2D array."""
    cdef cnp.uint8_t[:, ::1] m = np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    seen_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] seen = seen_arr
    stack_arr = np.empty(h * w, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    cdef Py_ssize_t top, count = 0
    cdef Py_ssize_t sy, sx, y, x, ny, nx, dy, dx, pos
    for sy in range(h):
        for sx in range(w):
            if m[sy, sx] == 0 or seen[sy, sx]:
                continue
            count += 1
            top = 0
            stack[top] = sy * w + sx
            top += 1
            seen[sy, sx] = 1
            while top > 0:
                top -= 1
                pos = stack[top]
                y = pos // w
                x = pos % w
                for dy in range(-1, 2):
                    ny = y + dy
                    if ny < 0 or ny >= h:
                        continue
                    for dx in range(-1, 2):
                        if dy == 0 and dx == 0:
                            continue
                        nx = x + dx
                        if nx < 0 or nx >= w:
                            continue
                        if m[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = 1
                            stack[top] = ny * w + nx
                            top += 1
    return count
