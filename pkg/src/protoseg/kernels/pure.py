"""Pure numpy implementations of the hot kernels.

These are the fallback used when the compiled extension is not built.
Shapes follow the conventions of the autodiff ops: convolution patches
are laid out row-major as (channel, ky, kx) and spatial positions as
(out_y * out_w + out_x).
"""

from collections import deque

import numpy as np


def conv_out_size(size, k, stride, pad, dil):
    return (size + 2 * pad - dil * (k - 1) - 1) // stride + 1


def im2col(x, k, stride, pad, dil):
    """Gather conv patches of a (B, C, H, W) array into (B, C*k*k, oh*ow)."""
    b, c, h, w = x.shape
    oh = conv_out_size(h, k, stride, pad, dil)
    ow = conv_out_size(w, k, stride, pad, dil)
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.empty((b, c, k * k, oh * ow), dtype=x.dtype)
    for ki in range(k):
        for kj in range(k):
            ys = ki * dil
            xs = kj * dil
            patch = x[:, :, ys : ys + (oh - 1) * stride + 1 : stride,
                      xs : xs + (ow - 1) * stride + 1 : stride]
            out[:, :, ki * k + kj, :] = patch.reshape(b, c, oh * ow)
    return out.reshape(b, c * k * k, oh * ow)


def col2im(cols, x_shape, k, stride, pad, dil):
    """Scatter-add (B, C*k*k, oh*ow) patch gradients back to (B, C, H, W)."""
    b, c, h, w = x_shape
    oh = conv_out_size(h, k, stride, pad, dil)
    ow = conv_out_size(w, k, stride, pad, dil)
    xp = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    c4 = cols.reshape(b, c, k * k, oh, ow)
    for ki in range(k):
        for kj in range(k):
            ys = ki * dil
            xs = kj * dil
            xp[:, :, ys : ys + (oh - 1) * stride + 1 : stride,
               xs : xs + (ow - 1) * stride + 1 : stride] += c4[:, :, ki * k + kj]
    if pad:
        return np.ascontiguousarray(xp[:, :, pad : pad + h, pad : pad + w])
    return xp


def interp_matrix(n_in, n_out, dtype):
    """Row-interpolation matrix for align-corners=false bilinear resizing."""
    m = np.zeros((n_out, n_in), dtype=dtype)
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w1 = (src - i0).astype(dtype)
    rows = np.arange(n_out)
    np.add.at(m, (rows, i0), (1 - w1).astype(dtype))
    np.add.at(m, (rows, i1), w1)
    return m


def bilinear_forward(x, out_h, out_w):
    """Upsample a (C, H, W) array to (C, out_h, out_w)."""
    _, h, w = x.shape
    my = interp_matrix(h, out_h, x.dtype)
    mx = interp_matrix(w, out_w, x.dtype)
    return np.ascontiguousarray(my @ (x @ mx.T))


def bilinear_backward(g, in_h, in_w):
    """Adjoint of bilinear_forward: (C, out_h, out_w) grads to (C, in_h, in_w)."""
    _, oh, ow = g.shape
    my = interp_matrix(in_h, oh, g.dtype)
    mx = interp_matrix(in_w, ow, g.dtype)
    return np.ascontiguousarray(my.T @ (g @ mx))


_NEIGHBORS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def count_components(mask):
    """Number of 8-connected components of nonzero pixels in a 2D array."""
    mask = np.asarray(mask) != 0
    h, w = mask.shape
    seen = np.zeros((h, w), dtype=bool)
    count = 0
    for sy in range(h):
        row = mask[sy]
        for sx in range(w):
            if not row[sx] or seen[sy, sx]:
                continue
            count += 1
            queue = deque([(sy, sx)])
            seen[sy, sx] = True
            while queue:
                y, x = queue.popleft()
                for dy, dx in _NEIGHBORS_8:
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
    return count
