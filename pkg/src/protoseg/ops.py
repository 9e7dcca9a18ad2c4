"""Autodiff ops beyond basic arithmetic: softmax, normalization,
convolution, bilinear upsampling, cross-entropy, and the finite
difference gradient checker used to validate all of them.
"""

import numpy as np

from . import kernels
from .errors import DataError, DimensionError, NumericalError
from .tensor import Tape, Tensor, _check_same_dtype, _finish, backward


def softmax(x, axis=-1):
    """Max-shifted softmax along ``axis``; each slice sums to one."""
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - dot),)

    return _finish("softmax", y, (x,), bwd)


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize the last axis to zero mean, unit variance, then apply
    a per-feature affine transform."""
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(
            f"layer_norm: gain/bias must be shape ({d},), got {gain.shape}/{bias.shape}")
    _check_same_dtype("layer_norm", x, gain, bias)
    return _normalize(x, gain, bias, eps, axes=(-1,), affine_shape=(d,),
                      sum_axes=tuple(range(x.ndim - 1)), name="layer_norm")


def channel_norm2d(x, gain, bias, eps=1e-5):
    """Per-channel normalization of a (C, H, W) or (B, C, H, W) map over
    its spatial positions. Batch-size independent, unlike batch norm."""
    if x.ndim not in (3, 4):
        raise DimensionError(f"channel_norm2d expects 3D or 4D input, got {x.shape}")
    c = x.shape[-3]
    if gain.shape != (c,) or bias.shape != (c,):
        raise DimensionError(
            f"channel_norm2d: gain/bias must be shape ({c},), got {gain.shape}/{bias.shape}")
    _check_same_dtype("channel_norm2d", x, gain, bias)
    spatial = (-2, -1)
    sum_axes = (1, 2) if x.ndim == 3 else (0, 2, 3)
    return _normalize(x, gain, bias, eps, axes=spatial, affine_shape=(c, 1, 1),
                      sum_axes=sum_axes, name="channel_norm2d")


def _normalize(x, gain, bias, eps, axes, affine_shape, sum_axes, name):
    """Shared normalize-then-affine kernel. ``axes`` are reduced for the
    statistics; ``sum_axes`` are the axes the affine parameters broadcast
    along, reduced in their gradient."""
    xd = x.data
    mu = xd.mean(axis=axes, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gb = gain.data.reshape(affine_shape)
    y = xhat * gb + bias.data.reshape(affine_shape)

    def bwd(g):
        dgain = (g * xhat).sum(axis=sum_axes).reshape(gain.shape)
        dbias = g.sum(axis=sum_axes).reshape(bias.shape)
        dxhat = g * gb
        m1 = dxhat.mean(axis=axes, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=axes, keepdims=True)
        dx = inv * (dxhat - m1 - xhat * m2)
        return dx, dgain, dbias

    return _finish(name, y, (x, gain, bias), bwd)


def conv2d(x, weight, bias=None, stride=1, padding=0, dilation=1):
    """2D cross-correlation. ``x`` is (Cin, H, W) or (B, Cin, H, W);
    ``weight`` is (Cout, Cin, k, k) with odd square k."""
    if weight.ndim != 4 or weight.shape[2] != weight.shape[3]:
        raise DimensionError(f"conv2d: weight must be (Cout, Cin, k, k), got {weight.shape}")
    cout, cin, k, _ = weight.shape
    if k % 2 != 1:
        raise DimensionError(f"conv2d: kernel size must be odd, got {k}")
    batched = x.ndim == 4
    if not batched and x.ndim != 3:
        raise DimensionError(f"conv2d: input must be 3D or 4D, got {x.shape}")
    if x.shape[-3] != cin:
        raise DimensionError(f"conv2d: input channels {x.shape[-3]} != weight Cin {cin}")
    inputs = [x, weight]
    if bias is not None:
        if bias.shape != (cout,):
            raise DimensionError(f"conv2d: bias must be shape ({cout},), got {bias.shape}")
        inputs.append(bias)
    _check_same_dtype("conv2d", *inputs)

    h, w = x.shape[-2], x.shape[-1]
    oh = kernels.conv_out_size(h, k, stride, padding, dilation)
    ow = kernels.conv_out_size(w, k, stride, padding, dilation)
    if oh < 1 or ow < 1:
        raise DimensionError(
            f"conv2d: output size {oh}x{ow} < 1 for input {h}x{w}, k={k}, "
            f"stride={stride}, padding={padding}, dilation={dilation}")

    x4 = x.data if batched else x.data[None]
    b = x4.shape[0]
    ckk = cin * k * k
    lsz = oh * ow
    cols = kernels.im2col(x4, k, stride, padding, dilation)
    cols_k = np.ascontiguousarray(cols.transpose(1, 0, 2)).reshape(ckk, b * lsz)
    w2 = weight.data.reshape(cout, ckk)
    out2 = w2 @ cols_k
    out = np.ascontiguousarray(
        out2.reshape(cout, b, lsz).transpose(1, 0, 2)).reshape(b, cout, oh, ow)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    x4_shape = x4.shape

    def bwd(g):
        g4 = g if batched else g[None]
        g2 = np.ascontiguousarray(g4.reshape(b, cout, lsz).transpose(1, 0, 2)).reshape(
            cout, b * lsz)
        dw = (g2 @ cols_k.T).reshape(weight.shape)
        dcols = np.ascontiguousarray(
            (w2.T @ g2).reshape(ckk, b, lsz).transpose(1, 0, 2))
        dx4 = kernels.col2im(dcols, x4_shape, k, stride, padding, dilation)
        dx = dx4 if batched else dx4[0]
        if bias is not None:
            return dx, dw, g4.sum(axis=(0, 2, 3))
        return dx, dw

    return _finish("conv2d", out if batched else out[0], tuple(inputs), bwd)


def bilinear_upsample(x, out_h, out_w):
    """Resize a (C, H, W) tensor up to (C, out_h, out_w) with
    align-corners=false bilinear interpolation."""
    if x.ndim != 3:
        raise DimensionError(f"bilinear_upsample expects (C, H, W), got {x.shape}")
    _, h, w = x.shape
    if out_h < h or out_w < w:
        raise DimensionError(
            f"bilinear_upsample: target {out_h}x{out_w} smaller than input {h}x{w}")
    y = kernels.bilinear_forward(x.data, int(out_h), int(out_w))
    return _finish("bilinear_upsample", y, (x,),
                   lambda g: (kernels.bilinear_backward(g, h, w),))


def cross_entropy(logits, targets, ignore_id=255):
    """Mean negative log-softmax of ``logits`` (N, P) at integer targets
    (P,). Positions labelled ``ignore_id`` are skipped; if every position
    is ignored the loss is exactly zero with a zero gradient."""
    if logits.ndim != 2:
        raise DimensionError(f"cross_entropy: logits must be (N, P), got {logits.shape}")
    n, p = logits.shape
    targets = np.asarray(targets)
    if targets.shape != (p,):
        raise DimensionError(
            f"cross_entropy: targets must be shape ({p},), got {targets.shape}")
    targets = targets.astype(np.int64)
    valid = targets != ignore_id
    bad = valid & ((targets < 0) | (targets >= n))
    if bad.any():
        raise DataError(
            f"cross_entropy: target {int(targets[bad][0])} outside [0, {n}) at "
            f"position {int(np.nonzero(bad)[0][0])}")
    n_valid = int(valid.sum())
    if n_valid == 0:
        zero = np.asarray(0.0, dtype=logits.dtype)
        return _finish("cross_entropy", zero, (logits,),
                       lambda g: (np.zeros_like(logits.data),))

    z = logits.data - logits.data.max(axis=0, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=0))
    cols = np.nonzero(valid)[0]
    picked = z[targets[cols], cols]
    loss = np.asarray((lse[cols] - picked).sum() / n_valid, dtype=logits.dtype)

    def bwd(g):
        soft = np.exp(z - lse[None, :])
        soft[targets[cols], cols] -= 1.0
        soft[:, ~valid] = 0.0
        return (soft * (g / n_valid),)

    return _finish("cross_entropy", loss, (logits,), bwd)


def grad_check(f, x, eps=1e-4):
    """Max relative error between analytic and central-difference
    gradients of a scalar-valued tensor function at ``x``.

    Requires float64 input; float32 lacks the headroom for eps**2 error.
    """
    if x.dtype != np.float64:
        raise NumericalError("grad_check requires a float64 tensor")
    x.requires_grad = True
    x.grad = None
    with Tape():
        y = f(x)
        if not isinstance(y, Tensor) or y.size != 1:
            raise DimensionError("grad_check: f must return a scalar tensor")
        backward(y)
    analytic = x.grad.copy() if x.grad is not None else np.zeros_like(x.data)

    flat = x.data.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = f(x).item()
        flat[i] = orig - eps
        down = f(x).item()
        flat[i] = orig
        numeric[i] = (up - down) / (2 * eps)

    a = analytic.reshape(-1)
    err = np.abs(a - numeric) / np.maximum(1.0, np.abs(a))
    return float(err.max()) if err.size else 0.0
