"""Dense n-dimensional tensors with reverse-mode automatic differentiation.

A Tensor wraps a contiguous row-major numpy array. Operations executed
inside a ``with Tape():`` block are recorded; ``backward(loss)`` replays
the records in reverse and populates ``.grad`` on every participating
tensor that requires gradients. Outside a tape block no graph is built,
so inference runs without bookkeeping.

Float32 is the default element type; gradient checking requires float64
tensors, which every factory accepts via ``dtype``.
"""

import numpy as np

from .errors import DimensionError, NumericalError, TapeError

DEFAULT_DTYPE = np.float32

_FLOAT_DTYPES = (np.float32, np.float64)

# When enabled, every op forward verifies its output is finite and names
# itself on failure. Off by default in the training hot path; the trainer
# re-runs a failed step with checks on to locate the first bad op.
_CHECK_FINITE = False


def set_finite_checks(enabled):
    global _CHECK_FINITE
    previous = _CHECK_FINITE
    _CHECK_FINITE = bool(enabled)
    return previous


class Tape:
    """Ordered record of operations for one reverse-mode pass.

    Records are (output, inputs, backward_fn) triples; backward_fn maps
    the output gradient to one gradient array (or None) per input.
    A tape can be replayed exactly once.
    """

    def __init__(self):
        self.records = []
        self.replayed = False

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPE_STACK.pop()
        return False

    def record(self, out, inputs, backward_fn):
        out._tape = self
        self.records.append((out, inputs, backward_fn))


_TAPE_STACK = []


def active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tensor:
    """A shaped, row-major float array with optional gradient."""

    __slots__ = ("data", "requires_grad", "grad", "_tape", "_is_leaf")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype if dtype is not None else None)
        if arr.dtype.type not in _FLOAT_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._tape = None
        self._is_leaf = True

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        if self.data.size != 1:
            raise DimensionError(f"item() requires a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data.copy(), requires_grad=False)

    def zero_grad(self):
        self.grad = None

    # Sugar for the most common compositions.
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other) if isinstance(other, Tensor) else scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes=None):
        return transpose(self, axes)

    def sum(self):
        return tensor_sum(self)

    def mean(self):
        return tensor_mean(self)

    def backward(self):
        backward(self)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}{flag})"


def tensor(data, requires_grad=False, dtype=None):
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


def zeros(shape, dtype=None, requires_grad=False):
    return Tensor(np.zeros(shape, dtype=dtype or DEFAULT_DTYPE), requires_grad=requires_grad)


def ones(shape, dtype=None, requires_grad=False):
    return Tensor(np.ones(shape, dtype=dtype or DEFAULT_DTYPE), requires_grad=requires_grad)


def randn(rng, shape, std=1.0, dtype=None, requires_grad=False):
    arr = rng.standard_normal(shape) * std
    return Tensor(arr.astype(dtype or DEFAULT_DTYPE), requires_grad=requires_grad)


def _check_same_dtype(name, *tensors):
    dtypes = {t.dtype for t in tensors}
    if len(dtypes) > 1:
        raise TypeError(f"{name}: mixed dtypes {sorted(d.name for d in dtypes)}")


def _finish(name, out_arr, inputs, backward_fn):
    """Wrap an op result, optionally checking finiteness and recording."""
    if _CHECK_FINITE and not np.isfinite(out_arr).all():
        raise NumericalError(f"non-finite values produced by op '{name}'")
    out = Tensor(out_arr)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._is_leaf = False
        tape.record(out, tuple(inputs), backward_fn)
    return out


def backward(loss):
    """Replay the tape of ``loss`` in reverse, populating ``.grad`` buffers.

    Leaf tensors with ``requires_grad`` that were touched by the tape but
    do not reach the loss receive an explicit zero gradient.
    """
    if not isinstance(loss, Tensor) or loss._tape is None:
        raise TapeError("backward requires a loss recorded on a tape")
    tape = loss._tape
    if tape.replayed:
        raise TapeError("tape already replayed; record a fresh forward pass")
    if loss.size != 1:
        raise DimensionError(f"backward requires a scalar loss, got shape {loss.shape}")
    tape.replayed = True

    grads = {id(loss): np.ones_like(loss.data)}
    touched = {}
    for out, inputs, backward_fn in reversed(tape.records):
        for t in inputs:
            if t.requires_grad:
                touched[id(t)] = t
        g = grads.pop(id(out), None)
        if g is None:
            continue
        input_grads = backward_fn(g)
        for t, ig in zip(inputs, input_grads):
            if ig is None or not t.requires_grad:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + ig
            else:
                grads[key] = ig

    for key, t in touched.items():
        g = grads.get(key)
        if g is None:
            if t._is_leaf:
                g = np.zeros_like(t.data)
            else:
                continue
        if t.grad is None:
            t.grad = np.ascontiguousarray(g)
        else:
            t.grad = t.grad + g


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (inverse of trailing-axis broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    return g.reshape(shape)


def add(a, b):
    """Element-wise sum; ``b`` may be a trailing-shape bias or a scalar."""
    _check_same_dtype("add", a, b)
    if a.shape != b.shape and b.shape != a.shape[a.ndim - b.ndim :]:
        raise DimensionError(f"add: incompatible shapes {a.shape} and {b.shape}")
    out_arr = a.data + b.data
    return _finish("add", out_arr, (a, b), lambda g: (g, _unbroadcast(g, b.shape)))


def mul(a, b):
    """Element-wise product with the same shape rules as ``add``."""
    _check_same_dtype("mul", a, b)
    if a.shape != b.shape and b.shape != a.shape[a.ndim - b.ndim :]:
        raise DimensionError(f"mul: incompatible shapes {a.shape} and {b.shape}")
    out_arr = a.data * b.data
    ad, bd = a.data, b.data
    return _finish("mul", out_arr, (a, b),
                   lambda g: (g * bd, _unbroadcast(g * ad, b.shape)))


def scale(x, s):
    s = float(s)
    return _finish("scale", x.data * np.asarray(s, dtype=x.dtype), (x,), lambda g: (g * s,))


def relu(x):
    mask = x.data > 0
    return _finish("relu", np.where(mask, x.data, 0), (x,), lambda g: (g * mask,))


def matmul(a, b):
    """Standard 2D matrix product."""
    _check_same_dtype("matmul", a, b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner dims differ, {a.shape} x {b.shape}")
    ad, bd = a.data, b.data
    return _finish("matmul", ad @ bd, (a, b),
                   lambda g: (g @ bd.T, ad.T @ g))


def reshape(x, shape):
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != x.size:
        raise DimensionError(f"reshape: cannot view {x.shape} as {shape}")
    old_shape = x.shape
    out_arr = x.data.reshape(shape).copy()
    return _finish("reshape", out_arr, (x,), lambda g: (g.reshape(old_shape),))


def transpose(x, axes=None):
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    else:
        axes = tuple(int(a) for a in axes)
        if sorted(axes) != list(range(x.ndim)):
            raise DimensionError(f"transpose: bad axes {axes} for rank {x.ndim}")
    inverse = np.argsort(axes)
    out_arr = np.ascontiguousarray(np.transpose(x.data, axes))
    return _finish("transpose", out_arr, (x,),
                   lambda g: (np.ascontiguousarray(np.transpose(g, inverse)),))


def concat(tensors, axis=0):
    tensors = list(tensors)
    if not tensors:
        raise DimensionError("concat of an empty sequence")
    _check_same_dtype("concat", *tensors)
    axis = int(axis)
    ref = list(tensors[0].shape)
    for t in tensors[1:]:
        s = list(t.shape)
        s[axis] = ref[axis]
        if s != ref:
            raise DimensionError(
                f"concat: non-concat dims differ, {tensors[0].shape} vs {t.shape}")
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum(sizes)[:-1]
    out_arr = np.concatenate([t.data for t in tensors], axis=axis)
    return _finish("concat", out_arr, tuple(tensors),
                   lambda g: tuple(np.ascontiguousarray(p)
                                   for p in np.split(g, offsets, axis=axis)))


def tensor_sum(x):
    shape = x.shape
    out_arr = np.asarray(x.data.sum(), dtype=x.dtype)
    return _finish("sum", out_arr, (x,), lambda g: (np.full(shape, g, dtype=g.dtype),))


def tensor_mean(x):
    shape, n = x.shape, x.size
    out_arr = np.asarray(x.data.mean(), dtype=x.dtype)
    return _finish("mean", out_arr, (x,),
                   lambda g: (np.full(shape, g / n, dtype=g.dtype),))
