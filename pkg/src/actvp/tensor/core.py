"""Dense float64 tensors with taped reverse-mode automatic differentiation.

The graph is recorded on an explicit Tape: one tape per forward pass, one
backward() per tape. Ops executed while no tape is active run in plain
inference mode and record nothing.
"""
from __future__ import annotations

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


class TapeError(RuntimeError):
    """Raised on tape misuse (second backward, backward without tape)."""


_TAPE_STACK: list["Tape"] = []


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tape:
    """Op recorder for one forward pass.

    Usage::

        with Tape() as tape:
            loss = ...
        backward(loss)

    A tape supports a single backward; a second call raises TapeError.
    """

    def __init__(self):
        self._records = []  # (out, inputs, vjp) in execution order
        self._consumed = False

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        assert _TAPE_STACK and _TAPE_STACK[-1] is self
        _TAPE_STACK.pop()
        return False


class Tensor:
    """A dense float64 array plus an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def zero_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad.fill(0.0)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return slice_(self, key)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def mean(self):
        return mean(self)

    def sum(self):
        return tsum(self)


def parameter(data, name=None):
    """A trainable leaf tensor with a zeroed gradient buffer."""
    t = Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)
    t.grad = np.zeros_like(t.data)
    return t


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(out_data, inputs, vjp):
    """Wrap op output; register on the active tape if gradients are needed."""
    tape = _active_tape()
    track = tape is not None and any(i.requires_grad for i in inputs)
    out = Tensor(out_data, requires_grad=track)
    if track:
        tape._records.append((out, inputs, vjp))
    return out


def backward(loss):
    """Populate .grad with d(loss)/d(tensor) for everything reachable from loss.

    Gradients accumulate (+=) into existing buffers; tensors not reachable
    from loss are left untouched.
    """
    if loss.data.shape != ():
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.data.shape}")
    tape = _active_tape()
    if tape is None:
        raise TapeError("backward called with no active tape")
    if tape._consumed:
        raise TapeError("tape already consumed by a previous backward")
    tape._consumed = True

    loss.grad = np.ones((), dtype=np.float64)
    # Reverse-order walk: when a record is processed, its output gradient is
    # final (all consumers already contributed), so vjp results may alias it.
    # installed guards the one unsafe alias: a vjp handing the same buffer to
    # two different inputs (e.g. add(x, y) passing g through to both).
    installed = set()
    for out, inputs, vjp in reversed(tape._records):
        if out.grad is None:
            continue
        grads = vjp(out.grad)
        for inp, g in zip(inputs, grads):
            if g is None or not inp.requires_grad:
                continue
            if inp.grad is None:
                g = np.asarray(g)
                if id(g) in installed or not g.flags.writeable:
                    g = g.copy()
                inp.grad = g
                installed.add(id(g))
            elif inp.grad.flags.writeable and inp.grad.base is None:
                inp.grad += g
            else:
                installed.discard(id(inp.grad))
                inp.grad = inp.grad + g
                installed.add(id(inp.grad))


def _unbroadcast(grad, shape):
    """Sum a broadcasted gradient back down to `shape`."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise / arithmetic


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: shapes {a.shape} and {b.shape} do not broadcast")
    return _record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub: shapes {a.shape} and {b.shape} do not broadcast")
    return _record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul: shapes {a.shape} and {b.shape} do not broadcast")

    def vjp(g):
        return (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape))

    return _record(out, (a, b), vjp)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul requires ndim >= 2, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dims differ, {a.shape} @ {b.shape}")
    out = np.matmul(a.data, b.data)
    need_a, need_b = a.requires_grad, b.requires_grad

    def vjp(g):
        ga = gb = None
        if need_a:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if need_b:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return (ga, gb)

    return _record(out, (a, b), vjp)


def exp(x):
    x = as_tensor(x)
    out = np.exp(x.data)
    return _record(out, (x,), lambda g: (g * out,))


def relu(x):
    x = as_tensor(x)
    mask = x.data > 0.0
    return _record(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def gelu(x):
    """Exact erf-form GELU."""
    x = as_tensor(x)
    phi = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))
    out = x.data * phi

    def vjp(g):
        pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT_2PI
        return (g * (phi + x.data * pdf),)

    return _record(out, (x,), vjp)


def clip(x, lo, hi):
    x = as_tensor(x)
    out = np.clip(x.data, lo, hi)
    inside = (x.data > lo) & (x.data < hi)
    return _record(out, (x,), lambda g: (g * inside,))


# ---------------------------------------------------------------------------
# normalization / attention pieces


def linear(x, w, b=None):
    """x (..., din) @ w (din, dout) + b as a single taped op."""
    x, w = as_tensor(x), as_tensor(w)
    shape = x.data.shape
    din = shape[-1]
    if w.data.ndim != 2 or w.shape[0] != din:
        raise ShapeError(f"linear: {shape} @ {w.shape}")
    dout = w.shape[1]
    flat = x.data.reshape(-1, din)
    y = flat @ w.data
    if b is not None:
        b = as_tensor(b)
        y = y + b.data
    out = y.reshape(*shape[:-1], dout)
    need_x, need_w = x.requires_grad, w.requires_grad

    def vjp(g):
        gf = g.reshape(-1, dout)
        gx = (gf @ w.data.T).reshape(shape) if need_x else None
        gw = flat.T @ gf if need_w else None
        if b is None:
            return (gx, gw)
        return (gx, gw, gf.sum(axis=0))

    return _record(out, (x, w) if b is None else (x, w, b), vjp)


def layer_norm(x, gamma=None, beta=None, eps=1e-8):
    """Normalize the last axis to zero mean, unit variance, then optional affine."""
    x = as_tensor(x)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    y = xc * inv
    if gamma is None:
        def vjp(g):
            gm = g.mean(axis=-1, keepdims=True)
            gym = (g * y).mean(axis=-1, keepdims=True)
            return (inv * (g - gm - y * gym),)

        return _record(y, (x,), vjp)

    out = y * gamma.data + beta.data
    D = x.shape[-1]

    def vjp_affine(g):
        g2 = g.reshape(-1, D)
        y2 = y.reshape(-1, D)
        ggamma = (g2 * y2).sum(axis=0)
        gbeta = g2.sum(axis=0)
        gy = g * gamma.data
        gm = gy.mean(axis=-1, keepdims=True)
        gym = (gy * y).mean(axis=-1, keepdims=True)
        return (inv * (gy - gm - y * gym), ggamma, gbeta)

    return _record(out, (x, gamma, beta), vjp_affine)


def expand_rows(t, batch):
    """Broadcast (T, d) to (batch, T, d); gradient sums over the batch axis."""
    t = as_tensor(t)
    out = np.broadcast_to(t.data, (batch, *t.shape))
    return _record(out, (t,), lambda g: (g.sum(axis=0),))


def softmax(x, axis=-1):
    x = as_tensor(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - dot),)

    return _record(y, (x,), vjp)


# ---------------------------------------------------------------------------
# shape ops


def reshape(x, shape):
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"cannot reshape {x.shape} to {shape}")
    return _record(out, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x, axes):
    x = as_tensor(x)
    inv = tuple(np.argsort(axes))
    return _record(x.data.transpose(axes), (x,), lambda g: (g.transpose(inv),))


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]}")
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _record(out, tuple(tensors), vjp)


def slice_(x, key):
    """Basic (slice/int) indexing with scatter-add backward."""
    x = as_tensor(x)
    out = x.data[key]

    def vjp(g):
        gx = np.zeros_like(x.data)
        gx[key] = g
        return (gx,)

    return _record(out, (x,), vjp)


# ---------------------------------------------------------------------------
# reductions


def tsum(x):
    x = as_tensor(x)
    return _record(np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),))


def mean(x):
    x = as_tensor(x)
    n = x.data.size
    return _record(np.asarray(x.data.mean()), (x,), lambda g: (np.broadcast_to(g / n, x.shape).copy(),))


def sum_of_squares(x):
    x = as_tensor(x)
    return _record(np.asarray((x.data * x.data).sum()), (x,), lambda g: (2.0 * g * x.data,))


# ---------------------------------------------------------------------------
# convolution


def _im2col(xp, kh, kw, sh, sw):
    # xp: (B, C, Hp, Wp) -> (B, Ho, Wo, C, kh, kw)
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::sh, ::sw]
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5))


def conv2d(x, w, stride=1, padding=0):
    """2-D convolution (cross-correlation), NCHW layout, square stride/padding."""
    x, w = as_tensor(x), as_tensor(w)
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernel, got {x.shape}, {w.shape}")
    B, C, H, W = x.shape
    O, Ck, kh, kw = w.shape
    if Ck != C:
        raise ShapeError(f"conv2d: input channels {C} != kernel channels {Ck} ({x.shape} vs {w.shape})")
    s, p = int(stride), int(padding)
    if H + 2 * p < kh or W + 2 * p < kw:
        raise ShapeError(f"conv2d: kernel {w.shape} larger than padded input {x.shape}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data
    cols = _im2col(xp, kh, kw, s, s)  # (B, Ho, Wo, C, kh, kw)
    B_, Ho, Wo = cols.shape[:3]
    cols2d = cols.reshape(B * Ho * Wo, C * kh * kw)
    wmat = w.data.reshape(O, C * kh * kw)
    out = (cols2d @ wmat.T).reshape(B, Ho, Wo, O).transpose(0, 3, 1, 2)

    need_x, need_w = x.requires_grad, w.requires_grad

    def vjp(g):
        gm = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(B * Ho * Wo, O)
        gw = (gm.T @ cols2d).reshape(w.shape) if need_w else None
        gx = None
        if need_x:
            dcols = (gm @ wmat).reshape(B, Ho, Wo, C, kh, kw)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i:i + s * Ho:s, j:j + s * Wo:s] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            gx = gxp[:, :, p:p + H, p:p + W] if p else gxp
        return (gx, gw)

    return _record(np.ascontiguousarray(out), (x, w), vjp)
