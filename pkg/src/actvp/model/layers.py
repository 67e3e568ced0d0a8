"""Transformer and CNN building blocks on the taped tensor engine."""
from __future__ import annotations

import numpy as np

from ..tensor import (
    Tensor,
    add,
    concat,
    conv2d,
    expand_rows,
    gelu,
    layer_norm,
    linear,
    matmul,
    mul,
    relu,
    reshape,
    softmax,
    transpose,
)


class Params:
    """Ordered name -> parameter registry with fan-in uniform init."""

    def __init__(self, rng):
        self.rng = rng
        self.entries = {}

    def weight(self, name, shape, fan_in):
        from ..tensor import parameter
        bound = np.sqrt(1.0 / fan_in)
        t = parameter(self.rng.uniform(-bound, bound, size=shape), name)
        self.entries[name] = t
        return t

    def const(self, name, value):
        from ..tensor import parameter
        t = parameter(value, name)
        self.entries[name] = t
        return t

    def items(self):
        return list(self.entries.items())

    def values(self):
        return list(self.entries.values())


class Affine:
    """Post-layer-norm scale and shift."""

    def __init__(self, p, name, dim):
        self.g = p.const(f"{name}.g", np.ones(dim))
        self.b = p.const(f"{name}.b", np.zeros(dim))

    def __call__(self, x):
        return layer_norm(x, self.g, self.b)


class Attention:
    """Multi-head attention; self-attention when memory is None."""

    def __init__(self, p, name, d_model, heads):
        self.h = heads
        self.dk = d_model // heads
        self.scale = 1.0 / np.sqrt(self.dk)
        self.d = d_model
        self.wq = p.weight(f"{name}.wq", (d_model, d_model), d_model)
        self.wkv = p.weight(f"{name}.wkv", (d_model, 2 * d_model), d_model)
        self.bq = p.const(f"{name}.bq", np.zeros(d_model))
        self.bkv = p.const(f"{name}.bkv", np.zeros(2 * d_model))
        self.wo = p.weight(f"{name}.wo", (d_model, d_model), d_model)
        self.bo = p.const(f"{name}.bo", np.zeros(d_model))

    def _split(self, x, B, T):
        return transpose(reshape(x, (B, T, self.h, self.dk)), (0, 2, 1, 3))

    def __call__(self, x, memory=None, record=None):
        B, T, _ = x.shape
        src = memory if memory is not None else x
        S = src.shape[1]
        q = self._split(linear(x, self.wq, self.bq), B, T)
        kv = linear(src, self.wkv, self.bkv)
        k = self._split(kv[:, :, : self.d], B, S)
        v = self._split(kv[:, :, self.d:], B, S)
        scores = mul(matmul(q, transpose(k, (0, 1, 3, 2))), self.scale)
        probs = softmax(scores, axis=-1)
        if record is not None:
            record.append(probs.data.copy())
        out = matmul(probs, v)  # (B, h, T, dk)
        out = reshape(transpose(out, (0, 2, 1, 3)), (B, T, self.d))
        return linear(out, self.wo, self.bo)


class FeedForward:
    def __init__(self, p, name, d_model, width):
        self.w1 = p.weight(f"{name}.w1", (d_model, width), d_model)
        self.b1 = p.const(f"{name}.b1", np.zeros(width))
        self.w2 = p.weight(f"{name}.w2", (width, d_model), width)
        self.b2 = p.const(f"{name}.b2", np.zeros(d_model))

    def __call__(self, x):
        return linear(gelu(linear(x, self.w1, self.b1)), self.w2, self.b2)


class EncoderLayer:
    """Pre-norm self-attention + GELU feed-forward block."""

    def __init__(self, p, name, d_model, heads, ff_width):
        self.ln1 = Affine(p, f"{name}.ln1", d_model)
        self.attn = Attention(p, f"{name}.attn", d_model, heads)
        self.ln2 = Affine(p, f"{name}.ln2", d_model)
        self.ff = FeedForward(p, f"{name}.ff", d_model, ff_width)

    def __call__(self, x, record=None):
        x = add(x, self.attn(self.ln1(x), record=record))
        return add(x, self.ff(self.ln2(x)))


class DecoderLayer:
    """Pre-norm self-attention, cross-attention, feed-forward."""

    def __init__(self, p, name, d_model, heads, ff_width):
        self.ln1 = Affine(p, f"{name}.ln1", d_model)
        self.self_attn = Attention(p, f"{name}.self", d_model, heads)
        self.ln2 = Affine(p, f"{name}.ln2", d_model)
        self.cross_attn = Attention(p, f"{name}.cross", d_model, heads)
        self.ln3 = Affine(p, f"{name}.ln3", d_model)
        self.ff = FeedForward(p, f"{name}.ff", d_model, ff_width)

    def __call__(self, x, memory, record=None):
        x = add(x, self.self_attn(self.ln1(x)))
        x = add(x, self.cross_attn(self.ln2(x), memory=memory, record=record))
        return add(x, self.ff(self.ln3(x)))


class ConvStack:
    """Stride-2 conv pyramid: 96 -> 6 spatial, ReLU between layers."""

    def __init__(self, p, name, channels, d_model):
        self.layers = []
        cin = 3
        for i, cout in enumerate(channels):
            w = p.weight(f"{name}.conv{i}.w", (cout, cin, 3, 3), cin * 9)
            b = p.const(f"{name}.conv{i}.b", np.zeros((cout, 1, 1)))
            self.layers.append((w, b))
            cin = cout
        self.proj_w = p.weight(f"{name}.proj.w", (cin, d_model), cin)
        self.proj_b = p.const(f"{name}.proj.b", np.zeros(d_model))

    def __call__(self, x):
        """x (B, 3, H, W) in [0, 1] -> (B, tokens, d_model)."""
        for w, b in self.layers:
            x = relu(add(conv2d(x, w, stride=2, padding=1), b))
        B, C, H, W = x.shape
        tokens = transpose(reshape(x, (B, C, H * W)), (0, 2, 1))  # (B, HW, C)
        return linear(tokens, self.proj_w, self.proj_b)


def tile_rows(param, batch):
    """Broadcast a (T, d) parameter to (batch, T, d) with gradient support."""
    return expand_rows(param, batch)


def stack_batch(arrays):
    """Plain-data batch stack to a constant tensor."""
    return Tensor(np.stack(arrays))
