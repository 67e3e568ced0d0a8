"""Bias-corrected ADAM on lists of parameter tensors."""
from __future__ import annotations

import numpy as np


class NonFiniteGradError(RuntimeError):
    """A parameter gradient contains NaN or inf; names the parameter."""


class AdamState:
    """Per-parameter first/second moment buffers plus hyperparameters."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def adam_step(params, state, grads=None):
    """One in-place ADAM update; increments step_count.

    grads defaults to each parameter's .grad buffer.
    """
    if grads is None:
        grads = [p.grad for p in params]
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None or g.shape != p.data.shape:
            raise ValueError(f"parameter {p.name or i}: gradient missing or shape mismatch")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradError(f"non-finite gradient for parameter {p.name or i}")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def global_grad_norm(params):
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    return float(np.sqrt(total))


def clip_grad_norm(params, max_norm):
    """Scale all gradients in place so the global norm is at most max_norm."""
    norm = global_grad_norm(params)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return norm
