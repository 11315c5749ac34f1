"""Differentiable building blocks for the encoder, the experts and the losses.

Fused operations (softmax, layer norm, the losses) carry closed-form
backward rules instead of being composed from elementwise nodes.
"""

import math

import numpy as np

from moedistill.autograd.tensor import as_tensor
from moedistill.autograd.tensor import Tensor
from moedistill import exception

GELU_C = math.sqrt(2.0 / math.pi)
GELU_A = 0.044715

LAYER_NORM_EPS = 1e-12
KL_CLAMP = 1e-12


def gelu(x):
    """GELU, tanh approximation."""
    x = as_tensor(x)
    a = x.data
    t = np.tanh(GELU_C * (a + GELU_A * a ** 3))

    def _backward(g):
        d = (0.5 * (1.0 + t) +
             0.5 * a * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * a * a))
        return (g * d,)

    return Tensor.from_op(0.5 * a * (1.0 + t), (x,), _backward, "gelu")


def tanh(x):
    x = as_tensor(x)
    y = np.tanh(x.data)

    def _backward(g):
        return (g * (1.0 - y * y),)

    return Tensor.from_op(y, (x,), _backward, "tanh")


def _softmax(a):
    e = np.exp(a - a.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax(x):
    """Softmax over the last axis."""
    x = as_tensor(x)
    y = _softmax(x.data)

    def _backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return Tensor.from_op(y, (x,), _backward, "softmax")


def _log_softmax(a):
    shifted = a - a.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def log_softmax(x):
    x = as_tensor(x)
    y = _log_softmax(x.data)

    def _backward(g):
        return (g - np.exp(y) * g.sum(axis=-1, keepdims=True),)

    return Tensor.from_op(y, (x,), _backward, "log_softmax")


def layer_norm(x, gamma, beta, eps=LAYER_NORM_EPS):
    """Normalize the last axis, then scale by `gamma` and shift by `beta`."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    width = x.shape[-1]
    if gamma.shape != (width,) or beta.shape != (width,):
        raise exception.ShapeMismatch(
            op="layer_norm", shapes=[x.shape, gamma.shape, beta.shape])
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std

    def _backward(g):
        gxhat = g * gamma.data
        gx = inv_std * (gxhat - gxhat.mean(axis=-1, keepdims=True) -
                        xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
        ggamma = (g * xhat).reshape(-1, width).sum(axis=0)
        gbeta = g.reshape(-1, width).sum(axis=0)
        return gx, ggamma, gbeta

    return Tensor.from_op(xhat * gamma.data + beta.data, (x, gamma, beta),
                          _backward, "layer_norm")


def linear(x, weight, bias=None):
    out = as_tensor(x) @ weight
    if bias is not None:
        out = out + bias
    return out


def dropout(x, rate, rng=None):
    """Inverted dropout; identity when `rng` is None (evaluation)."""
    if rng is None or rate <= 0.0:
        return as_tensor(x)
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return as_tensor(x) * keep


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise exception.ShapeMismatch(op="concat",
                                      shapes=[t.shape for t in tensors])
    bounds = np.cumsum(sizes)[:-1]

    def _backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor.from_op(data, tuple(tensors), _backward, "concat")


def masked_mean(x, mask, axis=1):
    """Mean of `x` (batch x seq x dim) over the token axis, skipping padding.

    `mask` is a batch x seq array of 1.0 (real token) / 0.0 (padding).
    """
    x = as_tensor(x)
    mask = np.asarray(mask, dtype=np.float64)
    if x.shape[:2] != mask.shape or axis != 1:
        raise exception.ShapeMismatch(op="masked_mean",
                                      shapes=[x.shape, mask.shape])
    weights = mask[:, :, None] / mask.sum(axis=1)[:, None, None]

    def _backward(g):
        return (g[:, None, :] * weights,)

    return Tensor.from_op((x.data * weights).sum(axis=1), (x,), _backward,
                          "masked_mean")


def cross_entropy(logits, labels, reduction="mean"):
    """Cross-entropy of integer `labels` under `logits` (batch x classes)."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise exception.ShapeMismatch(op="cross_entropy",
                                      shapes=[logits.shape, labels.shape])
    rows = np.arange(labels.size)
    logp = _log_softmax(logits.data)
    losses = -logp[rows, labels]
    scale = 1.0 / labels.size if reduction == "mean" else 1.0

    def _backward(g):
        d = np.exp(logp)
        d[rows, labels] -= 1.0
        return (g * d * scale,)

    return Tensor.from_op(losses.sum() * scale, (logits,), _backward,
                          "cross_entropy")


def masked_mse(a, b, mask=None):
    """Mean squared error over non-padding tokens and the hidden axis."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise exception.ShapeMismatch(op="mse", shapes=[a.shape, b.shape])
    diff = a.data - b.data
    if mask is None:
        weights = np.ones_like(diff)
    else:
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != a.shape[:mask.ndim]:
            raise exception.ShapeMismatch(op="mse",
                                          shapes=[a.shape, mask.shape])
        weights = np.broadcast_to(
            mask.reshape(mask.shape + (1,) * (a.ndim - mask.ndim)), a.shape)
    count = weights.sum()

    def _backward(g):
        ga = g * 2.0 * weights * diff / count
        return ga, -ga

    return Tensor.from_op((weights * diff * diff).sum() / count, (a, b),
                          _backward, "mse")


def mse(a, b):
    return masked_mse(a, b, None)


def kl_div(p, q, clamp=KL_CLAMP):
    """Mean over rows of KL(p || q); entries are clamped to [clamp, 1]."""
    p, q = as_tensor(p), as_tensor(q)
    if p.shape != q.shape:
        raise exception.ShapeMismatch(op="kl_div", shapes=[p.shape, q.shape])
    pc = np.clip(p.data, clamp, 1.0)
    qc = np.clip(q.data, clamp, 1.0)
    log_ratio = np.log(pc) - np.log(qc)
    rows = (pc * log_ratio).sum(axis=-1)
    n = float(rows.size)

    def _backward(g):
        p_live = (p.data >= clamp) & (p.data <= 1.0)
        q_live = (q.data >= clamp) & (q.data <= 1.0)
        gp = g / n * (log_ratio + 1.0) * p_live
        gq = g / n * (-pc / qc) * q_live
        return gp, gq

    return Tensor.from_op(rows.sum() / n, (p, q), _backward, "kl_div")
