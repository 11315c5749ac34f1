"""Adam with decoupled weight decay and global-norm gradient clipping."""

import numpy as np

CLIP_EPS = 1e-6


def global_grad_norm(params):
    return float(np.sqrt(sum(float((p.grad * p.grad).sum())
                             for p in params if p.grad is not None)))


def clip_grad_norm(params, max_norm):
    """Rescale gradients in place so their global norm is <= `max_norm`.

    Returns the norm before clipping.
    """
    norm = global_grad_norm(params)
    if max_norm is not None and norm > max_norm:
        scale = max_norm / (norm + CLIP_EPS)
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return norm


class Adam(object):
    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.0):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.steps = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.steps += 1
        beta1, beta2 = self.betas
        correction1 = 1.0 - beta1 ** self.steps
        correction2 = 1.0 - beta2 ** self.steps
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            m *= beta1
            m += (1.0 - beta1) * p.grad
            v *= beta2
            v += (1.0 - beta2) * p.grad * p.grad
            if self.weight_decay and p.ndim >= 2:
                p.data -= self.lr * self.weight_decay * p.data
            p.data -= self.lr * (m / correction1) / (
                np.sqrt(v / correction2) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()
