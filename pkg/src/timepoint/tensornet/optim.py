from __future__ import annotations

import math

import numpy as np


def cosine_lr(step: int, total_steps: int, base_lr: float) -> float:
    if total_steps <= 0:
        return base_lr
    if not 0 <= step <= total_steps:
        raise ValueError("step must lie in [0, total_steps]")
    return 0.5 * base_lr * (1.0 + math.cos(math.pi * step / total_steps))


def adamw_step(params, lr, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
    """One AdamW update in place. Moments live in ``param.state``."""
    b1, b2 = betas
    for p in params:
        if p.grad is None:
            continue
        g = p.grad.astype(p.data.dtype, copy=False)
        st = p.state
        if not st:
            st["step"] = 0
            st["m"] = np.zeros_like(p.data)
            st["v"] = np.zeros_like(p.data)
        st["step"] += 1
        t = st["step"]
        if weight_decay:
            p.data *= 1.0 - lr * weight_decay
        st["m"] *= b1
        st["m"] += (1.0 - b1) * g
        st["v"] *= b2
        st["v"] += (1.0 - b2) * g * g
        m_hat = st["m"] / (1.0 - b1 ** t)
        v_hat = st["v"] / (1.0 - b2 ** t)
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype, copy=False)
    return params


class AdamW:
    def __init__(self, params, lr=1e-4, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay

    def step(self, lr=None):
        adamw_step(self.params, self.lr if lr is None else lr, self.betas, self.eps, self.weight_decay)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
