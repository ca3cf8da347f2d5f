"""Adam with bias correction, and global-norm gradient clipping."""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..numerics import Tensor


def global_grad_norm(params: OrderedDict[str, Tensor]) -> float:
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float(np.vdot(p.grad, p.grad))
    return float(np.sqrt(total))


def clip_gradients(params: OrderedDict[str, Tensor], max_norm: float) -> float:
    """Scale all gradients so their joint norm is at most max_norm.

    Returns the pre-clip norm. Gradients already under the threshold are
    left bit-identical (no multiply by ~1.0).
    """
    norm = global_grad_norm(params)
    if norm > max_norm:
        factor = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad *= factor
    return norm


class Adam:
    def __init__(self, params: OrderedDict[str, Tensor], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self, lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    # -- checkpoint plumbing ------------------------------------------------
    def state_arrays(self) -> dict:
        out = {f"adam_m/{k}": a.copy() for k, a in self.m.items()}
        out.update({f"adam_v/{k}": a.copy() for k, a in self.v.items()})
        out["adam_t"] = np.array(self.t, dtype=np.int64)
        return out

    def load_state(self, arrays: dict) -> None:
        for k in self.params:
            self.m[k] = arrays[f"adam_m/{k}"].astype(self.m[k].dtype)
            self.v[k] = arrays[f"adam_v/{k}"].astype(self.v[k].dtype)
        self.t = int(arrays["adam_t"])
