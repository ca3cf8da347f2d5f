"""Finite-difference oracle for reverse-mode gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tape, Tensor


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` must return a finite scalar Tensor. The error at each coordinate is
    |analytic - fd| / max(1, |analytic|); the max over coordinates is
    returned. The finite-difference side never touches the tape, so it stays
    independent of the reverse rules it is checking.
    """
    x.requires_grad = True
    x.needs_grad = True
    x.zero_grad()
    with Tape() as tape:
        y = f(x)
        if y.data.size != 1:
            raise ValueError(f"grad_check needs a scalar function, got shape {y.data.shape}")
        if not np.isfinite(y.data).all():
            raise ValueError("grad_check: function value is not finite at x")
        tape.backward(y)
    analytic = np.zeros_like(x.data) if x.grad is None else x.grad.copy()
    x.zero_grad()

    flat = x.data.reshape(-1)
    fd = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = float(f(x).data)
        flat[i] = orig - eps
        lo = float(f(x).data)
        flat[i] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValueError(f"grad_check: function not finite near coordinate {i}")
        fd[i] = (hi - lo) / (2.0 * eps)

    a = analytic.reshape(-1)
    rel = np.abs(a - fd) / np.maximum(1.0, np.abs(a))
    return float(rel.max()) if rel.size else 0.0
