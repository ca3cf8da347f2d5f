"""Learning-rate schedules: linear warmup then decay, or decay only."""

from __future__ import annotations


def lr_at(step: int, config) -> float:
    """Learning rate for the 0-based `step`.

    warmup-linear-decay rises linearly from 0 to the configured lr over
    warmup_steps, then falls linearly to 0 at `steps`. linear-decay starts
    at the full lr and falls to 0. Both are continuous and peak at exactly
    the configured lr.
    """
    if not (0 <= step <= config.steps):
        raise ValueError(f"step {step} outside [0, {config.steps}]")
    lr, steps, warmup = config.lr, config.steps, config.warmup_steps
    if config.schedule == "warmup-linear-decay":
        if step < warmup:
            return lr * step / warmup
        return lr * (steps - step) / (steps - warmup)
    if config.schedule == "linear-decay":
        return lr * (steps - step) / steps
    raise ValueError(f"unknown schedule {config.schedule!r}")
