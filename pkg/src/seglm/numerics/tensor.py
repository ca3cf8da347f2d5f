"""Tensor container and the op tape used for reverse-mode differentiation.

A Tensor wraps a numpy array in the process-wide float mode. Ops from
:mod:`seglm.numerics.ops` append an OpRecord to the active Tape; walking the
records in reverse order is backpropagation (execution order is already a
topological order of the graph).
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

_FLOAT_MODES = {"float32": np.float32, "float64": np.float64}
_float_mode = "float64"


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible. Names both shapes."""


def set_float_mode(mode: str) -> None:
    """Select the global float mode, "float32" or "float64".

    float64 is the oracle/test mode; float32 is permitted for speed. Must be
    set before tensors for a run are created: existing tensors keep their
    dtype.
    """
    global _float_mode
    if mode not in _FLOAT_MODES:
        raise ValueError(f"unknown float mode {mode!r}, expected one of {sorted(_FLOAT_MODES)}")
    _float_mode = mode


def float_mode() -> str:
    return _float_mode


def default_dtype() -> type:
    return _FLOAT_MODES[_float_mode]


class Tensor:
    """A shaped array of reals plus an optional same-shape gradient accumulator."""

    __slots__ = ("data", "grad", "requires_grad", "needs_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=default_dtype())
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        # needs_grad marks tensors reachable from a requires_grad leaf; it is
        # what backward uses to prune dead branches.
        self.needs_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray, adopt: bool = False) -> None:
        """Add g into .grad. adopt=True hands over ownership of g's buffer;
        callers must guarantee nothing else writes through it afterwards."""
        if g.shape != self.data.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match tensor shape {self.data.shape}")
        if self.grad is None:
            self.grad = g if adopt else g.copy()
        else:
            self.grad += g

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"

    # Thin operator sugar; the real work lives in ops.py.
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops

        return ops.add(self, other)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops

        return ops.mul(self, other)

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __neg__(self):
        from . import ops

        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)


class OpRecord:
    """One primitive application: inputs, output, and its local reverse rule.

    `backward` maps the output adjoint to one adjoint per input (None for
    inputs that need no gradient). `replay` recomputes the output array from
    the inputs' current data; with unchanged inputs it must reproduce the
    stored output bit-identically in the same float mode.
    """

    __slots__ = ("name", "inputs", "output", "backward", "replay")

    def __init__(
        self,
        name: str,
        inputs: Sequence[Tensor],
        output: Tensor,
        backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
        replay: Callable[[], np.ndarray],
    ):
        self.name = name
        self.inputs = inputs
        self.output = output
        self.backward = backward
        self.replay = replay


_ACTIVE_TAPES: list["Tape"] = []


class Tape:
    """Ordered record of primitive ops, confined to one worker.

    Used as a context manager around a forward pass; `backward` then runs the
    reverse sweep. With no active tape, ops compute values only (inference
    mode).
    """

    def __init__(self):
        self.records: list[OpRecord] = []

    def __enter__(self) -> "Tape":
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        popped = _ACTIVE_TAPES.pop()
        assert popped is self, "tapes must nest"

    def backward(self, loss: Tensor) -> None:
        """Reverse sweep seeding d(loss)/d(loss) = 1. Accumulates into .grad."""
        if loss.data.size != 1:
            raise ValueError(f"backward requires a scalar loss, got shape {loss.data.shape}")
        loss.accumulate_grad(np.ones_like(loss.data))
        for rec in reversed(self.records):
            out_grad = rec.output.grad
            if out_grad is None:
                continue
            input_grads = rec.backward(out_grad)
            seen: set[int] = set()
            for inp, g in zip(rec.inputs, input_grads):
                if g is None or not inp.needs_grad:
                    continue
                arr = np.asarray(g, dtype=inp.data.dtype)
                # A fresh, unshared buffer can be handed to the input outright
                # instead of copied; views and reused buffers must be copied
                # because later += on one grad would corrupt the other.
                adopt = arr.base is None and arr is not out_grad and id(arr) not in seen
                seen.add(id(arr))
                if arr.shape != inp.data.shape:
                    arr = arr.reshape(inp.data.shape)
                inp.accumulate_grad(arr, adopt=adopt)
            # Intermediate grads are dead once consumed; freeing them bounds
            # backward memory to one live adjoint frontier.
            if not rec.output.requires_grad:
                rec.output.grad = None

    def replay_forward(self) -> float:
        """Re-run every record and return the max absolute deviation.

        Zero means bit-identical reproduction, which is the contract when the
        inputs and float mode are unchanged.
        """
        worst = 0.0
        for rec in self.records:
            fresh = rec.replay()
            if fresh.shape != rec.output.data.shape:
                raise ShapeError(
                    f"replay of {rec.name} produced shape {fresh.shape}, stored {rec.output.data.shape}"
                )
            dev = float(np.max(np.abs(fresh - rec.output.data))) if fresh.size else 0.0
            worst = max(worst, dev)
        return worst

    def clear(self) -> None:
        self.records.clear()


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def record_op(
    name: str,
    inputs: Sequence[Tensor],
    output: Tensor,
    backward: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
    replay: Callable[[], np.ndarray],
) -> Tensor:
    """Attach an OpRecord to the active tape, if any, and return the output."""
    tape = active_tape()
    if tape is not None:
        output.needs_grad = any(t.needs_grad for t in inputs)
        if output.needs_grad:
            tape.records.append(OpRecord(name, tuple(inputs), output, backward, replay))
    return output
