"""Differentiable primitives over Tensors.

Every op computes its forward value eagerly and, when a Tape is active,
records a reverse rule plus a deterministic replay closure. Broadcasting is
supported only where the models need it (bias adds, scalar scaling, gate
columns); anything fancier should be expressed with explicit reshapes.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

from .tensor import ShapeError, Tensor, default_dtype, record_op

ArrayLike = Union[Tensor, np.ndarray, float, int]


def constant(data, name: Optional[str] = None) -> Tensor:
    return Tensor(data, requires_grad=False, name=name)


def parameter(data, name: Optional[str] = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def _as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    if not isinstance(b, Tensor) and np.isscalar(b):
        a = _as_tensor(a)
        s = float(b)
        out = Tensor(a.data + s)
        return record_op("add_s", (a,), out, lambda g: (g,), lambda: a.data + s)
    if not isinstance(a, Tensor) and np.isscalar(a):
        return add(b, a)
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: incompatible shapes {a.shape} vs {b.shape}") from None
    out = Tensor(data)

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return record_op("add", (a, b), out, backward, lambda: a.data + b.data)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    if isinstance(b, Tensor):
        return add(a, neg(b))
    return add(a, -float(b))


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data)
    return record_op("neg", (a,), out, lambda g: (-g,), lambda: -a.data)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    if not isinstance(b, Tensor) and np.isscalar(b):
        a = _as_tensor(a)
        s = float(b)
        out = Tensor(a.data * s)
        return record_op("mul_s", (a,), out, lambda g: (g * s,), lambda: a.data * s)
    if not isinstance(a, Tensor) and np.isscalar(a):
        return mul(b, a)
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul: incompatible shapes {a.shape} vs {b.shape}") from None
    out = Tensor(data)

    def backward(g):
        return _unbroadcast(g * b.data, a.data.shape), _unbroadcast(g * a.data, b.data.shape)

    return record_op("mul", (a, b), out, backward, lambda: a.data * b.data)


def scale(a: Tensor, s: float) -> Tensor:
    return mul(a, float(s))


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[-1] != b.data.shape[-2 if b.data.ndim > 1 else 0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} vs {b.shape}")
    data = a.data @ b.data
    out = Tensor(data)

    def backward(g):
        ga = _unbroadcast(g @ b.data.swapaxes(-1, -2), a.data.shape)
        gb = _unbroadcast(a.data.swapaxes(-1, -2) @ g, b.data.shape)
        return ga, gb

    return record_op("matmul", (a, b), out, backward, lambda: a.data @ b.data)


def _scatter_add_rows(target: np.ndarray, rows: np.ndarray, updates: np.ndarray) -> None:
    """target[rows] += updates with duplicate rows summed.

    Sort-and-reduceat runs vectorized where np.add.at falls back to a
    per-element inner loop; on the row counts the decoder produces this is
    the difference between a visible cost and noise.
    """
    if rows.size == 0:
        return
    order = np.argsort(rows, kind="stable")
    srows = rows[order]
    run_starts = np.flatnonzero(np.concatenate(([True], srows[1:] != srows[:-1])))
    sums = np.add.reduceat(updates[order], run_starts, axis=0)
    target[srows[run_starts]] += sums


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup: out[..., :] = table[ids[...], :]."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise IndexError(f"embedding ids out of range for table with {table.data.shape[0]} rows")
    out = Tensor(table.data[ids])

    def backward(g):
        gt = np.zeros_like(table.data)
        _scatter_add_rows(gt, ids.ravel(), g.reshape(-1, table.data.shape[-1]))
        return (gt,)

    return record_op("embedding", (table,), out, backward, lambda: table.data[ids])


# ---------------------------------------------------------------------------
# activations


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0))
    return record_op(
        "relu", (a,), out, lambda g: (g * (a.data > 0),), lambda: np.maximum(a.data, 0)
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Stable in both tails; exp of a non-positive argument never overflows,
    # and t/(1+t) = 1 - 1/(1+t) saves the second division.
    t = np.exp(-np.abs(x))
    z = 1.0 / (1.0 + t)
    return np.where(x >= 0, z, 1.0 - z)


def sigmoid(a: Tensor) -> Tensor:
    y = _sigmoid(a.data)
    out = Tensor(y)
    return record_op("sigmoid", (a,), out, lambda g: (g * y * (1.0 - y),), lambda: _sigmoid(a.data))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y)
    return record_op("tanh", (a,), out, lambda g: (g * (1.0 - y * y),), lambda: np.tanh(a.data))


# ---------------------------------------------------------------------------
# normalization and attention pieces


def softmax(a: Tensor, mask: Optional[np.ndarray] = None, axis: int = -1) -> Tensor:
    """Softmax along `axis` after adding `mask` (entries in {0, -inf}).

    Every slice along `axis` must keep at least one unmasked entry; masks from
    the encoder builders guarantee this.
    """

    def forward():
        z = a.data + mask if mask is not None else a.data
        m = np.max(z, axis=axis, keepdims=True)
        e = np.exp(z - m)
        return e / np.sum(e, axis=axis, keepdims=True)

    y = forward()
    out = Tensor(y)

    def backward(g):
        dot = np.sum(g * y, axis=axis, keepdims=True)
        return (y * (g - dot),)

    return record_op("softmax", (a,), out, backward, forward)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    def forward():
        m = np.max(a.data, axis=axis, keepdims=True)
        shifted = a.data - m
        lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
        return shifted - lse

    y = forward()
    out = Tensor(y)

    def backward(g):
        return (g - np.exp(y) * np.sum(g, axis=axis, keepdims=True),)

    return record_op("log_softmax", (a,), out, backward, forward)


def layer_norm(a: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean/unit variance, then affine."""
    if gamma.data.shape != (a.data.shape[-1],) or beta.data.shape != (a.data.shape[-1],):
        raise ShapeError(
            f"layer_norm: feature dim {a.shape[-1:]} vs gamma {gamma.shape}, beta {beta.shape}"
        )
    mu = a.data.mean(axis=-1, keepdims=True)
    var = a.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv
    out = Tensor(xhat * gamma.data + beta.data)
    d = a.data.shape[-1]

    def backward(g):
        gg = g * gamma.data
        gx = inv * (
            gg
            - gg.mean(axis=-1, keepdims=True)
            - xhat * (gg * xhat).mean(axis=-1, keepdims=True)
        )
        axes = tuple(range(g.ndim - 1))
        return gx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    def replay():
        mu2 = a.data.mean(axis=-1, keepdims=True)
        inv2 = 1.0 / np.sqrt(a.data.var(axis=-1, keepdims=True) + eps)
        return (a.data - mu2) * inv2 * gamma.data + beta.data

    return record_op("layer_norm", (a, gamma, beta), out, backward, replay)


def dropout(a: Tensor, p: float, rng: Optional[np.random.Generator], training: bool) -> Tensor:
    """Inverted dropout with an explicit generator; identity when not training."""
    if not training or p <= 0.0:
        return a
    if rng is None:
        raise ValueError("dropout in training mode requires an explicit rng")
    keep = (rng.random(a.data.shape, dtype=a.data.dtype) >= p).astype(a.data.dtype)
    keep /= 1.0 - p
    out = Tensor(a.data * keep)
    return record_op("dropout", (a,), out, lambda g: (g * keep,), lambda: a.data * keep)


# ---------------------------------------------------------------------------
# shape ops


def reshape(a: Tensor, shape: tuple) -> Tensor:
    out = Tensor(a.data.reshape(shape))
    return record_op(
        "reshape", (a,), out, lambda g: (g.reshape(a.data.shape),), lambda: a.data.reshape(shape)
    )


def swapaxes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    out = Tensor(a.data.swapaxes(ax1, ax2))
    return record_op(
        "swapaxes", (a,), out, lambda g: (g.swapaxes(ax1, ax2),), lambda: a.data.swapaxes(ax1, ax2)
    )


def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not parts:
        raise ValueError("concat of no tensors")
    datas = [p.data for p in parts]
    out = Tensor(np.concatenate(datas, axis=axis))
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return record_op(
        "concat", tuple(parts), out, backward, lambda: np.concatenate([p.data for p in parts], axis=axis)
    )


def stack(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise ValueError("stack of no tensors")
    out = Tensor(np.stack([p.data for p in parts], axis=axis))

    def backward(g):
        moved = np.moveaxis(g, axis, 0)
        return tuple(moved[i] for i in range(len(parts)))

    return record_op(
        "stack", tuple(parts), out, backward, lambda: np.stack([p.data for p in parts], axis=axis)
    )


def _leading_int_arrays(idx) -> bool:
    return (
        isinstance(idx, tuple)
        and len(idx) > 0
        and all(isinstance(i, np.ndarray) and i.dtype.kind in "iu" for i in idx)
    )


def _index_add(ga: np.ndarray, idx, g: np.ndarray) -> None:
    """ga[idx] += g, summing over duplicate index positions."""
    items = idx if isinstance(idx, tuple) else (idx,)
    if not any(isinstance(i, np.ndarray) and i.dtype.kind in "iu" for i in items):
        ga[idx] += g  # basic indexing selects each position at most once
    elif _leading_int_arrays(idx):
        arrays = np.broadcast_arrays(*idx)
        k = len(arrays)
        flat = np.ravel_multi_index(arrays, ga.shape[:k]).ravel()
        tail = ga.shape[k:]
        _scatter_add_rows(ga.reshape((-1,) + tail), flat, g.reshape((flat.size,) + tail))
    else:
        np.add.at(ga, idx, g)


def getitem(a: Tensor, idx) -> Tensor:
    """Basic/advanced indexing; gradients accumulate on duplicate indices."""
    out = Tensor(a.data[idx])

    def backward(g):
        ga = np.zeros_like(a.data)
        _index_add(ga, idx, g)
        return (ga,)

    return record_op("getitem", (a,), out, backward, lambda: a.data[idx])


def gather_last(a: Tensor, idx: np.ndarray) -> Tensor:
    """out[..., j] = a[..., idx[..., j]] along the last axis."""
    idx = np.asarray(idx)
    out = Tensor(np.take_along_axis(a.data, idx, axis=-1))
    grids = np.ogrid[tuple(slice(s) for s in idx.shape)]
    full_idx = tuple(grids[:-1]) + (idx,)

    def backward(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, full_idx, g)
        return (ga,)

    return record_op(
        "gather_last", (a,), out, backward, lambda: np.take_along_axis(a.data, idx, axis=-1)
    )


def scatter(src: Tensor, idx, shape: tuple) -> Tensor:
    """Place `src` into a zero tensor of `shape` at `idx` (accumulating)."""
    def forward():
        out = np.zeros(shape, dtype=src.data.dtype)
        _index_add(out, idx, src.data)
        return out

    out = Tensor(forward())
    return record_op("scatter", (src,), out, lambda g: (g[idx],), forward)


# ---------------------------------------------------------------------------
# reductions


def tsum(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.data.shape).copy(),)

    return record_op("sum", (a,), out, backward, lambda: a.data.sum(axis=axis, keepdims=keepdims))


def mean(a: Tensor) -> Tensor:
    return scale(tsum(a), 1.0 / a.data.size)


def cumsum(a: Tensor, axis: int) -> Tensor:
    out = Tensor(np.cumsum(a.data, axis=axis))

    def backward(g):
        return (np.flip(np.cumsum(np.flip(g, axis), axis=axis), axis),)

    return record_op("cumsum", (a,), out, backward, lambda: np.cumsum(a.data, axis=axis))


def logsumexp(a: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    """log(sum(exp(a))) along `axis`, max-shifted so nothing overflows.

    -inf entries are absorbed (zero probability); an all--inf slice yields
    -inf with zero gradient. An empty reduction axis is an error.
    """
    if a.data.shape[axis] == 0:
        raise ValueError("empty reduction")

    def forward():
        m = np.max(a.data, axis=axis, keepdims=True)
        m_safe = np.where(np.isfinite(m), m, 0.0)
        s = np.sum(np.exp(a.data - m_safe), axis=axis, keepdims=True)
        with np.errstate(divide="ignore"):
            res = m_safe + np.log(s)
        res = np.where(np.isfinite(m), res, m)  # all--inf slice stays -inf
        return res if keepdims else np.squeeze(res, axis=axis)

    y = forward()
    out = Tensor(y)

    def backward(g):
        yk = y if keepdims else np.expand_dims(y, axis)
        gk = g if keepdims else np.expand_dims(g, axis)
        with np.errstate(invalid="ignore"):
            w = np.exp(a.data - np.where(np.isfinite(yk), yk, 0.0))
        w = np.where(np.isfinite(a.data), w, 0.0)
        return (w * gk,)

    return record_op("logsumexp", (a,), out, backward, forward)


def logsumexp_vec(xs) -> float:
    """Plain-number logsumexp of a 1-D sequence (no tape), for DP code."""
    arr = np.asarray(xs, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty reduction")
    m = arr.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.exp(arr - m).sum()))
