"""Tensor core: reverse-mode gradients against finite differences and
logsumexp against high-precision references."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seglm.numerics import (
    ShapeError,
    Tape,
    add,
    concat,
    constant,
    cumsum,
    dropout,
    embedding,
    gather_last,
    getitem,
    grad_check,
    layer_norm,
    log_softmax,
    logsumexp,
    logsumexp_vec,
    matmul,
    mean,
    mul,
    neg,
    parameter,
    relu,
    reshape,
    scale,
    scatter,
    sigmoid,
    softmax,
    stack,
    sub,
    swapaxes,
    tanh,
    tsum,
)


def _mp_lse(xs):
    with mpmath.workdps(60):
        return float(mpmath.log(mpmath.fsum(mpmath.e ** mpmath.mpf(x) for x in xs)))


# ---------------------------------------------------------------------------
# logsumexp values


def test_logsumexp_known_values():
    got = float(logsumexp(constant(np.array([math.log(2.0), math.log(3.0)])), axis=0).data)
    assert got == pytest.approx(math.log(5.0), abs=1e-12)


def test_logsumexp_large_inputs_match_mpmath():
    xs = [1000.0, 1000.0]
    got = float(logsumexp(constant(np.array(xs)), axis=0).data)
    assert got == pytest.approx(1000.0 + math.log(2.0), abs=1e-9)
    assert got == pytest.approx(_mp_lse(xs), abs=1e-9)
    xs = [-1000.0, -1000.0, -1000.0]
    got = float(logsumexp(constant(np.array(xs)), axis=0).data)
    assert got == pytest.approx(_mp_lse(xs), abs=1e-9)


def test_logsumexp_random_against_mpmath():
    rng = np.random.default_rng(3)
    for _ in range(40):
        xs = (rng.normal(size=rng.integers(1, 10)) * rng.uniform(0.1, 200)).tolist()
        got = float(logsumexp(constant(np.array(xs)), axis=0).data)
        ref = _mp_lse(xs)
        assert got == pytest.approx(ref, abs=1e-9 * max(1.0, abs(ref)))


def test_logsumexp_absorbs_neg_inf():
    xs = constant(np.array([[0.0, -np.inf], [-np.inf, -np.inf]]))
    out = logsumexp(xs, axis=1).data
    assert out[0] == pytest.approx(0.0)
    assert out[1] == -np.inf


def test_logsumexp_empty_reduction_raises():
    with pytest.raises(ValueError, match="empty reduction"):
        logsumexp(constant(np.zeros((2, 0))), axis=1)
    with pytest.raises(ValueError, match="empty reduction"):
        logsumexp_vec([])


def test_logsumexp_vec_matches_tensor_op():
    rng = np.random.default_rng(4)
    for _ in range(20):
        xs = rng.normal(size=6) * 50
        a = float(logsumexp(constant(xs), axis=0).data)
        assert logsumexp_vec(xs) == pytest.approx(a, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(min_value=-300.0, max_value=300.0), min_size=1, max_size=12))
def test_logsumexp_bounds_property(xs):
    v = logsumexp_vec(xs)
    assert max(xs) - 1e-9 <= v <= max(xs) + math.log(len(xs)) + 1e-9


# ---------------------------------------------------------------------------
# closed-form behaviors


def test_masked_softmax_blocks_positions():
    scores = constant(np.array([[0.0, 0.0]]))
    mask = np.array([[0.0, -np.inf]])
    out = softmax(scores, mask=mask).data
    np.testing.assert_allclose(out, [[1.0, 0.0]])


def test_layer_norm_constant_vector_collapses_to_beta():
    x = constant(np.full((2, 6), 3.7))
    gamma = constant(np.linspace(0.5, 1.5, 6))
    beta = constant(np.arange(6.0))
    out = layer_norm(x, gamma, beta).data
    np.testing.assert_allclose(out, np.tile(np.arange(6.0), (2, 1)), atol=1e-10)


def test_matmul_identity():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 4))
    out = matmul(constant(a), constant(np.eye(4))).data
    np.testing.assert_array_equal(out, a)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError) as e:
        matmul(constant(np.zeros((3, 4))), constant(np.zeros((5, 2))))
    assert "(3, 4)" in str(e.value)
    assert "(5, 2)" in str(e.value)


def test_dropout_eval_mode_is_identity():
    x = np.random.default_rng(0).normal(size=(3, 5))
    out = dropout(constant(x), 0.5, None, training=False).data
    np.testing.assert_array_equal(out, x)


def test_dropout_scales_kept_units():
    rng = np.random.default_rng(1)
    x = np.ones((200, 50))
    out = dropout(constant(x), 0.25, rng, training=True).data
    kept = out[out != 0.0]
    np.testing.assert_allclose(kept, 1.0 / 0.75)
    assert 0.2 < (out == 0.0).mean() < 0.3


# ---------------------------------------------------------------------------
# targeted gradient checks


def test_grad_sum_of_squares():
    rng = np.random.default_rng(6)
    x = parameter(rng.normal(size=(3, 4)))
    err = grad_check(lambda t: tsum(mul(t, t)), x)
    assert err <= 1e-6


def test_grad_logsumexp_at_uniform_point():
    x = parameter(np.zeros(3))
    err = grad_check(lambda t: logsumexp(t, axis=0), x)
    assert err <= 1e-5


# ---------------------------------------------------------------------------
# per-primitive gradient sweep


def _weighted(out, rng):
    w = constant(rng.normal(size=out.data.shape))
    return tsum(mul(out, w))


def _away_from_zero(x, margin=0.25):
    return x + np.where(x >= 0, margin, -margin)


def _prims():
    # name -> builder(rng) -> (f, x). f returns a scalar Tensor of x.
    def p(shape, rng):
        return parameter(rng.normal(size=shape))

    builders = {}

    def b(name):
        def deco(fn):
            builders[name] = fn
            return fn
        return deco

    @b("add_lhs")
    def _(rng):
        other = constant(rng.normal(size=(4,)))
        return lambda t: _weighted(add(t, other), np.random.default_rng(0)), p((3, 4), rng)

    @b("add_rhs")
    def _(rng):
        other = constant(rng.normal(size=(3, 4)))
        return lambda t: _weighted(add(other, t), np.random.default_rng(0)), p((4,), rng)

    @b("sub")
    def _(rng):
        other = constant(rng.normal(size=(3, 4)))
        return lambda t: _weighted(sub(t, other), np.random.default_rng(0)), p((3, 4), rng)

    @b("neg")
    def _(rng):
        return lambda t: _weighted(neg(t), np.random.default_rng(0)), p((3, 4), rng)

    @b("mul")
    def _(rng):
        other = constant(rng.normal(size=(4,)))
        return lambda t: _weighted(mul(t, other), np.random.default_rng(0)), p((3, 4), rng)

    @b("scale")
    def _(rng):
        return lambda t: _weighted(scale(t, -2.5), np.random.default_rng(0)), p((3, 4), rng)

    @b("matmul_lhs")
    def _(rng):
        other = constant(rng.normal(size=(4, 2)))
        return lambda t: _weighted(matmul(t, other), np.random.default_rng(0)), p((3, 4), rng)

    @b("matmul_rhs")
    def _(rng):
        other = constant(rng.normal(size=(3, 4)))
        return lambda t: _weighted(matmul(other, t), np.random.default_rng(0)), p((4, 2), rng)

    @b("matmul_batched")
    def _(rng):
        other = constant(rng.normal(size=(2, 4, 3)))
        return lambda t: _weighted(matmul(other, t), np.random.default_rng(0)), p((2, 3, 2), rng)

    @b("relu")
    def _(rng):
        x = parameter(_away_from_zero(rng.normal(size=(3, 4))))
        return lambda t: _weighted(relu(t), np.random.default_rng(0)), x

    @b("sigmoid")
    def _(rng):
        return lambda t: _weighted(sigmoid(t), np.random.default_rng(0)), p((3, 4), rng)

    @b("tanh")
    def _(rng):
        return lambda t: _weighted(tanh(t), np.random.default_rng(0)), p((3, 4), rng)

    @b("softmax")
    def _(rng):
        return lambda t: _weighted(softmax(t, axis=-1), np.random.default_rng(0)), p((3, 4), rng)

    @b("softmax_masked")
    def _(rng):
        mask = np.where(rng.random((3, 4)) < 0.3, -np.inf, 0.0)
        mask[:, 0] = 0.0  # keep every row alive
        return lambda t: _weighted(softmax(t, mask=mask), np.random.default_rng(0)), p((3, 4), rng)

    @b("log_softmax")
    def _(rng):
        return lambda t: _weighted(log_softmax(t), np.random.default_rng(0)), p((3, 4), rng)

    @b("logsumexp_axis")
    def _(rng):
        return lambda t: _weighted(logsumexp(t, axis=1), np.random.default_rng(0)), p((3, 4), rng)

    @b("logsumexp_keepdims")
    def _(rng):
        return (
            lambda t: _weighted(logsumexp(t, axis=0, keepdims=True), np.random.default_rng(0)),
            p((3, 4), rng),
        )

    @b("logsumexp_with_neg_inf")
    def _(rng):
        x = rng.normal(size=(3, 4))
        x[0, 1] = -np.inf
        x[2, 3] = -np.inf
        return lambda t: _weighted(logsumexp(t, axis=1), np.random.default_rng(0)), parameter(x)

    @b("layer_norm_x")
    def _(rng):
        g = constant(rng.normal(size=(6,)))
        bta = constant(rng.normal(size=(6,)))
        return lambda t: _weighted(layer_norm(t, g, bta), np.random.default_rng(0)), p((3, 6), rng)

    @b("layer_norm_gamma")
    def _(rng):
        x = constant(rng.normal(size=(3, 6)))
        bta = constant(rng.normal(size=(6,)))
        return lambda t: _weighted(layer_norm(x, t, bta), np.random.default_rng(0)), p((6,), rng)

    @b("layer_norm_beta")
    def _(rng):
        x = constant(rng.normal(size=(3, 6)))
        g = constant(rng.normal(size=(6,)))
        return lambda t: _weighted(layer_norm(x, g, t), np.random.default_rng(0)), p((6,), rng)

    @b("reshape")
    def _(rng):
        return lambda t: _weighted(reshape(t, (2, 6)), np.random.default_rng(0)), p((3, 4), rng)

    @b("swapaxes")
    def _(rng):
        return lambda t: _weighted(swapaxes(t, 0, 2), np.random.default_rng(0)), p((2, 3, 4), rng)

    @b("concat")
    def _(rng):
        other = constant(rng.normal(size=(3, 2)))
        return (
            lambda t: _weighted(concat([t, other], axis=1), np.random.default_rng(0)),
            p((3, 4), rng),
        )

    @b("stack")
    def _(rng):
        other = constant(rng.normal(size=(3, 4)))
        return (
            lambda t: _weighted(stack([t, other], axis=1), np.random.default_rng(0)),
            p((3, 4), rng),
        )

    @b("getitem_slice")
    def _(rng):
        return lambda t: _weighted(getitem(t, (slice(1, 3),)), np.random.default_rng(0)), p((4, 3), rng)

    @b("getitem_int_array")
    def _(rng):
        idx = np.array([0, 2, 2, 1])  # repeats must accumulate
        return lambda t: _weighted(getitem(t, idx), np.random.default_rng(0)), p((4, 3), rng)

    @b("getitem_pair_arrays")
    def _(rng):
        idx = (np.array([0, 1, 1]), np.array([2, 0, 2]))
        return lambda t: _weighted(getitem(t, idx), np.random.default_rng(0)), p((3, 4), rng)

    @b("gather_last")
    def _(rng):
        idx = np.array([[0, 2, 2], [1, 1, 3]])
        return lambda t: _weighted(gather_last(t, idx), np.random.default_rng(0)), p((2, 4), rng)

    @b("scatter")
    def _(rng):
        idx = (np.array([0, 2, 2]), np.array([1, 0, 3]))
        return (
            lambda t: _weighted(scatter(t, idx, (4, 5)), np.random.default_rng(0)),
            p((3,), rng),
        )

    @b("embedding")
    def _(rng):
        ids = np.array([[0, 3, 3], [1, 0, 2]])
        return lambda t: _weighted(embedding(t, ids), np.random.default_rng(0)), p((5, 4), rng)

    @b("sum_all")
    def _(rng):
        return lambda t: tsum(t), p((3, 4), rng)

    @b("sum_axis")
    def _(rng):
        return lambda t: _weighted(tsum(t, axis=0), np.random.default_rng(0)), p((3, 4), rng)

    @b("sum_keepdims")
    def _(rng):
        return (
            lambda t: _weighted(tsum(t, axis=1, keepdims=True), np.random.default_rng(0)),
            p((3, 4), rng),
        )

    @b("mean")
    def _(rng):
        return lambda t: mean(t), p((3, 4), rng)

    @b("cumsum")
    def _(rng):
        return lambda t: _weighted(cumsum(t, axis=1), np.random.default_rng(0)), p((3, 4), rng)

    @b("dropout")
    def _(rng):
        def f(t):
            return _weighted(dropout(t, 0.3, np.random.default_rng(7), True), np.random.default_rng(0))
        return f, p((3, 4), rng)

    return sorted(builders.items())


@pytest.mark.parametrize("name,build", _prims(), ids=[n for n, _ in _prims()])
def test_primitive_gradients_100_seeds(name, build):
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        f, x = build(rng)
        worst = max(worst, grad_check(f, x))
    assert worst <= 1e-4, f"{name}: max rel error {worst:.3g}"


# ---------------------------------------------------------------------------
# tape behavior


def test_backward_replay_is_deterministic():
    rng = np.random.default_rng(9)
    x = parameter(rng.normal(size=(4, 4)))
    w = parameter(rng.normal(size=(4, 4)))

    def run():
        x.zero_grad()
        w.zero_grad()
        with Tape() as tape:
            y = tsum(mul(tanh(matmul(x, w)), sigmoid(matmul(x, w))))
            tape.backward(y)
        return x.grad.copy(), w.grad.copy()

    gx1, gw1 = run()
    gx2, gw2 = run()
    np.testing.assert_array_equal(gx1, gx2)
    np.testing.assert_array_equal(gw1, gw2)


def test_value_reused_by_two_consumers_accumulates():
    x = parameter(np.array([1.5, -0.5, 2.0]))
    with Tape() as tape:
        y = add(tsum(mul(x, x)), tsum(scale(x, 3.0)))  # d/dx = 2x + 3
        tape.backward(y)
    np.testing.assert_allclose(x.grad, 2.0 * x.data + 3.0, atol=1e-12)


def test_no_tape_means_no_graph():
    x = parameter(np.ones(3))
    y = tsum(mul(x, x))  # outside any tape
    assert y.data == pytest.approx(3.0)
    with Tape() as tape:
        z = tsum(scale(x, 2.0))
        tape.backward(z)
    np.testing.assert_allclose(x.grad, 2.0)
