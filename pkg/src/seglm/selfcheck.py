"""Built-in oracle suites: every core quantity computed two independent ways.

Each check pits the production code path against a reference that shares no
code with it (closed forms, brute-force enumeration, finite differences,
exhaustive predicates) and compares within a tolerance that depends on the
active float mode. The float32 column was calibrated by measuring the drift
a correct float32 implementation shows against the float64 references; each
entry sits 10-30x above that drift and orders of magnitude below the error
a real defect produces.

Deviations against potentially large references are relative to
max(1, |reference|); everything else is absolute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import CharSequence, Vocabulary
from .encoder import (
    RecurrentEncoder,
    TransformerEncoder,
    build_directional_mask,
    build_segmental_mask,
)
from .lattice import (
    SegmentLattice,
    brute_force_best,
    brute_force_marginal,
    forward_marginal,
    sequence_score,
    viterbi,
)
from .metrics import corpus_bpc
from .model import ModelConfig, SegmentalLM
from .numerics import (
    Tape,
    constant,
    default_dtype,
    float_mode,
    grad_check,
    logsumexp,
    set_float_mode,
)

TOLERANCES = {
    # check: {mode: tolerance}. Masks and replay must match exactly; the
    # lattice recursions always run in float64 so their column is shared.
    "logsumexp": {"float64": 1e-12, "float32": 1e-5},
    "forward vs brute force": {"float64": 1e-9, "float32": 1e-9},
    "viterbi vs brute force": {"float64": 1e-9, "float32": 1e-9},
    "mask formulas": {"float64": 0.0, "float32": 0.0},
    "attention leakage": {"float64": 1e-9, "float32": 1e-4},
    "causality": {"float64": 1e-9, "float32": 1e-4},
    "gradients": {"float64": 1e-6, "float32": 1e-2},
    "uniform bpc": {"float64": 1e-9, "float32": 1e-4},
    "replay determinism": {"float64": 0.0, "float32": 0.0},
}

# Central-difference step for the gradient check. The float32 entry is as
# large as the curvature of these losses allows; together with the loose
# tolerance above it distinguishes structural gradient errors (wrong rule,
# missing term) rather than last-ulp accuracy.
_GRAD_EPS = {"float64": 1e-5, "float32": 1e-2}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name: str, mode: str, deviation: float) -> CheckResult:
    tol = TOLERANCES[name][mode]
    return CheckResult(name, deviation <= tol, f"max deviation {deviation:.3g}, tolerance {tol:g}")


def check_logsumexp(mode: str) -> CheckResult:
    rng = np.random.default_rng(11)
    worst = 0.0

    def lse(xs):
        return float(logsumexp(constant(np.asarray(xs, dtype=default_dtype())), axis=0).data)

    def rel(got, ref):
        return abs(got - ref) / max(1.0, abs(ref))

    worst = max(worst, rel(lse([math.log(2.0), math.log(3.0)]), math.log(5.0)))
    worst = max(worst, rel(lse([1000.0, 1000.0]), 1000.0 + math.log(2.0)))
    worst = max(worst, rel(lse([-1000.0, -1000.0]), -1000.0 + math.log(2.0)))
    for _ in range(50):
        xs = rng.normal(size=rng.integers(1, 9)) * 10.0
        shift = float(rng.normal() * 100.0)
        worst = max(worst, rel(lse(xs + shift), lse(xs) + shift))
        v = lse(xs)
        lo, hi = float(xs.max()), float(xs.max()) + math.log(len(xs))
        worst = max(worst, max(lo - v, v - hi, 0.0))
    return _result("logsumexp", mode, worst)


def _random_lattice(rng, n: int, kmax: int) -> SegmentLattice:
    logp = np.full((n, kmax), -np.inf)
    for i in range(n):
        for l in range(1, min(kmax, n - i) + 1):
            logp[i, l - 1] = rng.uniform(-3.0, -0.1)
    return SegmentLattice(n, kmax, logp)


def check_forward(mode: str) -> CheckResult:
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(60):
        n = int(rng.integers(1, 10))
        kmax = int(rng.integers(1, 5))
        lat = _random_lattice(rng, n, kmax)
        worst = max(worst, abs(forward_marginal(lat) - brute_force_marginal(lat)))
    return _result("forward vs brute force", mode, worst)


def check_viterbi(mode: str) -> CheckResult:
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(60):
        n = int(rng.integers(1, 10))
        kmax = int(rng.integers(1, 5))
        lat = _random_lattice(rng, n, kmax)
        best = viterbi(lat)
        ref = brute_force_best(lat)
        # Argmax paths may differ only on exact ties, so compare scores.
        worst = max(worst, abs(best.score - ref.score))
        worst = max(worst, abs(best.score - sequence_score(lat, list(best.lengths))))
    return _result("viterbi vs brute force", mode, worst)


def check_masks(mode: str) -> CheckResult:
    bad = 0
    for n in range(1, 13):
        for kmax in range(1, 7):
            m = build_segmental_mask(n, kmax)
            for i in range(n):
                for j in range(n):
                    want = -np.inf if 0 < j - i <= kmax else 0.0
                    bad += m[i, j] != want
        d = build_directional_mask(n)
        for i in range(n):
            for j in range(n):
                want = -np.inf if j > i else 0.0
                bad += d[i, j] != want
    return _result("mask formulas", mode, float(bad))


def check_leakage(mode: str, mask_fn=build_segmental_mask) -> CheckResult:
    """Rows the mask protects must not move when a masked input moves.

    Position i is blocked from inputs j with 0 < j - i <= kmax, so after
    perturbing input p the outputs at rows p-kmax..p-1 must be bitwise
    stable up to roundoff, while row p itself (which sees p) must move.
    Passing a corrupted mask_fn makes this check fail, which is how the
    check itself is tested.
    """
    rng = np.random.default_rng(14)
    worst = 0.0
    moved = np.inf
    for layers in (1, 2):
        for _ in range(6):
            n = int(rng.integers(4, 10))
            kmax = int(rng.integers(1, 4))
            enc = TransformerEncoder(8, 2, 16, layers, rng, dropout_in=0.0, dropout_layer=0.0)
            emb = rng.normal(size=(1, n, 8)).astype(default_dtype())
            mask = mask_fn(n, kmax)
            base = enc.encode(constant(emb.copy()), mask).data
            p = int(rng.integers(1, n))
            pert = emb.copy()
            pert[0, p] += rng.normal(size=8).astype(default_dtype())
            out = enc.encode(constant(pert), mask).data
            delta = np.abs(out - base)[0]
            protected = range(max(0, p - kmax), p)
            for i in protected:
                worst = max(worst, float(delta[i].max()))
            moved = min(moved, float(delta[p].max()))
    if moved < 1e-8:
        return CheckResult("attention leakage", False, "vacuous: perturbation never reached any output")
    return _result("attention leakage", mode, worst)


def check_causality(mode: str) -> CheckResult:
    rng = np.random.default_rng(15)
    worst = 0.0
    for _ in range(6):
        n = int(rng.integers(4, 10))
        tenc = TransformerEncoder(8, 2, 16, 2, rng, dropout_in=0.0, dropout_layer=0.0)
        renc = RecurrentEncoder(8, rng, dropout_in=0.0)
        emb = rng.normal(size=(1, n, 8)).astype(default_dtype())
        p = int(rng.integers(1, n))
        pert = emb.copy()
        pert[0, p] += rng.normal(size=8).astype(default_dtype())
        mask = build_directional_mask(n)
        for out_a, out_b in (
            (tenc.encode(constant(emb.copy()), mask).data, tenc.encode(constant(pert), mask).data),
            (renc.encode(constant(emb.copy())).data, renc.encode(constant(pert)).data),
        ):
            delta = np.abs(out_b - out_a)[0]
            worst = max(worst, float(delta[:p].max()) if p > 0 else 0.0)
            if float(delta[p:].max()) < 1e-8:
                return CheckResult("causality", False, "vacuous: perturbation never reached any output")
    return _result("causality", mode, worst)


def _tiny_model(variant: str, rng: np.random.Generator) -> SegmentalLM:
    vocab = Vocabulary(content=list("abcdef"))
    config = ModelConfig(
        variant=variant, d_model=8, heads=2, ff_size=16, layers=1,
        max_seg_len=3, dropout_in=0.0, dropout_layer=0.0,
    )
    return SegmentalLM(config, vocab, rng)


def check_gradients(mode: str) -> CheckResult:
    rng = np.random.default_rng(16)
    eps = _GRAD_EPS[mode]
    worst = 0.0
    for variant in ("masked", "directional", "recurrent"):
        model = _tiny_model(variant, rng)
        vocab = model.vocab
        ids = np.stack([vocab.encode("fadec"), vocab.encode("cbbca")])
        lengths = np.array([5, 3])

        def loss_of(_x, model=model, ids=ids, lengths=lengths):
            return model.loss(ids, lengths, training=False)[0]

        params = model.parameters()
        for name in ("emb", next(k for k in params if k.startswith("enc.")), "dec.out.w"):
            worst = max(worst, grad_check(lambda t, f=loss_of: f(t), params[name], eps=eps))
    return _result("gradients", mode, worst)


def check_uniform_bpc(mode: str) -> CheckResult:
    rng = np.random.default_rng(17)
    vocab = Vocabulary(content=list("abcd"))
    config = ModelConfig(variant="recurrent", d_model=8, max_seg_len=1, dropout_in=0.0, dropout_layer=0.0)
    model = SegmentalLM(config, vocab, rng)
    params = model.parameters()
    # A zeroed output head scores every decoder symbol uniformly, so each
    # one-character line costs exactly two uniform picks: char then EOSEG.
    params["dec.out.w"].data[:] = 0.0
    params["dec.out.b"].data[:] = 0.0
    corpus = [CharSequence(c, None) for c in "abcd"]
    got = corpus_bpc(model, corpus)
    want = 2.0 * math.log2(vocab.decoder_size)
    return _result("uniform bpc", mode, abs(got - want))


def check_replay(mode: str) -> CheckResult:
    rng = np.random.default_rng(18)
    model = _tiny_model("masked", rng)
    vocab = model.vocab
    ids = np.stack([vocab.encode("abcfed"), vocab.encode("deafab")])
    lengths = np.array([6, 4])
    vals = []
    grads = []
    for _ in range(2):
        drop = np.random.default_rng(99)
        with Tape() as tape:
            loss, _ = model.loss(ids, lengths, rng=drop, training=True)
            tape.backward(loss)
        vals.append(float(loss.data))
        grads.append({k: v.grad.copy() for k, v in model.parameters().items() if v.grad is not None})
        for p in model.parameters().values():
            p.zero_grad()
    dev = abs(vals[0] - vals[1])
    for k in grads[0]:
        dev = max(dev, float(np.abs(grads[0][k] - grads[1][k]).max()))
    return _result("replay determinism", mode, dev)


CHECKS = (
    check_logsumexp,
    check_forward,
    check_viterbi,
    check_masks,
    check_leakage,
    check_causality,
    check_gradients,
    check_uniform_bpc,
    check_replay,
)


def run_selfcheck(mode: str = "float64", out=print) -> int:
    if mode not in ("float64", "float32"):
        raise ValueError(f"unknown float mode {mode!r}")
    previous = float_mode()
    set_float_mode(mode)
    try:
        results = [check(mode) for check in CHECKS]
    finally:
        set_float_mode(previous)
    for r in results:
        out(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    passed = sum(r.passed for r in results)
    out(f"{passed}/{len(results)} checks passed in {mode}")
    return 0 if passed == len(results) else 1
