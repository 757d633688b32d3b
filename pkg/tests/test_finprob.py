from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
from hypothesis import given

from exactcond import randprog
from exactcond.finprob import kernels as fk
from exactcond.finprob import lang as fl
from strategies import seeds

BERN = "x = bernoulli(2/5)\ny = bernoulli(2/5)\nx =:= y\nx"


def run(text, mode="p"):
    return fl.eval_closed(fl.parse_fin(text).term, mode)


def test_two_coin_example():
    d = run(BERN)
    assert d.as_dict() == {False: F(9, 25), True: F(4, 25)}
    assert d.total() == F(13, 25)
    assert fk.normalize_dist(d).as_dict() == {False: F(9, 13), True: F(4, 13)}


def test_return_and_score():
    assert run("return true").as_dict() == {False: 0, True: 1}
    assert run("score(1/2); return ()").as_dict() == {(): F(1, 2)}


def test_normalize_edge_cases():
    zero = fk.SubDist((0, 1), (0, 0))
    assert fk.normalize_dist(zero) == zero
    d = fk.SubDist((0, 1), (F(1, 3), F(2, 3)))
    assert fk.normalize_dist(d) == d


def test_proportional():
    p = fk.SubKernel((0,), (0, 1), ((F(1, 2),), (F(1, 4),)))
    assert fk.proportional(p, p.scale(F(1, 2)))
    q = fk.SubKernel((0,), (0, 1), ((F(1, 2),), (0,)))
    assert not fk.proportional(p, q)


def test_closed_prefix_is_proportional_not_equal():
    base = fl.parse_fin(BERN).term
    prefixed = fl.parse_fin("z = bernoulli(1/5)\nz =:= false\n" + BERN).term
    a, b = fl.eval_term((), base), fl.eval_term((), prefixed)
    assert fk.proportional(a, b) and a != b
    assert b == a.scale(F(4, 5))
    assert fl.equiv_fin(base, prefixed, "psl")
    assert not fl.equiv_fin(base, prefixed, "p")


def test_score_prefix():
    t = fl.parse_fin(BERN).term
    s = fl.fseq(fl.FScore(F(4, 5)), t)
    assert fl.equiv_fin(t, s, "psl") and not fl.equiv_fin(t, s, "p")
    assert fl.equiv_fin(t, t, "psl") and fl.equiv_fin(t, t, "p")


def test_different_posteriors_differ_in_both_modes():
    a = fl.parse_fin("bernoulli(1/3)").term
    b = fl.parse_fin("bernoulli(1/2)").term
    assert not fl.equiv_fin(a, b, "psl") and not fl.equiv_fin(a, b, "p")


def test_psl_mode_rejects_branching():
    t = fl.parse_fin("if bernoulli(1/2) then true else false").term
    with pytest.raises(fl.ModeError):
        fl.eval_closed(t, "psl")
    assert fl.eval_closed(t, "p").as_dict() == {False: F(1, 2), True: F(1, 2)}


def test_channel_round_trips():
    rho = fk.SubKernel(((),), ((),), ((F(1, 2),),))
    Q = fk.channel_of_subkernel(rho)
    assert Q.q(((), 1), ()) == F(1, 2) and Q.q(((), 0), ()) == F(1, 2)
    full = fk.identity((0, 1))
    Q = fk.channel_of_subkernel(full)
    assert all(Q.q((y, 0), x) == 0 for y in (0, 1) for x in (0, 1))


def test_trivial_observation_channel_is_its_kernel():
    k = fk.SubKernel((0, 1), ("a", "b"), ((F(1, 3), F(1)), (F(2, 3), F(0))))
    q = fk.SubKernel((0, 1), tuple(product(("a", "b"), ("*",))), k.p)
    Q = fk.FinChannel(("*",), q, "*", ("a", "b"))
    assert fk.subkernel_of_channel(Q) == k


def test_identity_channel_slice():
    cod = tuple(product((0, 1), ("k", "l")))
    cols = {x: {(x, "k"): F(1, 2), (x, "l"): F(1, 2)} for x in (0, 1)}
    Q = fk.FinChannel(("k", "l"), fk.SubKernel.from_columns((0, 1), cod, cols), "k", (0, 1))
    assert fk.subkernel_of_channel(Q) == fk.identity((0, 1)).scale(F(1, 2))


def test_channel_posterior_matches_kernel_posterior():
    rng = np.random.default_rng(5)
    for _ in range(20):
        rho = randprog.random_subkernel(rng, (0, 1, 2), ("a", "b"))
        prior = randprog.random_subdist(rng, (0, 1, 2))
        assert fk.channel_posterior(fk.channel_of_subkernel(rho), prior) == fk.kernel_posterior(rho, prior)


def test_conditioning_product_examples():
    b = fk.SubDist((True, False), (F(2, 5), F(3, 5)))
    assert fk.conditioning_product(b, b).as_dict() == {True: F(4, 25), False: F(9, 25)}
    u = fk.uniform((True, False))
    assert fk.conditioning_product(b, u) == fk.SubDist((True, False), (F(1, 5), F(3, 10)))
    delta = fk.point((True, False), True)
    prod = fk.conditioning_product(b, delta)
    assert fk.proportional(fk.dist_kernel(prod), fk.dist_kernel(delta))


def test_evidence_examples():
    one = fl.TRUE
    ev = fl.evidence_report(one)
    assert (ev.z, ev.p, ev.z_reconstructed) == (1, F(1, 2), 1)
    ev = fl.evidence_report(fl.parse_fin(BERN).term)
    assert ev.z == F(13, 25) and ev.p == F(13, 38) and ev.z_reconstructed == F(13, 25)
    zero = fl.fseq(fl.FScore(0), fl.UNIT_V)
    ev = fl.evidence_report(zero)
    assert ev.z == 0 and ev.p == 0
    assert fl.model_evidence(fl.parse_fin(BERN).term) == F(13, 25)


@given(seeds)
def test_evidence_reconstruction(seed):
    t = randprog.random_fin_program(np.random.default_rng(seed), branching=True)
    ev = fl.evidence_report(t)
    assert ev.z == ev.z_reconstructed
    assert ev.p == ev.z / (ev.z + 1)


@pytest.mark.parametrize("law", randprog.FIN_LAWS)
@given(seed=seeds)
def test_cd_laws_exact(law, seed):
    ctx, lhs, rhs = randprog.fin_law_instance(np.random.default_rng(seed), law)
    assert fl.eval_term(ctx, lhs) == fl.eval_term(ctx, rhs)


def test_enum_types_and_observe():
    prog = fl.parse_fin(
        "type coin = {heads, tails}\n"
        "c = categorical{heads: 1/4, tails: 3/4}\n"
        "observe(c == heads, bernoulli(1/2))\n"
        "c"
    )
    d = fl.eval_closed(prog.term)
    assert d.total() == F(1, 2)


def test_parse_errors_and_types():
    from exactcond.syntax import ParseError

    with pytest.raises(ParseError):
        fl.parse_fin("x = bernoulli(")
    with pytest.raises(ParseError):
        fl.parse_fin("categorical{true: 1/2, false: 1/3}")
    with pytest.raises(fl.FinTypeError):
        fl.eval_closed(fl.parse_fin("true =:= ()").term)


@given(seeds)
def test_pretty_round_trip(seed):
    t = randprog.random_fin_program(np.random.default_rng(seed), branching=True)
    assert fl.parse_fin(fl.pretty_fin(t)).term == t


def test_rat_rejects_floats():
    with pytest.raises(TypeError):
        fk.rat(0.5)
    assert fk.rat("0.4") == F(2, 5)


def test_kernel_validation():
    with pytest.raises(ValueError):
        fk.SubKernel((0,), (0, 1), ((F(2, 3),), (F(2, 3),)))
    with pytest.raises(ValueError):
        fk.SubDist((0,), (F(-1, 2),))
