import json

import numpy as np
import pytest
from hypothesis import given

from exactcond import gauss, opsem, randprog
from exactcond.cond import BOTTOM
from exactcond.lang import Cond, Const, Let, Normal, Pair, Unit, Var, parse
from strategies import seeds

SHARED = np.array([[0.5, 0.5], [0.5, 0.5]])


def test_normal_allocates_next_latent():
    c = opsem.Running(Normal(), gauss.standard_normal(2))
    out = opsem.step(c)
    assert out.term == Var("z3")
    assert gauss.equal(out.state, gauss.standard_normal(3))


def test_condition_redex_after_two_normals():
    c = opsem.Running(Cond(Var("z1"), Var("z2")), gauss.standard_normal(2))
    out = opsem.step(c)
    assert out.term == Unit()
    assert gauss.equal(out.state, gauss.gauss_state([0.0, 0.0], SHARED), 1e-12)


def test_let_substitutes_values():
    c = opsem.Running(Let("x", Const(2.0), Pair(Var("x"), Var("x"))), gauss.standard_normal(0))
    assert opsem.step(c).term == Pair(Const(2.0), Const(2.0))


def test_step_rejects_values():
    with pytest.raises(ValueError):
        opsem.step(opsem.Running(Const(1.0), gauss.standard_normal(0)))


def test_run_reduction_example():
    r = opsem.run(parse("let (x,y) = (normal(), normal()) in x =:= y; x + y"))
    assert r.value == parse("z1 + z2")
    assert gauss.equal(r.state, gauss.gauss_state([0.0, 0.0], SHARED), 1e-12)
    assert gauss.equal(r.outcome(), gauss.gauss_state([0.0], [[2.0]]), 1e-12)
    assert r.steps <= r.bound


def test_reduction_takes_one_step_per_redex():
    # two sampling steps, the pair match, the condition and the sequencing let
    r = opsem.run(parse("let (x,y) = (normal(), normal()) in x =:= y; x + y"), trace=True)
    assert r.steps == 5
    assert r.trace[2]["term"] == "let (x, y) = (z1, z2) in x =:= y; x + y"


def test_run_constant_tuple():
    r = opsem.run(parse("(1, 2)"))
    assert r.steps == 0 and r.state.cod == 0
    assert gauss.equal(r.outcome(), gauss.const([1.0, 2.0]))


def test_run_forces_point_mass():
    out = opsem.evaluate(parse("let x = normal(0,1) in x =:= 40; x"))
    assert gauss.equal(out, gauss.const([40.0]))


def test_run_failure():
    r = opsem.run(parse("0 =:= 1"))
    assert r.failed and r.outcome() is BOTTOM


def test_noisy_measurement():
    r = opsem.run(parse("x = normal(50, 100)\ny = normal(x, 25)\ny =:= 40\nx"))
    out = r.outcome()
    assert abs(out.b[0] - 42.0) < 1e-9 and abs(out.cov[0, 0] - 20.0) < 1e-9


def test_observable_of_values():
    psi = gauss.gauss_state([0.0, 0.0], SHARED)
    assert gauss.equal(opsem.observable(parse("z1 + z2"), psi), gauss.gauss_state([0.0], [[2.0]]), 1e-12)
    assert gauss.equal(opsem.observable(Const(3.0), psi), gauss.const([3.0]))
    assert gauss.equal(opsem.observable(Var("z1"), gauss.standard_normal(1)), gauss.standard_normal(1))


def test_trace_records_every_step():
    r = opsem.run(parse("x = normal()\nx =:= 1\nx"), trace=True)
    assert len(r.trace) == r.steps + 1
    recs = [json.loads(line) for line in r.trace_jsonl().splitlines()]
    assert recs[0]["step"] == 0 and recs[-1]["mean"] == [1.0]
    assert list(recs[1]) == ["step", "term", "mean", "cov"]


@given(seeds)
def test_step_count_within_symbol_bound(seed):
    t = randprog.random_program(np.random.default_rng(seed))
    r = opsem.run(t)
    assert r.steps <= opsem.count_symbols(t)


@given(seeds)
def test_reduction_is_deterministic(seed):
    t = randprog.random_program(np.random.default_rng(seed))
    a, b = opsem.evaluate(t), opsem.evaluate(t)
    assert (a is BOTTOM and b is BOTTOM) or gauss.equal(a, b, 0.0)
