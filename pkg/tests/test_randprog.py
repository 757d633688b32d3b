import numpy as np
import pytest
from hypothesis import given

from exactcond import cond, gauss, randprog
from exactcond.finprob import lang as fl
from exactcond.lang import dim, typecheck

from strategies import seeds


@given(seeds)
def test_random_programs_are_closed_and_bounded(seed):
    t = randprog.random_program(np.random.default_rng(seed), max_dim=4)
    assert randprog.typechecks(t)
    assert 0 <= dim(typecheck((), t)) <= 4


@given(seeds)
def test_random_fin_programs_typecheck(seed):
    t = randprog.random_fin_program(np.random.default_rng(seed), branching=True)
    fl.typecheck_fin((), t)
    assert fl.eval_closed(t).total() <= 1


@pytest.mark.parametrize("law", randprog.GAUSS_LAWS)
def test_gauss_law_instances_typecheck_to_the_same_type(law):
    rng = np.random.default_rng(0)
    for _ in range(10):
        ctx, lhs, rhs = randprog.gauss_law_instance(rng, law)
        assert typecheck(ctx, lhs) == typecheck(ctx, rhs)


@pytest.mark.parametrize("law", randprog.FIN_LAWS)
def test_fin_law_instances_typecheck_to_the_same_type(law):
    rng = np.random.default_rng(0)
    for _ in range(10):
        ctx, lhs, rhs = randprog.fin_law_instance(rng, law)
        assert fl.typecheck_fin(ctx, lhs) == fl.typecheck_fin(ctx, rhs)


def test_feasible_channels_accept_standard_input():
    rng = np.random.default_rng(1)
    results = [cond.eval_state(cond.compose(randprog.random_channel(rng, 2, 2, 2, feasible_bias=1.0),
                                            cond.lift(gauss.standard_normal(2))))
               for _ in range(50)]
    assert sum(r is cond.BOTTOM for r in results) == 0


def test_random_orthogonal_and_invertible():
    rng = np.random.default_rng(2)
    U = randprog.random_orthogonal(rng, 4)
    assert np.allclose(U @ U.T, np.eye(4))
    assert abs(np.linalg.det(randprog.random_invertible(rng, 3))) > 0.5


@pytest.mark.parametrize("j", [0, 5, -1])
def test_walk_program_rejects_bad_indices(j):
    with pytest.raises(ValueError):
        randprog.walk_program(5, {j: 1.0})


def test_walk_program_shape():
    assert dim(typecheck((), randprog.walk_program(7, {3: 0.0}))) == 7
