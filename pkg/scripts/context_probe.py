"""Compare program equivalence by normal forms against random closing contexts.

For pairs of random programs of the same type, checks that normal-form
equality agrees with observational equality under a batch of random
contexts.  Every other pair is a program with itself, as a control.

    python3 scripts/context_probe.py [--pairs 200] [--contexts 20] [--seed 0]
"""

import argparse

import numpy as np

from exactcond import cond, eqnf, randprog
from exactcond.cli import _closed_outcome
from exactcond.lang import typecheck


def observationally_equal(s, t, ty, rng, n):
    for _ in range(n):
        fill = randprog.random_context(rng, ty)
        if not cond.results_equal(_closed_outcome(fill(s), None), _closed_outcome(fill(t), None)):
            return False
    return True


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=200)
    ap.add_argument("--contexts", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    counts = {"agree_equal": 0, "agree_distinct": 0, "disagree": 0}
    for i in range(args.pairs):
        s = randprog.random_program(rng)
        t = randprog.random_program(rng) if i % 2 else s
        ty = typecheck((), s)
        if typecheck((), t) != ty:
            continue
        nf_same = eqnf.alg_equiv(s, t)
        obs_same = observationally_equal(s, t, ty, rng, args.contexts)
        if nf_same != obs_same:
            counts["disagree"] += 1
        else:
            counts["agree_equal" if nf_same else "agree_distinct"] += 1
    print(counts)


if __name__ == "__main__":
    main()
