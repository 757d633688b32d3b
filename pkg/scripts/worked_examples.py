"""Reproduce the small worked examples and print their values side by side."""

from pathlib import Path

import numpy as np

from exactcond import cond, denot, eqnf, gauss, numlin, opsem
from exactcond.finprob import kernels as fk
from exactcond.finprob import lang as fl
from exactcond.lang import parse

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def load(name):
    return (PROGRAMS / name).read_text()


def noisy_measurement():
    out = opsem.run(parse(load("noisy.gauss"))).outcome()
    print(f"noisy measurement: posterior N({out.b[0]:.6g}, {out.cov[0, 0]:.6g})")


def two_coins():
    sigma = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, -1.0], [1.0, -1.0, 2.0]])
    mean, cov = numlin.condition_gaussian(np.zeros(3), sigma, 2, [0.0])
    gain = sigma[:2, 2:] @ numlin.pinv(sigma[2:, 2:])
    print(f"X, Y given X - Y = 0: mean {mean}, gain {gain.ravel()}, cov\n{cov}")
    joint = gauss.gauss_state(np.zeros(3), sigma)
    k = gauss.conditional(joint, 1)
    print(f"conditional kernel matrix {k.A.ravel()}")


def reduction():
    r = opsem.run(parse(load("reduction.gauss")), trace=True)
    for rec in r.trace:
        print(f"  {rec['step']}: {rec['term']}")
    print(f"reduction: {r.steps} steps, final state cov\n{r.state.cov}\nobservable {r.outcome().cov}")


def normal_forms():
    for name in ("sum_two.gauss", "shared.gauss"):
        nf = eqnf.normalize_closed(eqnf.to_alg((), parse(load(name))))
        print(f"{name}:\n{eqnf.pretty_nf(nf)}")


def finite():
    d = fl.eval_closed(fl.parse_fin(load("bern.fin")).term)
    print(f"two coins, not both true: true {d[True]}, false {d[False]}, fail {1 - d.total()}, "
          f"normalized true {fk.normalize_dist(d)[True]}")
    print(f"evidence {fl.model_evidence(fl.parse_fin(load('bern.fin')).term)}")


def bottoms():
    for name in ("contradiction.gauss", "point_mass.gauss"):
        print(f"{name}: {denot.evaluate(parse(load(name)))!r}")
    print(f"x =:= 0 vs x =:= 1 equivalent: {cond.equiv(denot.denote((), parse(load('x_eq_0.gauss'))), denot.denote((), parse(load('x_eq_1.gauss'))))}")


if __name__ == "__main__":
    for f in (noisy_measurement, two_coins, reduction, normal_forms, finite, bottoms):
        print(f"== {f.__name__}")
        f()
