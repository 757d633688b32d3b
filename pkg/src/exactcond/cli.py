"""Command-line driver: ``python3 -m exactcond <command> ...``.

Commands
  run         evaluate a ``.gauss`` program and print a JSON report
  equiv       decide equivalence of two ``.gauss`` or ``.fin`` programs
  normalize   print the equational normal form of a ``.gauss`` program
  walk        random-walk posterior as CSV (``i,mean,variance``)
  fin-run     exact distribution of a ``.fin`` program
  fin-equiv   equivalence of two ``.fin`` programs under ``--mode``

Exit codes: 0 success (posterior / equivalent), 1 error, 2 bottom,
3 distinguished.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cond, denot, eqnf, numlin, opsem
from .finprob import lang as fl
from .lang import GaussTypeError, I, PairTy, R, parse, typecheck
from .syntax import ParseError

EXIT_OK, EXIT_ERROR, EXIT_BOTTOM, EXIT_DISTINGUISHED = 0, 1, 2, 3


class CliError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise CliError(f"{path}: {e.strerror}") from None


def _parse_type(text: str):
    """``R``, ``I``, ``R*R``, ``(R*R)*R``; ``*`` associates to the right."""
    s = text.replace(" ", "")
    pos = 0

    def atom():
        nonlocal pos
        if pos < len(s) and s[pos] == "(":
            pos += 1
            ty = prod()
            if pos >= len(s) or s[pos] != ")":
                raise CliError(f"bad type {text!r}")
            pos += 1
            return ty
        if s[pos:pos + 1] in ("R", "I"):
            pos += 1
            return R if s[pos - 1] == "R" else I
        raise CliError(f"bad type {text!r}")

    def prod():
        nonlocal pos
        left = atom()
        if pos < len(s) and s[pos] == "*":
            pos += 1
            return PairTy(left, prod())
        return left

    ty = prod()
    if pos != len(s):
        raise CliError(f"bad type {text!r}")
    return ty


def parse_ctx(text: str | None) -> tuple:
    """``"x:R, p:R*R"`` to a typing context."""
    if not text:
        return ()
    ctx = []
    depth, cur, parts = 0, "", []
    for ch in text:
        depth += ch == "("
        depth -= ch == ")"
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    for part in parts:
        name, sep, ty = part.partition(":")
        if not sep or not name.strip():
            raise CliError(f"bad context entry {part!r}; expected name:type")
        ctx.append((name.strip(), _parse_type(ty)))
    return tuple(ctx)


def _load_gauss(path: str, ctx=()):
    t = parse(_read(path))
    typecheck(ctx, t)
    return t


def _load_fin(path: str):
    return fl.parse_fin(_read(path)).term


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(x):
    return np.asarray(x, dtype=float).tolist()


def _report(result, trace=None) -> dict:
    if result is cond.BOTTOM:
        rep = {"status": "bottom"}
    else:
        rep = {"status": "posterior", "mean": _jsonable(result.b), "cov": _jsonable(result.cov)}
    if trace is not None:
        rep["trace"] = trace
    return rep


def _dump(rep: dict) -> str:
    return json.dumps(rep, indent=2) + "\n"


# ---------------------------------------------------------------- commands


def cmd_run(args) -> int:
    t = _load_gauss(args.program)
    tol = args.tol
    trace = None
    if args.denot:
        result = denot.evaluate(t, tol)
    else:
        r = opsem.run(t, tol, trace=args.trace)
        result = r.outcome()
        if args.trace:
            trace = r.trace
        if args.both:
            other = denot.evaluate(t, tol)
            if not cond.results_equal(result, other, tol):
                raise CliError("operational and denotational results disagree")
    _emit(_dump(_report(result, trace)), args.out)
    return EXIT_BOTTOM if result is cond.BOTTOM else EXIT_OK


def _nf(ctx, t, tol):
    a = eqnf.to_alg(ctx, t)
    if a.n_free == 0:
        return eqnf.normalize_closed(a, tol)
    if a.n_out == 0:
        return eqnf.normalize_effect(a, tol)
    if a.n_cond == 0:
        return eqnf.normalize_free(a)
    return cond.canonicalize(eqnf.channel_of(a), tol)


def _show_nf(nf) -> str:
    if isinstance(nf, (eqnf.ClosedNF, eqnf.EffectNF)) or nf is cond.BOTTOM:
        return eqnf.pretty_nf(nf)
    if isinstance(nf, eqnf.OpenNF):
        return f"A = {eqnf._mat(nf.A)}\nc = {eqnf._vec(nf.c)}\nBB^T = {eqnf._mat(nf.M)}\n"
    return repr(nf) + "\n"


def _closed_outcome(t, tol):
    # the algebraic route scales to large contexts far better than stepping
    return cond.eval_state(eqnf.channel_of(eqnf.to_alg((), t)), tol)


def _context_check(t1, t2, ty, seed: int, n: int, tol) -> int | None:
    """Index of the first random closing context telling the programs apart, if any."""
    from .randprog import random_context

    rng = np.random.default_rng(seed)
    for i in range(n):
        fill = random_context(rng, ty)
        a, b = _closed_outcome(fill(t1), tol), _closed_outcome(fill(t2), tol)
        if not cond.results_equal(a, b, tol):
            return i
    return None


def cmd_equiv(args) -> int:
    if args.left.endswith(".fin") or args.right.endswith(".fin"):
        return _fin_equiv(args.left, args.right, args.mode)
    ctx = parse_ctx(args.ctx)
    t1, t2 = _load_gauss(args.left, ctx), _load_gauss(args.right, ctx)
    ty1, ty2 = typecheck(ctx, t1), typecheck(ctx, t2)
    if ty1 != ty2:
        raise CliError(f"type mismatch: {ty1!r} vs {ty2!r}")
    same = eqnf.alg_equiv(t1, t2, ctx, args.tol)
    lines = ["EQUIVALENT" if same else "DISTINGUISHED"]
    lines.append(f"--- {args.left}")
    lines.append(_show_nf(_nf(ctx, t1, args.tol)).rstrip("\n"))
    lines.append(f"--- {args.right}")
    lines.append(_show_nf(_nf(ctx, t2, args.tol)).rstrip("\n"))
    if args.seed is not None and not ctx:
        hit = _context_check(t1, t2, ty1, args.seed, args.contexts, args.tol)
        if hit is None:
            lines.append(f"contexts: {args.contexts} random closing contexts agree")
        else:
            lines.append(f"contexts: context #{hit} distinguishes")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if same else EXIT_DISTINGUISHED


def cmd_normalize(args) -> int:
    ctx = parse_ctx(args.ctx)
    t = _load_gauss(args.program, ctx)
    a = eqnf.to_alg(ctx, t)
    text = eqnf.pretty_alg(a) + "\n" + _show_nf(_nf(ctx, t, args.tol))
    _emit(text, args.out)
    return EXIT_OK


def parse_obs(text: str | None) -> dict[int, float]:
    """``"20=1.5,40=-1"`` to ``{20: 1.5, 40: -1.0}``."""
    obs: dict[int, float] = {}
    if not text:
        return obs
    for item in text.split(","):
        k, sep, v = item.partition("=")
        if not sep:
            raise CliError(f"bad observation {item!r}; expected index=value")
        try:
            obs[int(k)] = float(v)
        except ValueError:
            raise CliError(f"bad observation {item!r}") from None
    return obs


def walk_posterior(n: int, obs: dict[int, float], interleaved: bool = False, tol=None):
    """Posterior over ``(y0, ..., y_{n-1})`` of the conditioned random walk."""
    from .randprog import walk_program

    return _closed_outcome(walk_program(n, obs, interleaved), tol)


def walk_csv(post) -> str:
    rows = ["i,mean,variance"]
    var = np.diag(post.cov)
    for i, (m, v) in enumerate(zip(post.b, var)):
        rows.append(f"{i},{float(m)!r},{float(v)!r}")
    return "\n".join(rows) + "\n"


def cmd_walk(args) -> int:
    if args.n < 1:
        raise CliError("--n must be positive")
    obs = parse_obs(args.obs)
    for j in obs:
        if not 1 <= j < args.n:
            raise CliError(f"observation index {j} outside [1, {args.n})")
    post = walk_posterior(args.n, obs, args.interleaved, args.tol)
    if post is cond.BOTTOM:
        sys.stderr.write("walk: conditions are infeasible\n")
        return EXIT_BOTTOM
    _emit(walk_csv(post), args.out)
    return EXIT_OK


def fin_report(t, mode: str) -> dict:
    d = fl.eval_closed(t, mode)
    total = d.total()
    rep = {
        "masses": fl.show_dist(d),
        "fail": str(1 - total),
        "total": str(total),
    }
    if total:
        from .finprob.kernels import normalize_dist

        rep["normalized"] = fl.show_dist(normalize_dist(d))
    return rep


def cmd_fin_run(args) -> int:
    t = _load_fin(args.program)
    _emit(_dump(fin_report(t, args.mode)), args.out)
    return EXIT_OK


def _fin_equiv(left: str, right: str, mode: str) -> int:
    s, t = _load_fin(left), _load_fin(right)
    same = fl.equiv_fin(s, t, mode)
    lines = [
        "EQUIVALENT" if same else "DISTINGUISHED",
        f"--- {left}",
        json.dumps(fl.show_dist(fl.eval_closed(s, mode))),
        f"--- {right}",
        json.dumps(fl.show_dist(fl.eval_closed(t, mode))),
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if same else EXIT_DISTINGUISHED


def cmd_fin_equiv(args) -> int:
    return _fin_equiv(args.left, args.right, args.mode)


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="exactcond", description="Exact conditioning for Gaussian and finite programs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--tol", type=float, default=None, help="equality tolerance (default 1e-8 or GAUSS_COND_TOL)")
        sp.add_argument("--out", default=None, help="write output to this file")

    sp = sub.add_parser("run", help="evaluate a .gauss program")
    sp.add_argument("program")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--denot", action="store_true", help="evaluate via the denotation")
    g.add_argument("--both", action="store_true", help="run both semantics and check agreement")
    sp.add_argument("--trace", action="store_true", help="include the reduction trace")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("equiv", help="decide equivalence of two programs")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--ctx", default=None, help='typing context, e.g. "x:R, y:R*R"')
    sp.add_argument("--mode", choices=("psl", "p"), default="psl", help="finite semantics for .fin files")
    sp.add_argument("--seed", type=int, default=None, help="also compare under random closing contexts")
    sp.add_argument("--contexts", type=int, default=50, help="number of random contexts with --seed")
    common(sp)
    sp.set_defaults(func=cmd_equiv)

    sp = sub.add_parser("normalize", help="print the normal form of a .gauss program")
    sp.add_argument("program")
    sp.add_argument("--ctx", default=None)
    common(sp)
    sp.set_defaults(func=cmd_normalize)

    sp = sub.add_parser("walk", help="random-walk posterior as CSV")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--obs", default="", help='observations "index=value,..."')
    sp.add_argument("--interleaved", action="store_true", help="place each condition right after its step")
    common(sp)
    sp.set_defaults(func=cmd_walk)

    sp = sub.add_parser("fin-run", help="exact distribution of a .fin program")
    sp.add_argument("program")
    sp.add_argument("--mode", choices=("psl", "p"), default="p")
    common(sp)
    sp.set_defaults(func=cmd_fin_run)

    sp = sub.add_parser("fin-equiv", help="equivalence of two .fin programs")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--mode", choices=("psl", "p"), default="psl")
    common(sp)
    sp.set_defaults(func=cmd_fin_equiv)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "tol", None) is None:
        args.tol = numlin.default_tol()
    try:
        return args.func(args)
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK
    except (CliError, ParseError, GaussTypeError, fl.FinTypeError, fl.ModeError, ValueError, TypeError) as e:
        if args.command == "run":
            _emit(_dump({"status": "error", "error": str(e)}), args.out)
        sys.stderr.write(f"{args.command}: {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
