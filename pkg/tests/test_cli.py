import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from exactcond import cli

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def run_cli(capsys, *args):
    code = cli.main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def prog(name):
    return PROGRAMS / name


def test_run_noisy(capsys):
    code, out, _ = run_cli(capsys, "run", prog("noisy.gauss"))
    res = json.loads(out)
    assert code == 0 and res["status"] == "posterior"
    assert res["mean"] == pytest.approx([42.0])
    assert np.allclose(res["cov"], [[20.0]])


def test_run_bottom_exit_code(capsys):
    code, out, _ = run_cli(capsys, "run", prog("contradiction.gauss"))
    assert code == 2 and json.loads(out) == {"status": "bottom"}


@pytest.mark.parametrize("flag", ["--denot", "--both"])
def test_run_denotational_routes(capsys, flag):
    code, out, _ = run_cli(capsys, "run", prog("reduction.gauss"), flag)
    res = json.loads(out)
    assert code == 0
    assert np.allclose(res["cov"], [[2.0]])


def test_run_trace_records_every_step(capsys):
    code, out, _ = run_cli(capsys, "run", prog("reduction.gauss"), "--trace")
    trace = json.loads(out)["trace"]
    assert code == 0
    assert [t["step"] for t in trace] == list(range(len(trace)))
    assert len(trace[-1]["mean"]) == 2


def test_run_parse_error_is_reported(capsys, tmp_path):
    bad = tmp_path / "bad.gauss"
    bad.write_text("x = normal(\nx")
    code, out, _ = run_cli(capsys, "run", bad)
    assert code == 1 and json.loads(out)["status"] == "error"


def test_run_writes_out_file(capsys, tmp_path):
    target = tmp_path / "res.json"
    code, _, _ = run_cli(capsys, "run", prog("noisy.gauss"), "--out", target)
    assert code == 0 and json.loads(target.read_text())["mean"] == pytest.approx([42.0])


def test_equiv_distinguishes_constants(capsys):
    code, out, _ = run_cli(capsys, "equiv", prog("x_eq_0.gauss"), prog("x_eq_1.gauss"))
    assert code == 3 and out.startswith("DISTINGUISHED")


def test_equiv_shared_latent(capsys):
    code, out, _ = run_cli(capsys, "equiv", prog("shared.gauss"), prog("shared_nf.gauss"))
    assert code == 0 and out.startswith("EQUIVALENT")


def test_equiv_walk_orderings(capsys):
    code, out, _ = run_cli(capsys, "equiv", prog("walk_batch.gauss"), prog("walk_interleaved.gauss"))
    assert code == 0 and out.startswith("EQUIVALENT")


def test_equiv_open_terms_with_context(capsys, tmp_path):
    a, b = tmp_path / "a.gauss", tmp_path / "b.gauss"
    a.write_text("x + y")
    b.write_text("y + x")
    code, _, _ = run_cli(capsys, "equiv", a, b, "--ctx", "x:R,y:R")
    assert code == 0
    b.write_text("x - y")
    code, _, _ = run_cli(capsys, "equiv", a, b, "--ctx", "x:R,y:R")
    assert code == 3


def test_normalize_prints_normal_form(capsys):
    code, out, _ = run_cli(capsys, "normalize", prog("shared.gauss"))
    assert code == 0 and "AA^T" in out


def test_fin_run_masses(capsys):
    code, out, _ = run_cli(capsys, "fin-run", prog("bern.fin"))
    res = json.loads(out)
    assert code == 0
    assert res["fail"] == "12/25"
    assert res["normalized"] == {"false": "9/13", "true": "4/13"}


def test_fin_equiv_modes(capsys):
    code, _, _ = run_cli(capsys, "fin-equiv", prog("bern.fin"), prog("bern_prefixed.fin"))
    assert code == 0
    code, _, _ = run_cli(capsys, "fin-equiv", prog("bern.fin"), prog("bern_prefixed.fin"), "--mode", "p")
    assert code == 3


def _walk_rows(out):
    return list(csv.DictReader(io.StringIO(out)))


def test_walk_csv(capsys):
    code, out, _ = run_cli(capsys, "walk", "--n", "10", "--obs", "5=2.0")
    rows = _walk_rows(out)
    assert code == 0 and len(rows) == 10
    assert float(rows[5]["mean"]) == pytest.approx(2.0)
    assert abs(float(rows[5]["variance"])) <= 1e-9
    assert float(rows[9]["variance"]) == pytest.approx(4.0)


def test_walk_interleaved_matches_batch(capsys):
    _, a, _ = run_cli(capsys, "walk", "--n", "30", "--obs", "10=1,20=-1")
    _, b, _ = run_cli(capsys, "walk", "--n", "30", "--obs", "10=1,20=-1", "--interleaved")
    ra, rb = _walk_rows(a), _walk_rows(b)
    for x, y in zip(ra, rb):
        assert float(x["mean"]) == pytest.approx(float(y["mean"]), abs=1e-9)
        assert float(x["variance"]) == pytest.approx(float(y["variance"]), abs=1e-9)


@pytest.mark.parametrize("obs", ["0=1.0", "10=1.0", "3", "a=1"])
def test_walk_rejects_bad_observations(capsys, obs):
    code, _, err = run_cli(capsys, "walk", "--n", "10", "--obs", obs)
    assert code == 1 and err


def test_walk_posterior_without_observations():
    post = cli.walk_posterior(20, {})
    assert np.allclose(np.diag(post.cov), np.arange(20.0))


def test_parse_ctx():
    ctx = cli.parse_ctx("x:R, p:R*R, u:I")
    assert [name for name, _ in ctx] == ["x", "p", "u"]
    with pytest.raises(cli.CliError):
        cli.parse_ctx("x R")


def test_output_is_deterministic(capsys):
    runs = [run_cli(capsys, "equiv", prog("walk_batch.gauss"), prog("walk_interleaved.gauss"), "--seed", "3")[1]
            for _ in range(2)]
    assert runs[0] == runs[1]
