from __future__ import annotations

import shutil

import pytest

from conftest import FIXTURES, fixture_text
from reparam_ppl import cli, programs
from reparam_ppl.emit import alpha_equiv


@pytest.fixture
def src(tmp_path):
    """Copy a fixture or bundled program into tmp_path and return its path."""
    def make(name: str, text: str | None = None) -> str:
        path = tmp_path / name
        if text is not None:
            path.write_text(text)
        elif (FIXTURES / name).exists():
            shutil.copy(FIXTURES / name, path)
        else:
            path.write_text(programs.source(name))
        return str(path)
    return make


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- compile ---------------------------------------------------------------------------

def test_compile_majority(src, capsys, tmp_path):
    code, out, _ = run(capsys, "compile", src("majority.ppl"), "--no-certs")
    assert code == cli.EXIT_OK
    lean = (tmp_path / "majority.lean").read_text()
    assert alpha_equiv(lean, fixture_text("majority.lean"))
    assert "cert majority_fun: skipped" in out


def test_compile_selection_with_certs(src, capsys, tmp_path):
    out_path = tmp_path / "out.lean"
    code, out, _ = run(capsys, "compile", src("selection.ppl"), "--out", str(out_path))
    assert code == cli.EXIT_OK
    text = out_path.read_text()
    assert text.index("def majority_fun") < text.index("def demographic_parity_fun")
    assert "lemma demographic_parity_fun_measurable" in text
    assert "cert majority_fun: ok" in out and "cert demographic_parity_fun: ok" in out


def test_compile_flags(src, capsys, tmp_path):
    out_path = tmp_path / "out.lean"
    code, _, _ = run(capsys, "compile", src("selection.ppl"), "--out", str(out_path),
                     "--prefix", "pp_", "--decimal-constants", "--no-hoist")
    assert code == cli.EXIT_OK
    text = out_path.read_text()
    assert "0.8 * " in text and "def pp_majority_fun" in text
    assert "exact pp_majority_fun_measurable" in text


def test_compile_unknown_distribution(src, capsys):
    path = src("bad.ppl", "def f():\n  x = gamma(2)\n  return (x)\n")
    code, _, err = run(capsys, "compile", path)
    assert code == cli.EXIT_FAIL
    assert err.startswith("error[E_DIST]") and "bad.ppl:2:7" in err


def test_compile_validation_error(src, capsys):
    path = src("cyc.ppl", "def f():\n  [x] = f()\n  return (x)\n")
    code, _, err = run(capsys, "compile", path)
    assert code == cli.EXIT_FAIL and "error[E_CYCLE]" in err


def test_missing_file_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "compile", str(tmp_path / "nope.ppl"))
    assert code == cli.EXIT_USAGE and err.startswith("error[E_USAGE]")


def test_bad_prefix_is_usage_error(src, capsys):
    code, _, err = run(capsys, "compile", src("majority.ppl"), "--prefix", "9x")
    assert code == cli.EXIT_USAGE


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["sample"], ["verify-pac", "--seed", "-1"],
                                  ["verify-dp", "--trials", "0"], ["equiv", "x", "--trials", "-3"]])
def test_argument_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == cli.EXIT_USAGE


# -- check / sample / oracle -----------------------------------------------------------------

def test_check(src, capsys):
    code, out, _ = run(capsys, "check", src("selection.ppl"))
    assert code == cli.EXIT_OK
    assert "PASS  cert majority_fun" in out and "PASS  cert demographic_parity_fun[Y]" in out
    assert "FAIL" not in out
    assert "lemma majority_fun_measurable" in out


def test_sample_is_deterministic(src, capsys):
    path = src("selection.ppl")
    code, first, _ = run(capsys, "sample", path, "--trials", "5", "--seed", "7")
    _, second, _ = run(capsys, "sample", path, "--trials", "5", "--seed", "7")
    _, other, _ = run(capsys, "sample", path, "--trials", "5", "--seed", "8")
    assert code == cli.EXIT_OK and first == second and first != other
    lines = first.splitlines()
    assert "generator=philox4x64-10 seed=7" in lines[0] and "model=demographic_parity" in lines[0]
    assert len(lines) == 6


def test_sample_unknown_model(src, capsys):
    code, _, err = run(capsys, "sample", src("selection.ppl"), "--model", "nobody")
    assert code == cli.EXIT_USAGE and "nobody" in err


def test_oracle_coin(src, capsys):
    code, out, _ = run(capsys, "oracle", src("coin.ppl"))
    assert code == cli.EXIT_OK
    assert out == "0\t1/2\n1\t1/2\n"


def test_oracle_event(src, capsys):
    code, out, _ = run(capsys, "oracle", src("selection.ppl"), "--event", "v.snd.snd = 1")
    assert code == cli.EXIT_OK and out == "v.snd.snd = 1\t7/10\n"


def test_oracle_falls_back_to_pushforward(src, capsys):
    code, out, _ = run(capsys, "oracle", src("corpus.ppl"), "--model", "squared_bias")
    assert code == cli.EXIT_OK and out == "0\t2/3\n1\t1/3\n"


def test_oracle_continuous_output_fails(src, capsys):
    code, _, err = run(capsys, "oracle", src("selection.ppl"), "--model", "majority")
    assert code == cli.EXIT_FAIL and "error[E_NONFINITE]" in err


def test_oracle_bad_event(src, capsys):
    code, _, err = run(capsys, "oracle", src("selection.ppl"), "--event", "w = 1")
    assert code == cli.EXIT_FAIL and "error[E_EVENT]" in err


# -- equiv ---------------------------------------------------------------------------------------

def test_equiv_selection(src, capsys):
    code, out, _ = run(capsys, "equiv", src("selection.ppl"), "--trials", "10000", "--seed", "3")
    assert code == cli.EXIT_OK
    assert "PASS  majority  mismatches=0/10000" in out
    assert "PASS  demographic_parity  mismatches=0/10000" in out


def test_equiv_zero_trials(src, capsys):
    code, _, err = run(capsys, "equiv", src("selection.ppl"), "--trials", "0")
    assert code == cli.EXIT_OK and "no trials" in err


def test_equiv_detects_swapped_uniforms(src, capsys, monkeypatch):
    real = cli.translate_program

    def broken(program, **kw):
        table = real(program, **kw)
        entry = table["majority"]
        (u1, e1), (u2, e2), *rest = entry.fn.bindings
        entry.fn = entry.fn.replace(bindings=((u1, e2), (u2, e1), *rest))
        return table

    monkeypatch.setattr(cli, "translate_program", broken)
    code, out, _ = run(capsys, "equiv", src("majority.ppl"), "--trials", "200")
    assert code == cli.EXIT_FAIL
    assert "FAIL  majority" in out and "stream=(" in out


# -- case studies ------------------------------------------------------------------------------------

def test_verify_dp(capsys):
    code, out, _ = run(capsys, "verify-dp", "--trials", "20000", "--subset", "2000", "--seed", "7")
    assert code == cli.EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("# reparam-ppl verify-dp generator=philox4x64-10 seed=7")
    assert len(lines) == 9 and all(l.startswith("PASS") for l in lines[1:])


def test_verify_dp_tsv(capsys):
    code, out, _ = run(capsys, "verify-dp", "--trials", "1000", "--subset", "100", "--tsv")
    assert code == cli.EXIT_OK
    assert out.splitlines()[1] == "metric\tvalue\ttolerance\tresult"


def test_verify_pac(capsys):
    code, out, _ = run(capsys, "verify-pac", "--eps", "0.1", "--delta", "0.1", "--trials", "10000")
    assert code == cli.EXIT_OK
    assert "n=24" in out.splitlines()[0]
    assert out.count("PASS") == 2


def test_verify_pac_bad_epsilon(capsys):
    code, _, err = run(capsys, "verify-pac", "--eps", "2", "--trials", "10")
    assert code == cli.EXIT_USAGE and "epsilon" in err
