import json
import subprocess
import sys

import pytest

from heq.cli import main

from conftest import PROGRAMS

FIG1 = str(PROGRAMS / "fig1.heq")
EX8 = str(PROGRAMS / "example8.heq")
T = "f(h(f(2,h(1))),h(f(2,h(1))))"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_fig1(capsys):
    code, out, _ = run(capsys, "analyze", FIG1)
    assert code == 0
    assert "n3: x == y" in out


def test_analyze_example8(capsys):
    code, out, _ = run(capsys, "analyze", EX8)
    assert code == 0
    assert "exit: x == y" in out and "iterations: 4" in out


def test_analyze_point_filter_and_json(capsys):
    code, out, _ = run(capsys, "--format", "json", "analyze", FIG1, "--point", "n3")
    data = json.loads(out)
    assert code == 0 and [p["point"] for p in data["points"]] == ["n3"]
    code2, out2, _ = run(capsys, "analyze", FIG1, "--point", "n3", "--format=json")
    assert json.loads(out2) == data


def test_analyze_explain(capsys):
    code, out, _ = run(capsys, "analyze", FIG1, "--point", "n2", "--explain")
    assert code == 0 and "GroundAB" in out


def test_analyze_diagnostics(capsys, tmp_path):
    empty = tmp_path / "empty.heq"
    empty.write_text("")
    assert run(capsys, "analyze", str(empty))[0] == 1
    bad = tmp_path / "bad.heq"
    bad.write_text("vars x ; proc main entry a exit b ; edge a b : call q ;")
    code, _, err = run(capsys, "analyze", str(bad))
    assert code == 1 and "undefined procedure q" in err
    assert run(capsys, "analyze", str(tmp_path / "missing.heq"))[0] == 1
    assert run(capsys, "analyze", FIG1, "--point", "nowhere")[0] == 1
    assert run(capsys, "bogus")[0] == 1


def test_internal_error_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("HEQ_MAX_ITERS", "1")
    code, _, err = run(capsys, "analyze", FIG1)
    assert code == 2 and "internal error" in err


def test_summaries(capsys, tmp_path):
    code, out, _ = run(capsys, "summaries", FIG1)
    assert code == 0
    assert "A x == B y: A[f(x,x)] == B[f(y,y)] && A[x] == B[y]" in out
    skip = tmp_path / "skip.heq"
    skip.write_text("vars x ; proc main entry a exit b ; edge a b : skip ;")
    code, out, _ = run(capsys, "summaries", str(skip))
    assert "  Id" in out
    code, out, _ = run(capsys, "summaries", FIG1)
    assert "A x == C: false" in out


def test_check(capsys, tmp_path):
    code, out, _ = run(capsys, "check", FIG1, "--depth", "3", "--steps", "100")
    assert code == 0 and out.startswith("pass")
    code, out, _ = run(capsys, "check", FIG1, "--inject", "n3:_@x=f(_,_)@y")
    assert code == 3 and "refuted" in out
    code, out, _ = run(capsys, "check", FIG1, "--inject", "n1:x=b")
    assert code == 3
    code, _, err = run(capsys, "check", str(PROGRAMS / "havoc_loop.heq"), "--pool", "")
    assert code == 1 and "pool" in err
    code, out, _ = run(capsys, "check", FIG1, "--pool", "a,f(a,a)")
    assert code == 0
    assert run(capsys, "check", FIG1, "--inject", "garbage")[0] == 1


def test_factor(capsys):
    code, out, _ = run(capsys, "factor", T, "-G", "h(1),1")
    assert code == 0 and "factors: f(_,_) h(_) f(_,h(1))" in out
    code, out, _ = run(capsys, "factor", T, "-G", "2")
    assert "factors: f(_,_) h(_) f(2,_) h(_)" in out and "x = 1" in out
    code, out, _ = run(capsys, "factor", T)
    assert "x = f(2,h(1))" in out
    code, _, err = run(capsys, "factor", "h(1)", "-G", "h(1)")
    assert code == 1 and "small" in err


def test_words(capsys):
    code, out, _ = run(capsys, "words", "f f g^-1 f^-1", "f g^-1")
    assert code == 0 and "A·f = B" in out
    code, out, _ = run(capsys, "--format", "json", "words", "f", "g", "f", "g")
    assert json.loads(out)["kind"] == "Conjugation"
    assert run(capsys, "words", "f")[0] == 1
    assert run(capsys, "words", "f!", "g")[0] == 1


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heq.cli", "analyze", FIG1], capture_output=True, text=True)
    assert proc.returncode == 0 and "n3: x == y" in proc.stdout
