import pytest

from heq.program import (
    Assign,
    Call,
    Havoc,
    ProgramError,
    Skip,
    derive_sets,
    parse,
    parse_program,
    terminating_procedures,
)
from heq.terms import parse_term

from conftest import load


def errors(text):
    prog, diags = parse(text)
    return prog, [d.message for d in diags if d.level == "error"], [d.message for d in diags if d.level == "warning"]


def test_parse_fig1():
    prog = parse_program(load("fig1.heq"))
    assert prog.vars == ("x", "y")
    assert prog.proc_names == ["main", "p"]
    p = prog.proc("p")
    assert (p.entry, p.exit) == ("n4", "n7")
    assert p.nodes == ("n4", "n5", "n6", "n7")
    stmts = [e.stmt for e in p.edges]
    assert stmts[0] == Assign("x", parse_term("f(x,x)", {"x"}))
    assert stmts[1] == Call("p") and stmts[3] == Skip()
    assert prog.owner("n2").name == "main"


def test_text_round_trip():
    prog = parse_program(load("fig1.heq"))
    again = parse_program(prog.to_text())
    assert again == prog


def test_havoc_and_multi_variable_rhs():
    text = "vars x y ; proc main entry 0 exit 2 ; edge 0 1 : x = ? ; edge 1 2 : y = f(x,y) ;"
    prog, errs, warns = errors(text)
    assert not errs
    assert [e.stmt for e in prog.proc("main").edges] == [Havoc("x"), Havoc("y")]
    assert any("several variables" in w for w in warns)


@pytest.mark.parametrize(
    "text, needle",
    [
        ("", "no main procedure"),
        ("vars x ; proc main entry a exit b ; edge a b : call q ;", "undefined procedure q"),
        ("vars x ; proc main entry a exit b ; edge a b : z = a ;", "undeclared variable z"),
        ("vars x ; proc main entry a exit c ; edge a b : skip ; edge a c : skip ; edge d c : skip ;", "unreachable point d"),
        ("vars x ; proc main entry a exit b ; edge a b : call main ;", "no terminating path"),
        ("vars x ; proc main entry a exit b ; edge a b : x = f(a) ; edge b a : x = f(a,a) ;", "rank"),
        ("vars x ; proc main entry a exit b ; edge a b : x = f(a ;", "expected"),
        ("vars x ; proc main entry a exit b ; edge a b : skip", "missing ';'"),
        ("vars x ; proc main entry a exit b ; proc main entry c exit d ;", "defined twice"),
        ("vars x ; proc main entry a exit b ; edge a b : skip ; proc q entry b exit c ; edge b c : skip ;", "shared"),
        ("vars x ; proc main entry a exit b ; edge a b : x = _ ;", "hole"),
        ("vars x ; proc main entry a exit b ; nonsense here ;", "cannot parse"),
        ("vars f ; proc main entry a exit b ; edge a b : f = f(a) ;", "both as variable"),
    ],
)
def test_diagnostics(text, needle):
    prog, errs, _ = errors(text)
    assert prog is None
    assert any(needle in e for e in errs), errs


def test_diagnostics_carry_positions():
    _, diags = parse("vars x ;\nproc main entry a exit b ;\n  edge a b : z = a ;")
    d = [d for d in diags if d.level == "error"][0]
    assert (d.line, d.col) == (3, 3)
    assert str(d).startswith("3:3: error:")


def test_parse_program_raises():
    with pytest.raises(ProgramError):
        parse_program("vars x ;")


def test_uncalled_procedure_warns():
    prog, errs, warns = errors("vars x ; proc main entry a exit b ; edge a b : skip ; proc q entry c exit d ; edge c d : skip ;")
    assert prog is not None and not errs
    assert any("never called" in w for w in warns)


def test_recursion_with_base_case_terminates():
    prog = parse_program(load("fig1.heq"))
    assert terminating_procedures(prog) == {"main", "p"}


def test_derived_sets():
    s = derive_sets(parse_program(load("fig1.heq")))
    assert s.R == {parse_term("a")} and s.G == frozenset() and s.is_IR
    s8 = derive_sets(parse_program(load("example8.heq")))
    assert s8.G == {parse_term("a")} and not s8.is_IR
    nested = parse_program("vars x ; proc main entry a exit c ; edge a b : x = a ; edge b c : x = g(a) ;")
    assert not derive_sets(nested).is_IR
