import random

import pytest

from heq.oracle import (
    ConstInv,
    PairInv,
    RunConfig,
    brute_solve,
    check_invariant,
    default_pool,
    enumerate_states,
    random_ground_system,
    random_program,
    random_program_text,
    soundness_report,
)
from heq.program import parse_program
from heq.terms import HOLE, app, parse_term
from heq.wp import analyze

from conftest import load

P = parse_term


@pytest.fixture(scope="module")
def fig1():
    return parse_program(load("fig1.heq"))


def test_default_pool_has_small_terms_and_a_fresh_atom(fig1):
    pool = default_pool(fig1)
    assert pool[0] is app("a") and pool[-1] is app("z0")


def test_fig1_exit_states_grow_in_lockstep(fig1):
    reached = enumerate_states(fig1, RunConfig(max_call_depth=3))
    exit_states = reached.states["n3"]
    # the third frame of p cannot call again, so only two f-steps complete
    assert {x for x, y in exit_states} == {P("a"), P("f(a,a)"), P("f(f(a,a),f(a,a))")}
    assert all(x is y for x, y in exit_states)
    assert reached.partial


def test_empty_pool_is_rejected(fig1):
    with pytest.raises(ValueError):
        enumerate_states(fig1, RunConfig(havoc_pool=()))


def test_step_bound_marks_partial(fig1):
    assert enumerate_states(fig1, RunConfig(max_steps=2)).partial


def test_check_invariant_reports_smallest_counterexample():
    states = [(P("f(a,a)"), P("a")), (P("a"), P("b")), (P("a"), P("a"))]
    ok, cex = check_invariant(PairInv(HOLE, "x", HOLE, "y"), states, ["x", "y"])
    assert not ok and cex == {"x": "a", "y": "b"}
    assert check_invariant(ConstInv("x", P("a")), states[1:], ["x", "y"]) == (True, None)


def test_soundness_passes_on_examples():
    for name in ("fig1.heq", "example8.heq", "havoc_loop.heq"):
        prog = parse_program(load(name))
        res = soundness_report(prog, analyze(prog))
        assert res.ok and res.checked > 0, name


def test_injected_false_invariant_is_refuted(fig1):
    bad = {"n3": [PairInv(HOLE, "x", P("f(_,_)"), "y")]}
    res = soundness_report(fig1, analyze(fig1), extra=bad)
    assert not res.ok
    assert [f.point for f in res.failures] == ["n3"]
    assert "x == f(y,y)" in str(res.failures[0])


def test_brute_solve_small_case():
    sols = brute_solve([(P("f(a,a)"), P("a"))])
    assert {str(s) for s in sols} == {"(_, f(_,a))", "(_, f(a,_))", "(_, f(_,_))"}


def test_generators_respect_limits():
    rng = random.Random(3)
    for _ in range(50):
        eqs = random_ground_system(rng)
        assert 1 <= len(eqs) <= 4
        prog = random_program(rng)
        assert len(prog.vars) <= 3 and len(prog.procedures) <= 2
        assert sum(len(p.edges) for p in prog.procedures) <= 10
    text = random_program_text(random.Random(0))
    assert text.startswith("vars")
