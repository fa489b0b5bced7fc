import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heq import words as W
from heq.oracle import brute_words, monoid_words, random_conj_pair, relation_solutions


def w(text: str) -> W.Word:
    """'f f g-' style: a trailing '-' marks an inverse letter."""
    return W.reduce_word((t.rstrip("-"), -1 if t.endswith("-") else 1) for t in text.split())


def test_reduction_and_balance():
    assert W.reduce_word([("f", 1), ("g", 1), ("g", -1)]) == w("f")
    assert W.balance(w("f f g-")) == 1
    assert W.non_negative(w("f g-"))
    assert not W.non_negative(w("g- f"))
    assert W.concat(w("f g"), W.invert(w("f g"))) == W.EPS
    assert W.render(w("f g-")) == "f·g^-1"


def test_lemma_base_worked_example():
    rel = W.lemma_base(w("f f g- f-"), w("f g-"))
    assert rel == W.Solved("Aw=B", w("f"))
    assert str(rel) == "A·f = B"


def test_lemma_base_degenerate_cases():
    assert W.lemma_base(W.EPS, W.EPS) == W.Trivial()
    assert W.lemma_base(W.EPS, w("f g-")) == W.Contradiction()
    assert W.lemma_base(w("f g-"), w("f h-")) == W.Contradiction()
    with pytest.raises(ValueError):
        W.lemma_base(w("f"), w("f"))


def test_single_equation_keeps_conjugation():
    rel = W.single((w("f"), w("g")))
    assert isinstance(rel, W.Conjugation)
    assert W.single((w("f"), w("f f"))) == W.Contradiction()


def test_pair_reduces_to_solved():
    # A = B f makes A f A^-1 = B f B^-1 and A g f A^-1 = B f g B^-1 both hold
    rel = W.solve_conjugation_pair((w("f"), w("f")), (w("g f"), w("f g")))
    assert rel == W.Solved("A=Bw", w("f"))


def test_check_pair_rejects_negative_words():
    with pytest.raises(ValueError):
        W.solve_conjugation_pair((w("f-"), w("f-")), (w("f"), w("f")))


def test_relation_implies():
    rel = W.Solved("A=Bw", w("f"))
    assert W.relation_implies(rel, (w("g f"), w("f g")))
    assert not W.relation_implies(rel, (w("g"), w("g")))
    assert W.relation_implies(W.Contradiction(), (w("f"), w("g")))
    assert W.relation_implies(W.Trivial(), (W.EPS, W.EPS))


def test_oriented_pair():
    assert W.oriented_pair(w("f-"), w("g-")) == (w("f"), w("g"))


ALPHA = ("f", "g", "h")
WORDS = monoid_words(ALPHA, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_solver_matches_brute_force(seed):
    rng = random.Random(seed)
    planted = (rng.choice(WORDS), rng.choice(WORDS)) if rng.random() < 0.7 else None
    p = random_conj_pair(rng, ALPHA, 4, planted)
    q = random_conj_pair(rng, ALPHA, 4, planted)
    rel = W.solve_conjugation_pair(p, q)
    assert brute_words(p, q, 4, ALPHA) == relation_solutions(rel, 4, ALPHA)
    if planted and W.conj_holds(p, *planted) and W.conj_holds(q, *planted):
        assert rel.holds(*planted)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(WORDS), st.sampled_from(WORDS), st.sampled_from(WORDS))
def test_planted_conjugates_are_solutions(A, B, u):
    u2 = W.concat(W.invert(B), A, u, W.invert(A), B)
    if not W.is_positive(u2):
        return
    assert W.single((u, u2)).holds(A, B)
