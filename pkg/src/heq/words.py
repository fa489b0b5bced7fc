"""Free monoid / free group words over irreducible-template letters.

A word is a tuple of ``(letter, sign)`` pairs with sign +1 or -1, always kept
freely reduced.  Letters are arbitrary hashable objects; the analysis uses
interned irreducible templates, the tests use plain strings.

Relations between the two context variables A, B (viewed as free-group
elements) are one of :class:`Trivial`, :class:`Contradiction`,
:class:`Solved` or :class:`Conjugation`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Union

Letter = tuple[Hashable, int]
Word = tuple[Letter, ...]

EPS: Word = ()


def reduce_word(letters: Iterable[Letter]) -> Word:
    out: list[Letter] = []
    for a, s in letters:
        if out and out[-1][0] == a and out[-1][1] == -s:
            out.pop()
        else:
            out.append((a, s))
    return tuple(out)


def word(*letters: Hashable) -> Word:
    """Positive word from letters."""
    return tuple((a, 1) for a in letters)


def concat(*ws: Word) -> Word:
    return reduce_word(l for w in ws for l in w)


def invert(w: Word) -> Word:
    return tuple((a, -s) for a, s in reversed(w))


def power(w: Word, k: int) -> Word:
    if k < 0:
        return power(invert(w), -k)
    return concat(*([w] * k)) if k else EPS


def balance(w: Word) -> int:
    return sum(s for _, s in w)


def non_negative(w: Word) -> bool:
    b = 0
    for _, s in w:
        b += s
        if b < 0:
            return False
    return True


def is_positive(w: Word) -> bool:
    return all(s > 0 for _, s in w)


def render(w: Word) -> str:
    if not w:
        return "ε"
    return "·".join(f"{a}" + ("" if s > 0 else "^-1") for a, s in w)


# ---------------------------------------------------------------------------
# relations between A and B


@dataclass(frozen=True)
class Trivial:
    def holds(self, A: Word, B: Word) -> bool:
        return True


@dataclass(frozen=True)
class Contradiction:
    def holds(self, A: Word, B: Word) -> bool:
        return False


@dataclass(frozen=True)
class Solved:
    """``A = B·w`` (orientation "A=Bw") or ``A·w = B`` (orientation "Aw=B")."""

    orientation: str
    w: Word

    @property
    def offset(self) -> Word:
        # B^-1 A
        return self.w if self.orientation == "A=Bw" else invert(self.w)

    def holds(self, A: Word, B: Word) -> bool:
        return concat(invert(B), A) == self.offset

    def __str__(self) -> str:
        if self.orientation == "A=Bw":
            return f"A = B·{render(self.w)}"
        return f"A·{render(self.w)} = B"


@dataclass(frozen=True)
class Conjugation:
    """``A·u·A^-1 = B·u'·B^-1``."""

    u: Word
    u2: Word

    def holds(self, A: Word, B: Word) -> bool:
        return conj_holds((self.u, self.u2), A, B)

    def __str__(self) -> str:
        return f"A·{render(self.u)}·A^-1 = B·{render(self.u2)}·B^-1"


Relation = Union[Trivial, Contradiction, Solved, Conjugation]
Pair = tuple[Word, Word]


def solved_from_offset(d: Word) -> Relation:
    """Relation ``B^-1 A = d``; contradictory unless d or d^-1 is positive."""
    if is_positive(d):
        return Solved("A=Bw", d)
    if is_positive(invert(d)):
        return Solved("Aw=B", invert(d))
    return Contradiction()


def conj_holds(p: Pair, A: Word, B: Word) -> bool:
    u, u2 = p
    return concat(A, u, invert(A)) == concat(B, u2, invert(B))


def check_pair(p: Pair) -> None:
    u, u2 = p
    if reduce_word(u) != u or reduce_word(u2) != u2:
        raise ValueError("pair words must be reduced")
    if not (non_negative(u) and non_negative(u2)):
        raise ValueError("pair words must be non-negative")


def _split(u: Word) -> tuple[Word, Word, Word]:
    """u = x·y·z^-1 with maximal positive x and z."""
    i = 0
    while i < len(u) and u[i][1] > 0:
        i += 1
    j = len(u)
    while j > i and u[j - 1][1] < 0:
        j -= 1
    return u[:i], u[i:j], invert(u[j:])


def lemma_base(u: Word, u2: Word) -> Relation:
    """Resolve ``A u A^-1 = B u' B^-1`` for balance-zero non-negative u, u'."""
    if balance(u) != 0 or balance(u2) != 0:
        raise ValueError("lemma_base needs balance zero on both sides")
    if not u or not u2:
        return Trivial() if u == u2 else Contradiction()
    x, y, z = _split(u)
    x2, y2, z2 = _split(u2)
    if y != y2:
        return Contradiction()
    # A x = B x'  and  A z = B z'  give B^-1 A = x' x^-1 = z' z^-1
    d1 = concat(x2, invert(x))
    d2 = concat(z2, invert(z))
    if d1 != d2:
        return Contradiction()
    return solved_from_offset(d1)


def _combine_solved(rel: Solved, p: Pair) -> Relation:
    d = rel.offset
    u, u2 = p
    return rel if concat(d, u, invert(d)) == u2 else Contradiction()


def single(p: Pair) -> Relation:
    """Canonical relation for a single conjugation equation."""
    u, u2 = p
    if balance(u) != balance(u2):
        return Contradiction()
    if balance(u) == 0:
        return lemma_base(u, u2)
    return Conjugation(u, u2)


def meet(rel: Relation, p: Pair) -> Relation:
    """Conjunction of a relation with one more conjugation equation."""
    if isinstance(rel, Contradiction):
        return rel
    if isinstance(rel, Trivial):
        return single(p)
    if isinstance(rel, Solved):
        return _combine_solved(rel, p)
    return solve_conjugation_pair((rel.u, rel.u2), p)


def solve_conjugation_pair(p: Pair, q: Pair) -> Relation:
    """Reduce two conjugation equations to one relation (Euclid-style)."""
    check_pair(p)
    check_pair(q)
    if balance(p[0]) != balance(p[1]) or balance(q[0]) != balance(q[1]):
        return Contradiction()
    while True:
        (u, u2), (v, v2) = p, q
        if balance(u) < balance(v):
            (u, u2), (v, v2) = (v, v2), (u, u2)
        if balance(v) == 0:
            rel = lemma_base(v, v2)
            if isinstance(rel, Contradiction):
                return rel
            if isinstance(rel, Trivial):
                return single((u, u2))
            return _combine_solved(rel, (u, u2))
        r = balance(u) // balance(v)
        w = concat(u, power(v, -r))
        w2 = concat(u2, power(v2, -r))
        if not w or not w2:
            if w == w2:
                return single((v, v2))
            return Contradiction()
        p, q = (v, v2), (w, w2)


def relation_implies(rel: Relation, p: Pair) -> bool:
    """Does every (A, B) satisfying *rel* satisfy the equation *p*?"""
    if isinstance(rel, Contradiction):
        return True
    u, u2 = p
    if balance(u) != balance(u2):
        return False
    if isinstance(rel, Trivial):
        return single(p) == Trivial()
    if isinstance(rel, Solved):
        return _combine_solved(rel, p) == rel
    return solve_conjugation_pair((rel.u, rel.u2), p) == rel


def oriented_pair(u: Word, u2: Word) -> Pair:
    """Flip ``A u A^-1 = B u' B^-1`` to its inverse if the balance is negative."""
    if balance(u) < 0:
        return invert(u), invert(u2)
    return u, u2
