"""Small/large classification and unique factorization of ground terms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from .terms import (
    HOLE,
    Term,
    distinct_subterms,
    occurrences,
    replace_at,
    subterms,
    compose,
)


def subterm_closure(ts: Iterable[Term]) -> frozenset[Term]:
    out: set[Term] = set()
    for t in ts:
        out.update(subterms(t))
    return frozenset(out)


def maximal_ground_subterms(t: Term) -> list[Term]:
    out: list[Term] = []

    def walk(s: Term) -> None:
        if s.is_ground:
            out.append(s)
            return
        for a in s.args:
            walk(a)

    walk(t)
    return out


@dataclass(frozen=True)
class TermUniverse:
    """Ground-subterm set G and small-term set S (G <= S)."""

    G: frozenset[Term]
    S: frozenset[Term]

    def __post_init__(self):
        if not self.G <= self.S:
            raise ValueError("G must be contained in S")
        if subterm_closure(self.G) != self.G:
            raise ValueError("G must be closed under subterms")
        if subterm_closure(self.S) != self.S:
            raise ValueError("S must be closed under subterms")


@dataclass(frozen=True)
class Factorization:
    m: Term
    x: Term

    def recompose(self) -> Term:
        return compose(self.m, self.x)


def in_MG(u: Term, G: frozenset[Term]) -> bool:
    return all(g in G for g in maximal_ground_subterms(u))


def classify(t: Term, S: frozenset[Term]) -> str:
    return "small" if t in S else "large"


def factorize(t: Term, universe: TermUniverse) -> Factorization:
    """Split a large ground term into ``m x`` with m in M_G and x minimal."""
    return _factorize(t, universe.G, universe.S)


@lru_cache(maxsize=None)
def _factorize(t: Term, G: frozenset[Term], S: frozenset[Term]) -> Factorization:
    if not t.is_ground:
        raise ValueError(f"{t} is not ground")
    if t in S:
        raise ValueError(f"{t} is small; only large terms factor uniquely")
    subs = distinct_subterms(t)
    outside = [s for s in subs if s not in G]
    X = [s for s in outside if all(a in G for a in s.args)]
    need = [p for x in X for p in occurrences(t, x)]

    def covers(cand: Term) -> bool:
        occ = occurrences(t, cand)
        return all(any(p[: len(q)] == q for q in occ) for p in need)

    best = [c for c in outside if c not in S and covers(c)]
    best.sort(key=Term.sort_key)
    x = best[0]
    if len(best) > 1 and best[1].size == x.size:
        raise AssertionError(f"ambiguous minimal tail for {t}: {x}, {best[1]}")
    m = replace_at(t, occurrences(t, x), HOLE)
    return Factorization(m, x)


def _right_divisors(m: Term) -> list[Term]:
    """Proper right divisors v of m (v != hole, v != m), largest first."""
    out = []
    for v in distinct_subterms(m):
        if v is m or v is HOLE or not v.holes:
            continue
        occ = occurrences(m, v)
        # every hole of m must sit inside one occurrence of v
        if sum(v.holes for _ in occ) == m.holes:
            out.append(v)
    out.sort(key=lambda v: (-v.size, str(v)))
    return out


@lru_cache(maxsize=None)
def decompose(m: Term) -> tuple[Term, ...]:
    """Irreducible factors u1, ..., uk with ``u1 ... uk = m``."""
    if not m.is_template:
        raise ValueError(f"{m} is not a template")
    if m is HOLE:
        return ()
    divs = _right_divisors(m)
    if not divs:
        return (m,)
    v = divs[0]
    u = replace_at(m, occurrences(m, v), HOLE)
    return (u,) + decompose(v)


def is_irreducible(u: Term) -> bool:
    if u is HOLE:
        raise ValueError("the hole is the neutral element, neither irreducible nor composite")
    return len(decompose(u)) == 1
