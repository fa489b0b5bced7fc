"""Format buckets and approximate subsumption of conjunctions.

An A/B equality is sorted into a format according to where its program
variables sit after a small substitution σ has been applied.  Each format has a
bucket that decides, for variables ranging over large values, whether the
stored equalities imply a further one.  ``E ==># E'`` holds if for every small σ
each member of σ(E') is implied by the bucket of its format built from σ(E).
Equalities ``A s == C`` are decided exactly by unification, without σ.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Union

from . import words as W
from .equalities import (
    BOTTOM,
    DIAMOND,
    Conjunction,
    Equality,
    SolutionPair,
    apply_theta,
    members,
    solve_system,
    solve_single,
    unify,
)
from .factor import TermUniverse, decompose, factorize, in_MG
from .terms import Term, subst_hole, subst_var, the_var, var_to_hole


class FormatError(ValueError):
    """An equality fits no format; the analysis produced something unexpected."""


@dataclass(frozen=True)
class ApproxCtx:
    small: frozenset[Term]
    universe: TermUniverse
    vars: tuple[str, ...] = ()

    @property
    def m(self) -> int:
        return len(self.small)

    @property
    def n(self) -> int:
        return len(self.vars)

    def bound(self) -> int:
        return compact_bound(self.n, self.m)


def compact_bound(n: int, m: int) -> int:
    """Size bound for a compacted conjunction: A/B formats plus the A/C bucket."""
    return n * (2 * m + 3) ** 2 + n * (n - 1) * (4 * m * m + 6 * m + 3) + (n + 1)


@dataclass(frozen=True)
class FormatKey:
    kind: str
    x: Optional[str] = None
    y: Optional[str] = None
    s: Optional[Term] = None

    def __str__(self) -> str:
        args = [str(a) for a in (self.s, self.x, self.y) if a is not None]
        return f"{self.kind}({','.join(args)})" if args else self.kind


AC = FormatKey("AC")
GROUND_AB = FormatKey("GroundAB")


def is_ac(e: Equality) -> bool:
    return e.rhs.head == "C" or e.lhs.head == "C"


def classify_format(e: Equality, ctx: ApproxCtx) -> FormatKey:
    if is_ac(e):
        return AC
    if (e.lhs.head, e.rhs.head) != ("A", "B"):
        raise FormatError(f"unexpected heads in {e}")
    s, t = e.lhs.body, e.rhs.body
    x, y = the_var(s), the_var(t)
    G = ctx.universe.G
    for body, v in ((s, x), (t, y)):
        if v is not None and not in_MG(var_to_hole(body, v), G):
            raise FormatError(f"{body} has a ground part outside G in {e}")
    if x is None and y is None:
        return GROUND_AB
    if x is not None and y is not None:
        return FormatKey("SameVar", x) if x == y else FormatKey("TwoVar", x, y)
    if x is None:
        if s.holes:
            raise FormatError(f"template side opposite a variable in {e}")
        return FormatKey("SmallLeft", y, s=s) if s in ctx.small else FormatKey("LargeLeft", y)
    if t.holes:
        raise FormatError(f"template side opposite a variable in {e}")
    return FormatKey("SmallRight", x, s=t) if t in ctx.small else FormatKey("LargeRight", x)


# ---------------------------------------------------------------------------
# buckets


def _diamond(t: Term) -> Term:
    return subst_hole(t, DIAMOND) if t.holes else t


def _ground_sides(e: Equality, key: FormatKey) -> tuple[Term, Term]:
    s, t = e.lhs.body, e.rhs.body
    if key.kind == "SameVar":
        # x ranges over large values; cancel it on the right
        s, t = var_to_hole(s, key.x), var_to_hole(t, key.x)
    return _diamond(s), _diamond(t)


@dataclass(frozen=True)
class Bucket:
    """Normal form of the equalities of one format.

    ``state`` is "top", "single", "related", "words", "bottom".  Ground
    buckets use ``single``/``related``; word buckets keep a base equation, a
    relation between A and B and the shared anchor.
    """

    format: FormatKey
    members: tuple[Equality, ...] = ()
    state: str = "top"
    base: Optional[tuple] = None
    rel: Optional[W.Relation] = None
    anchor: Optional[Term] = None
    solution: Optional[SolutionPair] = None

    @property
    def is_bottom(self) -> bool:
        return self.state == "bottom"

    def describe(self) -> str:
        if self.state == "bottom":
            return f"{self.format}: false"
        if self.state == "related":
            return f"{self.format}: A,B = c·{self.solution}"
        if self.state == "words":
            anc = f", anchor {self.anchor}" if self.anchor is not None else ""
            return f"{self.format}: base {self.members_str(1)}; {self.rel or 'no relation'}{anc}"
        return f"{self.format}: {self.members_str()}"

    def members_str(self, k: Optional[int] = None) -> str:
        ms = self.members if k is None else (self.base[2],)
        return " && ".join(str(e) for e in ms)


_WORD_KINDS = {"TwoVar", "LargeLeft", "LargeRight"}
_GROUND_KINDS = {"GroundAB", "SameVar"}
_SMALL_KINDS = {"SmallLeft", "SmallRight"}


def _word(m: Term) -> W.Word:
    return W.word(*decompose(m))


def _word_parts(e: Equality, key: FormatKey, ctx: ApproxCtx) -> tuple[W.Word, W.Word, Optional[Term]]:
    """(word on the A side, word on the B side, anchor) of a word-format equality."""
    s, t = e.lhs.body, e.rhs.body
    if key.kind == "TwoVar":
        return _word(var_to_hole(s, key.x)), _word(var_to_hole(t, key.y)), None
    if key.kind == "LargeLeft":
        f = factorize(s, ctx.universe)
        return _word(f.m), _word(var_to_hole(t, key.x)), f.x
    f = factorize(t, ctx.universe)
    return _word(var_to_hole(s, key.x)), _word(f.m), f.x


def _pair(parts, base) -> Optional[W.Pair]:
    a, b, _ = parts
    a1, b1 = base[0], base[1]
    u, u2 = W.concat(a, W.invert(a1)), W.concat(b, W.invert(b1))
    if W.balance(u) != W.balance(u2):
        return None
    return W.oriented_pair(u, u2)


def _build_ground(key: FormatKey, eqs: list[Equality]) -> Bucket:
    state, single, sol = "top", None, None
    for e in eqs:
        s, t = _ground_sides(e, key)
        if state == "top":
            if _has_diamond(s) or _has_diamond(t):
                sols = [p for p in solve_single(s, t) if not (_has_diamond(p.rA) or _has_diamond(p.rB))]
                if not sols:
                    return Bucket(key, tuple(eqs), "bottom")
                state, sol = "related", min(sols, key=lambda p: (p.rA.size + p.rB.size, str(p)))
            else:
                state, single = "single", (s, t)
        elif state == "single":
            if (s, t) == single:
                continue
            res = solve_system([single, (s, t)])
            if not isinstance(res, frozenset) or not res:
                return Bucket(key, tuple(eqs), "bottom")
            state, sol = "related", min(res, key=lambda p: (p.rA.size + p.rB.size, str(p)))
        elif not sol.satisfies(s, t):
            return Bucket(key, tuple(eqs), "bottom")
    return Bucket(key, tuple(eqs), state, base=single and (single[0], single[1], eqs[0]), solution=sol)


def _has_diamond(t: Term) -> bool:
    from .terms import subterms

    return any(u is DIAMOND for u in subterms(t))


def _build_words(key: FormatKey, eqs: list[Equality], ctx: ApproxCtx) -> Bucket:
    parts = [_word_parts(e, key, ctx) for e in eqs]
    anchors = {p[2] for p in parts}
    if len(anchors) > 1:
        return Bucket(key, tuple(eqs), "bottom")
    # base: least balance, first in order on ties
    i0 = min(range(len(eqs)), key=lambda i: (W.balance(parts[i][0]), i))
    base = (parts[i0][0], parts[i0][1], eqs[i0])
    rel: W.Relation = W.Trivial()
    for i, p in enumerate(parts):
        if i == i0:
            continue
        pr = _pair(p, base)
        if pr is None:
            return Bucket(key, tuple(eqs), "bottom")
        rel = W.meet(rel, pr)
        if isinstance(rel, W.Contradiction):
            return Bucket(key, tuple(eqs), "bottom")
    return Bucket(key, tuple(eqs), "words", base=base, rel=rel, anchor=parts[0][2])


def build_bucket(key: FormatKey, eqs: Iterable[Equality], ctx: ApproxCtx) -> Bucket:
    eqs = list(dict.fromkeys(eqs))
    if not eqs:
        return Bucket(key)
    if key.kind in _GROUND_KINDS:
        return _build_ground(key, eqs)
    if key.kind in _SMALL_KINDS:
        if len(eqs) > 1:
            return Bucket(key, tuple(eqs), "bottom")
        return Bucket(key, tuple(eqs), "single")
    if key.kind in _WORD_KINDS:
        return _build_words(key, eqs, ctx)
    if key is AC or key.kind == "AC":
        bodies = [e.lhs.body for e in eqs]
        theta = unify((bodies[0], b) for b in bodies[1:])
        if theta is None:
            return Bucket(key, tuple(eqs), "bottom")
        return Bucket(key, tuple(eqs), "single", base=(bodies[0], theta, eqs[0]))
    raise FormatError(f"unknown format {key}")


def bucket_add(b: Bucket, e: Equality, ctx: ApproxCtx) -> Bucket:
    if b.is_bottom:
        return b
    return build_bucket(b.format, b.members + (e,), ctx)


def bucket_subsumes(b: Bucket, e: Equality, ctx: ApproxCtx) -> bool:
    """Does the bucket imply *e* (for variables over large values)?"""
    if b.is_bottom or e in b.members:
        return True
    kind = b.format.kind
    if b.state == "top":
        return False
    if kind == "AC":
        s0, theta, _ = b.base
        return apply_theta(e.lhs.body, theta) is apply_theta(s0, theta)
    if kind in _SMALL_KINDS:
        return False
    if kind in _GROUND_KINDS:
        s, t = _ground_sides(e, b.format)
        if b.state == "single":
            return (s, t) == b.base[:2]
        return b.solution.satisfies(s, t)
    parts = _word_parts(e, b.format, ctx)
    if parts[2] is not b.anchor:
        return False
    pr = _pair(parts, b.base)
    if pr is None:
        return False
    if not pr[0] and not pr[1]:
        return True
    return W.relation_implies(b.rel, pr)


# ---------------------------------------------------------------------------
# approximate subsumption


def _apply_sigma(e: Equality, sigma: tuple[tuple[str, Term], ...]) -> Equality:
    lhs, rhs = e.lhs, e.rhs
    for x, c in sigma:
        lhs, rhs = lhs.subst(x, c), rhs.subst(x, c)
    return Equality.of(lhs, rhs)


def sigmas(variables: Iterable[str], ctx: ApproxCtx):
    """All small substitutions over *variables* (absent entries mean identity)."""
    vs = sorted(variables)
    choices = [None] + sorted(ctx.small, key=Term.sort_key)
    for combo in itertools.product(choices, repeat=len(vs)):
        yield tuple((x, c) for x, c in zip(vs, combo) if c is not None)


@lru_cache(maxsize=200_000)
def _buckets(eqs: tuple[Equality, ...], sigma: tuple, ctx: ApproxCtx) -> dict[FormatKey, Bucket]:
    groups: dict[FormatKey, list[Equality]] = {}
    for e in eqs:
        e = _apply_sigma(e, sigma)
        groups.setdefault(classify_format(e, ctx), []).append(e)
    return {k: build_bucket(k, v, ctx) for k, v in groups.items()}


def _vars(eqs: Iterable[Equality]) -> frozenset[str]:
    out: set[str] = set()
    for e in eqs:
        out |= e.vars
    return frozenset(out)


def _split(phi: Iterable[Equality]) -> tuple[tuple[Equality, ...], tuple[Equality, ...]]:
    ms = sorted(phi, key=Equality.sort_key)
    return tuple(e for e in ms if is_ac(e)), tuple(e for e in ms if not is_ac(e))


def approx_subsumes(E: Conjunction, E2: Conjunction, ctx: ApproxCtx) -> bool:
    """``E ==># E2``."""
    if E is BOTTOM:
        return True
    if E2 is BOTTOM:
        return is_unsat(E, ctx)
    rest = [e for e in E2 if e not in E]
    if not rest:
        return True
    ac, ab = _split(E)
    ac2, ab2 = _split(rest)
    if ac2:
        b = build_bucket(AC, ac, ctx)
        if not all(bucket_subsumes(b, e, ctx) for e in ac2):
            return False
    if not ab2:
        return True
    for sigma in sigmas(_vars(ab) | _vars(ab2), ctx):
        bs = _buckets(ab, sigma, ctx)
        for e in ab2:
            e = _apply_sigma(e, sigma)
            b = bs.get(classify_format(e, ctx))
            if b is None or not bucket_subsumes(b, e, ctx):
                return False
    return True


def is_unsat(E: Conjunction, ctx: ApproxCtx) -> bool:
    """Every small substitution makes some bucket of E contradictory."""
    if E is BOTTOM:
        return True
    ac, ab = _split(E)
    if ac and build_bucket(AC, ac, ctx).is_bottom:
        return True
    if not ab:
        return False
    for sigma in sigmas(_vars(ab), ctx):
        if not any(b.is_bottom for b in _buckets(ab, sigma, ctx).values()):
            return False
    return True


def compact(E: Union[Conjunction, Iterable[Equality]], ctx: ApproxCtx) -> Conjunction:
    """An irredundant subset equivalent under ==>#; earlier members are preferred."""
    if E is BOTTOM:
        return E
    order = members(E) if isinstance(E, frozenset) else list(dict.fromkeys(E))
    if is_unsat(frozenset(order), ctx):
        return BOTTOM
    keep: list[Equality] = []
    for e in order:
        if not approx_subsumes(frozenset(keep), frozenset({e}), ctx):
            keep.append(e)
    for e in list(keep):
        rest = frozenset(k for k in keep if k is not e)
        if approx_subsumes(rest, frozenset({e}), ctx):
            keep.remove(e)
    return frozenset(keep)


def explain(E: Conjunction, ctx: ApproxCtx) -> list[str]:
    """Bucket contents under the identity substitution, for ``--explain``."""
    if E is BOTTOM:
        return ["false"]
    ac, ab = _split(E)
    out = []
    if ac:
        out.append(build_bucket(AC, ac, ctx).describe())
    for k, b in sorted(_buckets(ab, (), ctx).items(), key=lambda kv: str(kv[0])):
        out.append(b.describe())
    return out
