"""Equalities over template variables A, B (contexts) and C (ground).

A side is a template variable applied to a body term, with any prefix template
already merged into the body: ``A s x`` is stored as ``Side("A", s[x])``.  The
ground variable C appears as ``Side("C", None)``.  Bodies mention at most one
program variable, or carry holes once that variable has been quantified.

A conjunction is a ``frozenset`` of equalities (the empty set is Top) or the
singleton :data:`BOTTOM`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .factor import decompose
from .terms import (
    HOLE,
    HOLE_KIND,
    VAR,
    Term,
    app,
    replacements,
    subst_hole,
    subst_var,
    var_to_hole,
)

CONTEXT_VARS = ("A", "B")
GROUND_VAR = "C"
_HEAD_RANK = {"A": 0, "B": 1, "C": 2, None: 3}

# fresh constant standing in for the hole of a template body
DIAMOND = app("◊")


@dataclass(frozen=True)
class TVar:
    kind: str  # "Context" or "Ground"
    id: str


A_VAR = TVar("Context", "A")
B_VAR = TVar("Context", "B")
C_VAR = TVar("Ground", "C")


@dataclass(frozen=True)
class Side:
    head: Optional[str]
    body: Optional[Term] = None

    def __post_init__(self):
        if self.head == GROUND_VAR:
            if self.body is not None:
                raise ValueError("the ground variable C takes no body")
        elif self.body is None:
            raise ValueError("side needs a body")
        elif self.head is None and self.body.holes:
            raise ValueError("bare template bodies need a context head")

    @property
    def vars(self) -> frozenset[str]:
        return self.body.vars if self.body is not None else frozenset()

    @property
    def is_context(self) -> bool:
        return self.head in CONTEXT_VARS

    def key(self) -> tuple:
        return (_HEAD_RANK[self.head], str(self.body) if self.body is not None else "")

    def subst(self, x: str, t: Term) -> "Side":
        if self.body is None or x not in self.body.vars:
            return self
        return Side(self.head, subst_var(self.body, x, t))

    def __str__(self) -> str:
        if self.head == GROUND_VAR:
            return "C"
        if self.head is None:
            return str(self.body)
        return f"{self.head}[{self.body}]"


def ctx(head: str, body: Term) -> Side:
    return Side(head, body)


C_SIDE = Side(GROUND_VAR)


@dataclass(frozen=True)
class Equality:
    lhs: Side
    rhs: Side

    @staticmethod
    def of(a: Side, b: Side) -> "Equality":
        if b.key() < a.key():
            a, b = b, a
        return Equality(a, b)

    @property
    def vars(self) -> frozenset[str]:
        return self.lhs.vars | self.rhs.vars

    def sort_key(self) -> tuple:
        return self.lhs.key() + self.rhs.key()

    def __str__(self) -> str:
        return f"{self.lhs} == {self.rhs}"


class _Bottom:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "BOTTOM"

    __str__ = __repr__

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()
TOP: frozenset = frozenset()

Conjunction = Union[frozenset, _Bottom]


def is_bottom(phi: Conjunction) -> bool:
    return phi is BOTTOM


def _evaluate(e: Equality) -> Union[Equality, None, _Bottom]:
    """Drop trivially true equalities (None) and decide variable-free ground ones."""
    if e.lhs == e.rhs:
        return None
    if e.lhs.head is None and e.rhs.head is None and not e.vars:
        return None if e.lhs.body is e.rhs.body else BOTTOM
    return e


def conj(eqs: Iterable[Equality]) -> Conjunction:
    out = set()
    for e in eqs:
        e = _evaluate(Equality.of(e.lhs, e.rhs))
        if e is BOTTOM:
            return BOTTOM
        if e is not None:
            out.add(e)
    return frozenset(out)


def conj_and(*phis: Conjunction) -> Conjunction:
    if any(p is BOTTOM for p in phis):
        return BOTTOM
    return frozenset().union(*phis)


def members(phi: Conjunction) -> list[Equality]:
    """Equalities in canonical order (empty for Bottom)."""
    if phi is BOTTOM:
        return []
    return sorted(phi, key=Equality.sort_key)


def render(phi: Conjunction) -> str:
    if phi is BOTTOM:
        return "false"
    if not phi:
        return "true"
    return " && ".join(str(e) for e in members(phi))


def _factored_side(side: Side) -> str:
    if side.head == GROUND_VAR:
        return "C"
    body = side.body
    x = next(iter(body.vars)) if len(body.vars) == 1 else None
    if x is None:
        tail = [str(body)]
    else:
        tail = [str(u) for u in decompose(var_to_hole(body, x))] + [x]
    return " ".join(([side.head] if side.head else []) + tail)


def factored(e: Equality) -> str:
    """``A f(_,_) x == B f(_,_) f(_,_) y``: bodies split into irreducible factors."""
    return f"{_factored_side(e.lhs)} == {_factored_side(e.rhs)}"


# ---------------------------------------------------------------------------
# weakest-precondition operations


def wp_subst(phi: Conjunction, x: str, t: Term) -> Conjunction:
    """``phi[t/x]``."""
    if phi is BOTTOM:
        return phi
    return conj(Equality.of(e.lhs.subst(x, t), e.rhs.subst(x, t)) for e in phi)


def _forall_eq(e: Equality, x: str) -> Union[Equality, None, _Bottom]:
    lx, rx = x in e.lhs.vars, x in e.rhs.vars
    if not lx and not rx:
        return e
    if lx != rx:
        return BOTTOM
    if not (e.lhs.is_context or e.rhs.is_context):
        # s x == t x without template variables: identical sides were dropped
        return BOTTOM
    return Equality.of(
        Side(e.lhs.head, var_to_hole(e.lhs.body, x)),
        Side(e.rhs.head, var_to_hole(e.rhs.body, x)),
    )


def forall(phi: Conjunction, x: str) -> Conjunction:
    if phi is BOTTOM:
        return phi
    out = []
    for e in phi:
        r = _forall_eq(e, x)
        if r is BOTTOM:
            return BOTTOM
        if r is not None:
            out.append(r)
    return conj(out)


def universal_closure(phi: Conjunction, variables: Iterable[str]) -> Conjunction:
    for x in sorted(variables):
        phi = forall(phi, x)
    return phi


def subst_context(side: Side, head: str, prefix: Term, new_head: Optional[str] = None) -> Side:
    """Instantiate ``head := new_head·prefix`` on one side."""
    if side.head != head:
        return side
    return Side(new_head or head, subst_hole(prefix, side.body))


# ---------------------------------------------------------------------------
# solving ground template equations


@dataclass(frozen=True)
class SolutionPair:
    rA: Term
    rB: Term

    def __str__(self) -> str:
        return f"({self.rA}, {self.rB})"

    def satisfies(self, s: Term, t: Term) -> bool:
        return subst_hole(self.rA, s) is subst_hole(self.rB, t)


class _Unsat:
    def __repr__(self) -> str:
        return "UNSAT"


UNSAT = _Unsat()


def solve_single(s: Term, t: Term) -> frozenset[SolutionPair]:
    """Solutions of ``A s == B t`` with A or B the hole."""
    if s.size >= t.size:
        out = {SolutionPair(HOLE, r) for r in replacements(s, t)}
    else:
        out = set()
    if t.size >= s.size:
        out |= {SolutionPair(r, HOLE) for r in replacements(t, s)}
    return frozenset(out)


def common_divisor(s1: Term, s2: Term, t1: Term, t2: Term) -> Optional[Term]:
    """The unique template r with ``r t1 = s1`` and ``r t2 = s2`` (t1 != t2)."""
    if t1 is t2:
        raise ValueError("common_divisor needs distinct arguments")

    def walk(a: Term, b: Term) -> Optional[Term]:
        if a is t1 and b is t2:
            return HOLE
        if a is b:
            return a
        if a.kind != b.kind or a.head != b.head or len(a.args) != len(b.args) or not a.args:
            return None
        args = []
        for x, y in zip(a.args, b.args):
            r = walk(x, y)
            if r is None:
                return None
            args.append(r)
        return app(a.head, *args)

    r = walk(s1, s2)
    if r is None or not r.holes:
        return None
    return r


def _hole_to_diamond(t: Term) -> Term:
    return subst_hole(t, DIAMOND) if t.holes else t


def _has_diamond(t: Term) -> bool:
    from .terms import subterms

    return any(s is DIAMOND for s in subterms(t))


def solve_system(eqs: Iterable[tuple[Term, Term]]) -> Union[_Unsat, frozenset[SolutionPair]]:
    """Solutions with one component the hole of ``A s_i == B t_i`` for all i.

    Template bodies are accepted; holes are read as a fresh constant and
    solutions that still mention it are rejected.
    """
    pairs = list(dict.fromkeys((_hole_to_diamond(s), _hole_to_diamond(t)) for s, t in eqs))
    if not pairs:
        raise ValueError("empty system")
    witness = None
    for i, (si, ti) in enumerate(pairs):
        for sj, tj in pairs[i + 1:]:
            if si is not sj and ti is not tj:
                witness = (si, ti, sj, tj)
                break
        if witness:
            break
    if witness is None:
        if len(pairs) > 1:
            # all s equal with distinct t (or vice versa): cancellation fails
            return UNSAT
        cands = solve_single(*pairs[0])
    else:
        si, ti, sj, tj = witness
        cands = set()
        r = common_divisor(si, sj, ti, tj)
        if r is not None:
            cands.add(SolutionPair(HOLE, r))
        r = common_divisor(ti, tj, si, sj)
        if r is not None:
            cands.add(SolutionPair(r, HOLE))
    return frozenset(
        c
        for c in cands
        if not _has_diamond(c.rA)
        and not _has_diamond(c.rB)
        and all(c.satisfies(s, t) for s, t in pairs)
    )


# ---------------------------------------------------------------------------
# A s == C systems


def unify(pairs: Iterable[tuple[Term, Term]], theta: Optional[dict] = None) -> Optional[dict]:
    """Most general unifier over program variables (holes are constants)."""
    theta = dict(theta or {})

    def walk(t: Term) -> Term:
        while t.kind == VAR and t.head in theta:
            t = theta[t.head]
        return t

    def resolve(t: Term) -> Term:
        t = walk(t)
        if t.kind == VAR or not t.vars:
            return t
        return app(t.head, *(resolve(a) for a in t.args))

    stack = list(pairs)
    while stack:
        a, b = stack.pop()
        a, b = walk(a), walk(b)
        if a is b:
            continue
        if a.kind != VAR and b.kind == VAR:
            a, b = b, a
        if a.kind == VAR:
            if a.head in resolve(b).vars:
                return None
            theta[a.head] = b
            continue
        if a.kind == HOLE_KIND or b.kind == HOLE_KIND:
            return None
        if a.head != b.head or len(a.args) != len(b.args):
            return None
        stack.extend(zip(a.args, b.args))
    return {x: resolve(var_term) for x, var_term in theta.items()}


def apply_theta(t: Term, theta: dict) -> Term:
    for x, s in theta.items():
        t = subst_var(t, x, s)
    return t


@dataclass(frozen=True)
class ConstSystem:
    """``A rep == C`` together with the variable constraints ``theta``."""

    rep: Term
    theta: tuple[tuple[str, Term], ...]

    def equality(self) -> Equality:
        return Equality.of(Side("A", self.rep), C_SIDE)


def solve_const_system(bodies: Iterable[Term]) -> Union[_Bottom, frozenset, ConstSystem]:
    """Conjunction of ``A s_i == C``: by top cancellation all s_i must agree."""
    bodies = list(bodies)
    if not bodies:
        return TOP
    s0 = bodies[0]
    theta = unify((s0, s) for s in bodies[1:])
    if theta is None:
        return BOTTOM
    return ConstSystem(apply_theta(s0, theta), tuple(sorted(theta.items(), key=lambda kv: kv[0])))
