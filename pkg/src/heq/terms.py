"""Ground terms, one-variable terms and templates over a ranked signature.

Every term is built through the constructors in this module and interned, so
two structurally equal terms are the same object.  Equality and hashing are
therefore identity based, which keeps the substitution-heavy analysis cheap.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

APP, VAR, HOLE_KIND = 0, 1, 2

Position = tuple[int, ...]


class Term:
    """An immutable, interned term node."""

    __slots__ = ("kind", "head", "args", "size", "vars", "holes", "_hash", "_str")

    kind: int
    head: str
    args: tuple["Term", ...]
    size: int
    vars: frozenset[str]
    holes: int

    def __new__(cls, *a, **kw):  # pragma: no cover - guarded constructor
        raise TypeError("use app(), var() or HOLE to build terms")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return self is other

    def __ne__(self, other: object) -> bool:
        return self is not other

    def __reduce__(self):
        if self.kind == VAR:
            return (var, (self.head,))
        if self.kind == HOLE_KIND:
            return (_hole, ())
        return (app, (self.head, *self.args))

    @property
    def is_ground(self) -> bool:
        return not self.vars and not self.holes

    @property
    def is_template(self) -> bool:
        return self.holes > 0 and not self.vars

    @property
    def is_hole(self) -> bool:
        return self.kind == HOLE_KIND

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    def __str__(self) -> str:
        # iterative, so deep terms do not hit the recursion limit
        stack = [self]
        while stack:
            t = stack[-1]
            if t._str is not None:
                stack.pop()
                continue
            pending = [a for a in t.args if a._str is None]
            if pending:
                stack.extend(pending)
                continue
            if t.kind == HOLE_KIND:
                t._str = "_"
            elif not t.args:
                t._str = t.head
            else:
                t._str = f"{t.head}({','.join(a._str for a in t.args)})"
            stack.pop()
        return self._str

    def __repr__(self) -> str:
        return f"Term({self})"

    def sort_key(self) -> tuple:
        return (self.size, str(self))


_TABLE: dict[tuple, Term] = {}


def _make(kind: int, head: str, args: tuple[Term, ...]) -> Term:
    key = (kind, head, tuple(id(a) for a in args))
    t = _TABLE.get(key)
    if t is not None:
        return t
    t = object.__new__(Term)
    t.kind = kind
    t.head = head
    t.args = args
    if kind == APP:
        t.size = 1 + sum(a.size for a in args)
        t.vars = frozenset().union(*(a.vars for a in args)) if args else frozenset()
        t.holes = sum(a.holes for a in args)
    elif kind == VAR:
        t.size = 1
        t.vars = frozenset((head,))
        t.holes = 0
    else:
        t.size = 1
        t.vars = frozenset()
        t.holes = 1
    t._hash = hash(key[:2] + tuple(hash(a) for a in args))
    t._str = None
    _TABLE[key] = t
    return t


def app(head: str, *args: Term) -> Term:
    return _make(APP, head, tuple(args))


def var(name: str) -> Term:
    return _make(VAR, name, ())


def _hole() -> Term:
    return HOLE


HOLE: Term = _make(HOLE_KIND, "_", ())


# ---------------------------------------------------------------------------
# signatures


class ArityError(ValueError):
    pass


@dataclass
class Signature:
    """Symbol name -> rank.  Ranks are fixed on first use."""

    symbols: dict[str, int]

    def __init__(self, symbols: Optional[dict[str, int]] = None):
        self.symbols = dict(symbols or {})

    def declare(self, name: str, rank: int) -> None:
        old = self.symbols.setdefault(name, rank)
        if old != rank:
            raise ArityError(f"symbol {name!r} used with rank {rank}, previously {old}")

    def observe(self, t: Term) -> None:
        for s in subterms(t):
            if s.kind == APP:
                self.declare(s.head, len(s.args))

    def check(self, t: Term) -> None:
        for s in subterms(t):
            if s.kind == APP:
                rank = self.symbols.get(s.head)
                if rank != len(s.args):
                    raise ArityError(f"{s} does not match rank {rank} of {s.head!r}")

    def constants(self) -> list[str]:
        return sorted(k for k, r in self.symbols.items() if r == 0)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:([A-Za-z0-9][A-Za-z0-9_']*)|(_|•)|(.))")


class TermSyntaxError(ValueError):
    pass


def parse_term(text: str, variables: frozenset[str] | set[str] = frozenset()) -> Term:
    """Parse ``f(x, g(a), _)``; names in *variables* become Var leaves."""
    toks: list[tuple[str, str]] = []
    for m in _TOKEN.finditer(text):
        ident, hole, other = m.groups()
        if ident:
            toks.append(("id", ident))
        elif hole:
            toks.append(("hole", hole))
        elif other:
            toks.append(("p", other))
    pos = 0

    def peek() -> Optional[tuple[str, str]]:
        return toks[pos] if pos < len(toks) else None

    def expect(p: str) -> None:
        nonlocal pos
        tok = peek()
        if tok != ("p", p):
            raise TermSyntaxError(f"expected {p!r} in {text!r}")
        pos += 1

    def term() -> Term:
        nonlocal pos
        tok = peek()
        if tok is None:
            raise TermSyntaxError(f"unexpected end of term in {text!r}")
        pos += 1
        if tok[0] == "hole":
            return HOLE
        if tok[0] != "id":
            raise TermSyntaxError(f"unexpected {tok[1]!r} in {text!r}")
        name = tok[1]
        if peek() == ("p", "("):
            pos += 1
            args = [term()]
            while peek() == ("p", ","):
                pos += 1
                args.append(term())
            expect(")")
            return app(name, *args)
        if name in variables:
            return var(name)
        return app(name)

    t = term()
    if pos != len(toks):
        raise TermSyntaxError(f"trailing input in {text!r}")
    return t


# ---------------------------------------------------------------------------
# traversal


def short(t: Term, limit: int = 120) -> str:
    """Rendering of *t* cut off after about *limit* characters."""
    out: list[str] = []
    n = 0
    stack: list = [t]
    while stack and n < limit:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            n += len(item)
            continue
        if item._str is not None and len(item._str) <= limit:
            out.append(item._str)
            n += len(item._str)
            continue
        if item.kind == HOLE_KIND or not item.args:
            s = "_" if item.kind == HOLE_KIND else item.head
            out.append(s)
            n += len(s)
            continue
        parts: list = [item.head + "("]
        for i, a in enumerate(item.args):
            if i:
                parts.append(",")
            parts.append(a)
        parts.append(")")
        stack.extend(reversed(parts))
    text = "".join(out)
    return text if not stack else text + "..."


def subterms(t: Term) -> Iterator[Term]:
    """All subterm occurrences in pre-order (duplicates included)."""
    stack = [t]
    while stack:
        s = stack.pop()
        yield s
        stack.extend(reversed(s.args))


def distinct_subterms(t: Term) -> list[Term]:
    seen: dict[Term, None] = {}
    for s in subterms(t):
        seen.setdefault(s, None)
    return list(seen)


def positions(t: Term, prefix: Position = ()) -> Iterator[tuple[Position, Term]]:
    yield prefix, t
    for i, a in enumerate(t.args):
        yield from positions(a, prefix + (i,))


def at(t: Term, pos: Position) -> Term:
    for i in pos:
        t = t.args[i]
    return t


def occurrences(s: Term, t: Term) -> list[Position]:
    """Positions in *s* whose subterm equals *t* (outermost first)."""
    out: list[Position] = []

    def walk(u: Term, p: Position) -> None:
        if u is t:
            out.append(p)
            return
        if u.size <= t.size:
            return
        for i, a in enumerate(u.args):
            walk(a, p + (i,))

    walk(s, ())
    return out


def replace_at(t: Term, poss: list[Position] | set[Position], new: Term) -> Term:
    """Replace the subterms at the given (disjoint) positions by *new*."""
    if not poss:
        return t
    if () in poss:
        return new
    groups: dict[int, list[Position]] = {}
    for p in poss:
        groups.setdefault(p[0], []).append(p[1:])
    args = list(t.args)
    for i, sub in groups.items():
        args[i] = replace_at(args[i], sub, new)
    return app(t.head, *args)


def hole_positions(t: Term) -> list[Position]:
    return [p for p, s in positions(t) if s.kind == HOLE_KIND]


# ---------------------------------------------------------------------------
# substitution


def subst_hole(u: Term, t: Term) -> Term:
    """Plug *t* into every hole of *u* (template composition ``u t``)."""
    if u.holes == 0:
        return u
    if u.kind == HOLE_KIND:
        return t
    return app(u.head, *(subst_hole(a, t) for a in u.args))


def compose(*ts: Term) -> Term:
    """Right-nested composition u1 u2 ... uk."""
    out = ts[-1]
    for u in reversed(ts[:-1]):
        out = subst_hole(u, out)
    return out


def subst_var(t: Term, x: str, s: Term) -> Term:
    if x not in t.vars:
        return t
    if t.kind == VAR:
        return s
    return app(t.head, *(subst_var(a, x, s) for a in t.args))


def var_to_hole(t: Term, x: str) -> Term:
    return subst_var(t, x, HOLE)


def the_var(t: Term) -> Optional[str]:
    """The single program variable of *t*, or None if *t* has none."""
    if not t.vars:
        return None
    if len(t.vars) > 1:
        raise ValueError(f"term {t} mentions more than one variable")
    return next(iter(t.vars))


def divide(t: Term, u: Term) -> Optional[Term]:
    """The unique r with ``u r = t``, or None."""
    if not u.is_template:
        raise ValueError(f"{u} is not a template")
    found: list[Term] = []

    def walk(a: Term, b: Term) -> bool:
        if a.kind == HOLE_KIND:
            if found:
                return found[0] is b
            found.append(b)
            return True
        if a.holes == 0:
            return a is b
        if b.kind != APP or a.head != b.head or len(a.args) != len(b.args):
            return False
        return all(walk(x, y) for x, y in zip(a.args, b.args))

    return found[0] if walk(u, t) else None


def replacements(s: Term, t: Term) -> list[Term]:
    """All templates r with ``r t = s`` for ground s, t."""
    occ = occurrences(s, t)
    out = []
    for k in range(1, len(occ) + 1):
        for chosen in itertools.combinations(occ, k):
            out.append(replace_at(s, list(chosen), HOLE))
    return out


# ---------------------------------------------------------------------------
# one-marker matching


@dataclass(frozen=True)
class AllValues:
    pass


@dataclass(frozen=True)
class Exactly:
    value: Term


@dataclass(frozen=True)
class NoSolution:
    pass


MarkerSolution = Union[AllValues, Exactly, NoSolution]


def _marker_of(t: Term) -> Optional[Term]:
    if t.vars:
        return var(the_var(t))
    if t.holes:
        return HOLE
    return None


def _subst_marker(t: Term, marker: Term, g: Term) -> Term:
    if marker.kind == HOLE_KIND:
        return subst_hole(t, g)
    return subst_var(t, marker.head, g)


def solve_for_marker(u: Term, v: Term) -> MarkerSolution:
    """Which ground values of the shared marker make *u* and *v* equal."""
    if u is v:
        return AllValues()
    mu, mv = _marker_of(u), _marker_of(v)
    if mu is not None and mv is not None and mu is not mv:
        raise ValueError("terms carry different markers")
    marker = mu or mv
    if marker is None:
        return NoSolution()
    candidate: list[Term] = []

    def walk(a: Term, b: Term) -> bool:
        if a is b:
            return True
        if a is marker or b is marker:
            other = b if a is marker else a
            if other.vars or other.holes:
                return False
            candidate.append(other)
            return False
        if a.kind != APP or b.kind != APP or a.head != b.head or len(a.args) != len(b.args):
            return False
        return all(walk(x, y) for x, y in zip(a.args, b.args))

    walk(u, v)
    if not candidate:
        return NoSolution()
    g = candidate[0]
    if _subst_marker(u, marker, g) is _subst_marker(v, marker, g):
        return Exactly(g)
    return NoSolution()
