"""Weakest-precondition transformers and the two constraint systems.

A transformer maps each generic post-condition (``A x == B y`` for a pair of
program variables, ``A x == C`` for one variable) to a conjunction.  The
summary system computes, for every point u of a procedure, the transformer from
u to the procedure's exit; the reaching system composes these into the
transformer from the start of main to u.  Both are solved by Round-Robin
iteration until approximate subsumption reports that nothing new was learnt.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .equalities import (
    BOTTOM,
    C_SIDE,
    TOP,
    UNSAT,
    ConstSystem,
    Conjunction,
    Equality,
    Side,
    SolutionPair,
    conj,
    forall,
    members,
    render,
    solve_const_system,
    solve_system,
    universal_closure,
    wp_subst,
)
from .factor import TermUniverse
from .program import Assign, Call, DerivedSets, Havoc, Program, Skip, Stmt, derive_sets
from .subsumption import ApproxCtx, approx_subsumes, compact
from .terms import HOLE, Term, subst_hole, the_var, var, var_to_hole

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class PostKey:
    kind: str  # "pair" or "const"
    x: str
    y: Optional[str] = None

    def generic(self) -> Equality:
        if self.kind == "const":
            return Equality.of(Side("A", var(self.x)), C_SIDE)
        return Equality.of(Side("A", var(self.x)), Side("B", var(self.y)))

    def __str__(self) -> str:
        return f"A {self.x} == C" if self.kind == "const" else f"A {self.x} == B {self.y}"


def Pair(x: str, y: str) -> PostKey:
    return PostKey("pair", x, y)


def Const(x: str) -> PostKey:
    return PostKey("const", x)


def all_keys(variables: Iterable[str]) -> tuple[PostKey, ...]:
    vs = list(variables)
    return tuple(Pair(x, y) for x in vs for y in vs) + tuple(Const(x) for x in vs)


class Transformer:
    """An immutable table PostKey -> Conjunction."""

    __slots__ = ("table",)

    def __init__(self, table: dict):
        object.__setattr__(self, "table", dict(table))

    def __setattr__(self, *a):
        raise AttributeError("transformers are immutable")

    def __getitem__(self, key: PostKey) -> Conjunction:
        return self.table[key]

    def __eq__(self, other) -> bool:
        return isinstance(other, Transformer) and self.table == other.table

    def __hash__(self):
        return hash(frozenset(self.table.items()))

    def keys(self):
        return self.table.keys()

    def replace(self, key: PostKey, phi: Conjunction) -> "Transformer":
        t = dict(self.table)
        t[key] = phi
        return Transformer(t)

    @staticmethod
    def identity(keys: Iterable[PostKey]) -> "Transformer":
        return Transformer({k: frozenset({k.generic()}) for k in keys})

    @staticmethod
    def top(keys: Iterable[PostKey]) -> "Transformer":
        return Transformer({k: TOP for k in keys})

    def render(self) -> str:
        return "\n".join(f"{k}: {render(v)}" for k, v in sorted(self.table.items()))


# ---------------------------------------------------------------------------
# transformers of statements


def wp_stmt(s: Stmt, phi: Conjunction) -> Conjunction:
    if isinstance(s, Assign):
        return wp_subst(phi, s.x, s.rhs)
    if isinstance(s, Havoc):
        return forall(phi, s.x)
    if isinstance(s, Skip):
        return phi
    raise TypeError(f"wp_stmt does not handle {s}")


def _split_var(side: Side) -> tuple[Optional[str], Optional[Term]]:
    """(variable, prefix template) of a side whose body mentions a variable."""
    if side.body is None or not side.body.vars:
        return None, None
    x = the_var(side.body)
    if not side.is_context:
        raise ValueError(f"variable side without template variable: {side}")
    return x, var_to_hole(side.body, x)


def _instantiate(phi: Conjunction, sub: dict) -> Conjunction:
    """Replace template variables: ``sub[h] = (new head, prefix)`` or a Side for C."""
    if phi is BOTTOM:
        return phi

    def side(sd: Side) -> Side:
        if sd.head not in sub:
            return sd
        r = sub[sd.head]
        if isinstance(r, Side):
            return r
        head, prefix = r
        return Side(head, subst_hole(prefix, sd.body))

    return conj(Equality.of(side(e.lhs), side(e.rhs)) for e in phi)


def apply_transformer(f: Transformer, phi: Conjunction) -> Conjunction:
    """The extension of f to arbitrary analysis-shaped post-conditions."""
    if phi is BOTTOM:
        return phi
    out: list[Equality] = []
    for e in members(phi):
        x, s1 = _split_var(e.lhs)
        y, t1 = _split_var(e.rhs)
        if x is not None and y is not None:
            res = _instantiate(f[Pair(x, y)], {"A": (e.lhs.head, s1), "B": (e.rhs.head, t1)})
        elif x is not None:
            res = _instantiate(f[Const(x)], {"A": (e.lhs.head, s1), "C": e.rhs})
        elif y is not None:
            res = _instantiate(f[Const(y)], {"A": (e.rhs.head, t1), "C": e.lhs})
        else:
            res = frozenset({e})
        if res is BOTTOM:
            return BOTTOM
        out.extend(res)
    return conj(out)


def compose(f: Transformer, g: Transformer, ctx: Optional[ApproxCtx] = None) -> Transformer:
    """``f ∘ g``: first g's pre-condition, then f's."""
    table = {}
    for k in g.keys():
        phi = apply_transformer(f, g[k])
        table[k] = compact(phi, ctx) if ctx is not None else phi
    return Transformer(table)


# ---------------------------------------------------------------------------
# solving


class SolverError(RuntimeError):
    pass


def max_iterations() -> int:
    return int(os.environ.get("HEQ_MAX_ITERS", "1000"))


def make_ctx(prog: Program, sets: Optional[DerivedSets] = None) -> ApproxCtx:
    sets = sets or derive_sets(prog)
    if sets.is_IR:
        small = sets.G
        universe = TermUniverse(sets.G, sets.G)
    else:
        from .factor import subterm_closure

        small = subterm_closure(sets.S)
        universe = TermUniverse(sets.G, small)
    return ApproxCtx(small, universe, tuple(prog.vars))


def _postorder(proc) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []

    def dfs(u: str) -> None:
        seen.add(u)
        for e in proc.out_edges(u):
            if e.v not in seen:
                dfs(e.v)
        out.append(u)

    dfs(proc.entry)
    out.extend(n for n in proc.nodes if n not in seen)
    return out


@dataclass
class TraceCell:
    new: list[Equality]
    top: bool = False
    bottom: bool = False

    def render(self, fmt=str) -> str:
        if self.new:
            return " && ".join(fmt(e) for e in self.new)
        if self.bottom:
            return "false"
        return "true" if self.top else ""


@dataclass
class Solution:
    values: dict[str, Transformer]
    iterations: int
    trace: list[dict[str, TraceCell]] = field(default_factory=list)
    max_size: int = 0


def _update(old: Conjunction, rhs: Conjunction, ctx: ApproxCtx) -> Conjunction:
    if approx_subsumes(old, rhs, ctx):
        return old
    if rhs is BOTTOM:
        return BOTTOM
    return compact(members(old) + members(rhs), ctx)


def _meet(phis: list[Conjunction]) -> Conjunction:
    out: set = set()
    for p in phis:
        if p is BOTTOM:
            return BOTTOM
        out |= p
    return frozenset(out)


def _round_robin(order, rhs_of, keys, ctx, trace_key=None) -> Solution:
    values = {u: Transformer.top(keys) for u in order}
    seen: dict[str, set] = {u: set() for u in order}
    trace: list[dict[str, TraceCell]] = []
    last_change = 0
    biggest = 0
    cap = max_iterations()
    for rnd in range(1, cap + 1):
        changed = False
        cells: dict[str, TraceCell] = {}
        for u in order:
            cur = values[u]
            table = dict(cur.table)
            for k in keys:
                rhs = _meet([c(values, k) for c in rhs_of[u]])
                if k == trace_key:
                    new = [e for e in members(rhs) if e not in seen[u]]
                    seen[u].update(members(rhs))
                    cells[u] = TraceCell(new, top=rhs == TOP, bottom=rhs is BOTTOM and rnd == 1)
                nv = _update(table[k], rhs, ctx)
                if nv != table[k]:
                    table[k] = nv
                    changed = True
                    if nv is not BOTTOM:
                        biggest = max(biggest, len(nv))
            values[u] = Transformer(table)
        trace.append(cells)
        if changed:
            last_change = rnd
        else:
            return Solution(values, last_change, trace, biggest)
    raise SolverError(f"no fixpoint after {cap} rounds (HEQ_MAX_ITERS)")


def _wp_rhs(stmt: Stmt, v: str):
    return lambda vals, k: wp_stmt(stmt, vals[v][k])


def _call_rhs(entry: str, v: str):
    return lambda vals, k: apply_transformer(vals[entry], vals[v][k])


def solve_summaries(prog: Program, ctx: Optional[ApproxCtx] = None, trace_key: Optional[PostKey] = None) -> Solution:
    """Greatest solution of the summary system (point -> effect up to its exit)."""
    ctx = ctx or make_ctx(prog)
    keys = all_keys(prog.vars)
    ident = Transformer.identity(keys)
    order: list[str] = []
    rhs_of: dict[str, list] = {}
    for p in prog.procedures:
        for u in _postorder(p):
            order.append(u)
            cs = []
            if u == p.exit:
                cs.append(lambda vals, k: ident[k])
            for e in p.out_edges(u):
                if isinstance(e.stmt, Call):
                    cs.append(_call_rhs(prog.proc(e.stmt.proc).entry, e.v))
                else:
                    cs.append(_wp_rhs(e.stmt, e.v))
            rhs_of[u] = cs
    return _round_robin(order, rhs_of, keys, ctx, trace_key)


def solve_reaching(prog: Program, summaries: Solution, ctx: Optional[ApproxCtx] = None) -> Solution:
    """Greatest solution of the reaching system (start of main -> point)."""
    ctx = ctx or make_ctx(prog)
    keys = all_keys(prog.vars)
    ident = Transformer.identity(keys)
    S = summaries.values
    order: list[str] = []
    rhs_of: dict[str, list] = {}
    for p in prog.procedures:
        order.extend(reversed(_postorder(p)))
    for u in order:
        rhs_of[u] = []
    rhs_of[prog.proc(prog.main).entry].append(lambda vals, k: ident[k])
    for p in prog.procedures:
        for e in p.edges:
            if isinstance(e.stmt, Call):
                callee = prog.proc(e.stmt.proc)
                summary = S[callee.entry]
                rhs_of[e.v].append(_reach_call(e.u, summary))
                rhs_of[callee.entry].append(_reach_entry(e.u))
            else:
                rhs_of[e.v].append(_reach_stmt(e.u, e.stmt))
    return _round_robin(order, rhs_of, keys, ctx)


def _reach_call(u: str, summary: Transformer):
    return lambda vals, k: apply_transformer(vals[u], summary[k])


def _reach_entry(u: str):
    return lambda vals, k: vals[u][k]


def _reach_stmt(u: str, stmt: Stmt):
    return lambda vals, k: apply_transformer(vals[u], wp_stmt(stmt, frozenset({k.generic()})))


# ---------------------------------------------------------------------------
# extracting invariants


def extract_constant(phi: Conjunction, variables: Iterable[str]) -> Optional[Term]:
    """The constant value of x given ``phi`` = reaching(A x == C), if any."""
    psi = universal_closure(phi, variables)
    if psi is BOTTOM or not psi:
        return None
    res = solve_const_system(e.lhs.body for e in members(psi))
    if isinstance(res, ConstSystem) and res.rep.is_ground:
        return res.rep
    return None


def extract_pairs(phi: Conjunction, variables: Iterable[str]) -> frozenset[SolutionPair]:
    """Minimal (rA, rB) with ``rA x == rB y`` valid, given reaching(A x == B y)."""
    psi = universal_closure(phi, variables)
    if psi is BOTTOM or not psi:
        return frozenset()
    res = solve_system((e.lhs.body, e.rhs.body) for e in members(psi))
    if res is UNSAT:
        return frozenset()
    return res


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class PairInvariant:
    x: str
    rA: Term
    y: str
    rB: Term

    def __str__(self) -> str:
        lhs = self.x if self.rA is HOLE else str(subst_hole(self.rA, var(self.x)))
        rhs = self.y if self.rB is HOLE else str(subst_hole(self.rB, var(self.y)))
        return f"{lhs} == {rhs}"

    def as_json(self) -> dict:
        return {
            "lhs_template": str(self.rA),
            "lhs_var": self.x,
            "rhs_template": str(self.rB),
            "rhs_var": self.y,
        }


@dataclass
class PointReport:
    point: str
    procedure: str
    constants: list[tuple[str, Term]]
    pairs: list[PairInvariant]
    sizes: dict[str, int]

    def as_json(self) -> dict:
        return {
            "point": self.point,
            "procedure": self.procedure,
            "constants": [{"var": x, "term": str(t)} for x, t in self.constants],
            "pairs": [p.as_json() for p in self.pairs],
        }


@dataclass
class Report:
    points: list[PointReport]
    is_IR: bool
    summary_iterations: int
    reaching_iterations: int
    max_conjunction: int
    bound: int
    summaries: Solution = field(repr=False, default=None)
    reaching: Solution = field(repr=False, default=None)
    ctx: ApproxCtx = field(repr=False, default=None)

    def point(self, name: str) -> PointReport:
        for p in self.points:
            if p.point == name:
                return p
        raise KeyError(name)

    def as_json(self) -> dict:
        return {
            "ir": self.is_IR,
            "iterations": {"summaries": self.summary_iterations, "reaching": self.reaching_iterations},
            "max_conjunction": self.max_conjunction,
            "bound": self.bound,
            "points": [p.as_json() for p in self.points],
        }

    def to_text(self, only: Optional[str] = None) -> str:
        lines = [
            f"program class: {'IR' if self.is_IR else 'general'}",
            f"iterations: {self.summary_iterations}",
            f"reaching iterations: {self.reaching_iterations}",
            f"largest conjunction: {self.max_conjunction} (bound {self.bound})",
        ]
        for p in self.points:
            if only is not None and p.point != only:
                continue
            facts = [f"{x} == {t}" for x, t in p.constants] + [str(q) for q in p.pairs]
            lines.append(f"[{p.procedure}] {p.point}: " + ("; ".join(facts) if facts else "-"))
        return "\n".join(lines)


def analyze(prog: Program, ctx: Optional[ApproxCtx] = None) -> Report:
    sets = derive_sets(prog)
    ctx = ctx or make_ctx(prog, sets)
    S = solve_summaries(prog, ctx)
    R = solve_reaching(prog, S, ctx)
    vs = prog.vars
    points = []
    for proc in prog.procedures:
        for u in proc.nodes:
            tr = R.values[u]
            consts = []
            for x in vs:
                c = extract_constant(tr[Const(x)], vs)
                if c is not None:
                    consts.append((x, c))
            pairs = []
            for i, x in enumerate(vs):
                for y in vs[i:]:
                    for sp in sorted(extract_pairs(tr[Pair(x, y)], vs), key=str):
                        if x == y and sp.rA is sp.rB:
                            continue
                        pairs.append(PairInvariant(x, sp.rA, y, sp.rB))
            sizes = {str(k): (-1 if v is BOTTOM else len(v)) for k, v in tr.table.items()}
            points.append(PointReport(u, proc.name, consts, pairs, sizes))
    return Report(
        points,
        sets.is_IR,
        S.iterations,
        R.iterations,
        max(S.max_size, R.max_size),
        ctx.bound(),
        S,
        R,
        ctx,
    )
