"""Ground truth at desk scale.

Bounded concrete execution collects the states reaching each program point, so
reported invariants can be refuted.  Brute-force solvers for template and word
equations serve as independent references for the symbolic solvers, and a few
random generators feed the property tests.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from . import words as W
from .equalities import SolutionPair
from .factor import subterm_closure
from .program import Assign, Call, Havoc, Program, Skip, derive_sets, parse
from .terms import HOLE, Term, app, positions, replace_at, short, subst_hole, subst_var, var

State = tuple[Term, ...]  # values aligned with Program.vars


@dataclass(frozen=True)
class RunConfig:
    max_call_depth: int = 4
    max_steps: int = 200
    havoc_pool: Optional[tuple[Term, ...]] = None
    max_configs: int = 200_000


def default_pool(prog: Program) -> tuple[Term, ...]:
    """Small terms of the program plus one atom the program never mentions."""
    sets = derive_sets(prog)
    used = set(prog.signature.symbols)
    name = next(f"z{i}" for i in itertools.count() if f"z{i}" not in used)
    pool = sorted(subterm_closure(sets.S), key=Term.sort_key)
    return tuple(pool) + (app(name),)


@dataclass
class Reached:
    states: dict[str, set[State]]
    partial: bool = False
    configs: int = 0


def _eval(t: Term, vs: Sequence[str], st: State) -> Term:
    for x, v in zip(vs, st):
        t = subst_var(t, x, v)
    return t


def enumerate_states(prog: Program, cfg: RunConfig = RunConfig()) -> Reached:
    """All states observed within the call-depth and path-length bounds."""
    pool = cfg.havoc_pool if cfg.havoc_pool is not None else default_pool(prog)
    vs = prog.vars
    if not pool and vs:
        raise ValueError("empty value pool")
    idx = {x: i for i, x in enumerate(vs)}
    main = prog.proc(prog.main)
    entry_of = {p.name: p.entry for p in prog.procedures}
    exits = {p.exit for p in prog.procedures}
    out_edges = {n: p.out_edges(n) for p in prog.procedures for n in p.nodes}

    reached: dict[str, set[State]] = {n: set() for p in prog.procedures for n in p.nodes}
    seen: set = set()
    queue: deque = deque()
    for st in itertools.product(pool, repeat=len(vs)):
        c = (main.entry, (), st)
        seen.add(c)
        queue.append((c, 0))
    partial = False
    while queue:
        (u, stack, st), steps = queue.popleft()
        reached[u].add(st)
        succ = []
        if u in exits and stack:
            succ.append((stack[-1], stack[:-1], st))
        for e in out_edges[u]:
            s = e.stmt
            if isinstance(s, Assign):
                new = list(st)
                new[idx[s.x]] = _eval(s.rhs, vs, st)
                succ.append((e.v, stack, tuple(new)))
            elif isinstance(s, Havoc):
                for val in pool:
                    new = list(st)
                    new[idx[s.x]] = val
                    succ.append((e.v, stack, tuple(new)))
            elif isinstance(s, Skip):
                succ.append((e.v, stack, st))
            elif isinstance(s, Call):
                if len(stack) < cfg.max_call_depth:
                    succ.append((entry_of[s.proc], stack + (e.v,), st))
                else:
                    partial = True
        if steps >= cfg.max_steps:
            partial = partial or bool(succ)
            continue
        for c in succ:
            if c in seen:
                continue
            if len(seen) >= cfg.max_configs:
                partial = True
                continue
            seen.add(c)
            queue.append((c, steps + 1))
    return Reached(reached, partial, len(seen))


# ---------------------------------------------------------------------------
# checking invariants


@dataclass(frozen=True)
class ConstInv:
    x: str
    value: Term

    def holds(self, vs, st: State) -> bool:
        return st[vs.index(self.x)] is self.value

    def __str__(self) -> str:
        return f"{self.x} == {self.value}"


@dataclass(frozen=True)
class PairInv:
    rA: Term
    x: str
    rB: Term
    y: str

    def holds(self, vs, st: State) -> bool:
        return subst_hole(self.rA, st[vs.index(self.x)]) is subst_hole(self.rB, st[vs.index(self.y)])

    def __str__(self) -> str:
        return f"{subst_hole(self.rA, var(self.x))} == {subst_hole(self.rB, var(self.y))}"


Invariant = Union[ConstInv, PairInv]


def check_invariant(inv: Invariant, states: Iterable[State], vs: Sequence[str]) -> tuple[bool, Optional[dict]]:
    vs = list(vs)
    bad = [st for st in states if not inv.holds(vs, st)]
    if not bad:
        return True, None
    st = min(bad, key=lambda s: tuple(t.size for t in s))
    return False, {x: short(v) for x, v in zip(vs, st)}


@dataclass
class Failure:
    point: str
    invariant: str
    state: dict

    def __str__(self) -> str:
        vals = ", ".join(f"{k}={v}" for k, v in self.state.items())
        return f"point {self.point}: {self.invariant} refuted by {{{vals}}}"


@dataclass
class SoundnessResult:
    ok: bool
    failures: list[Failure] = field(default_factory=list)
    checked: int = 0
    partial: bool = False


def report_invariants(report) -> dict[str, list[Invariant]]:
    out: dict[str, list[Invariant]] = {}
    for p in report.points:
        invs: list[Invariant] = [ConstInv(x, t) for x, t in p.constants]
        invs += [PairInv(q.rA, q.x, q.rB, q.y) for q in p.pairs]
        out[p.point] = invs
    return out


def soundness_report(prog: Program, report, cfg: RunConfig = RunConfig(), extra: Optional[dict] = None) -> SoundnessResult:
    """Check every reported invariant against the concrete states; *extra* injects more."""
    reached = enumerate_states(prog, cfg)
    invs = report_invariants(report)
    for point, more in (extra or {}).items():
        invs.setdefault(point, []).extend(more)
    res = SoundnessResult(True, partial=reached.partial)
    for point, lst in invs.items():
        for inv in lst:
            res.checked += 1
            ok, cex = check_invariant(inv, reached.states.get(point, ()), prog.vars)
            if not ok:
                res.ok = False
                res.failures.append(Failure(point, str(inv), cex))
    return res


# ---------------------------------------------------------------------------
# brute-force solvers


def _templates_of(s: Term, t: Term) -> list[Term]:
    """Every r with ``r t = s``: replace any non-empty set of t-positions in s."""
    hits = [p for p, u in positions(s) if u is t]
    out = []
    for k in range(1, len(hits) + 1):
        for chosen in itertools.combinations(hits, k):
            # nested occurrences of t cannot both be replaced
            if any(a != b and b[: len(a)] == a for a in chosen for b in chosen):
                continue
            out.append(replace_at(s, list(chosen), HOLE))
    return out


def brute_solve(eqs: Sequence[tuple[Term, Term]]) -> frozenset[SolutionPair]:
    """Solutions with A or B the hole of ``A s_i == B t_i``, by enumeration."""
    s1, t1 = eqs[0]
    cands = {SolutionPair(HOLE, r) for r in _templates_of(s1, t1)}
    cands |= {SolutionPair(r, HOLE) for r in _templates_of(t1, s1)}
    return frozenset(c for c in cands if all(subst_hole(c.rA, s) is subst_hole(c.rB, t) for s, t in eqs))


def monoid_words(alphabet: Sequence, max_len: int) -> list[W.Word]:
    out: list[W.Word] = []
    for n in range(max_len + 1):
        out.extend(W.word(*ls) for ls in itertools.product(alphabet, repeat=n))
    return out


def _conj_solutions(p: W.Pair, ws: list[W.Word]) -> set[tuple[W.Word, W.Word]]:
    u, u2 = p
    left: dict[W.Word, list[W.Word]] = {}
    for A in ws:
        left.setdefault(W.concat(A, u, W.invert(A)), []).append(A)
    out = set()
    for B in ws:
        for A in left.get(W.concat(B, u2, W.invert(B)), ()):
            out.add((A, B))
    return out


def brute_words(p: W.Pair, q: W.Pair, len_bound: int = 6, alphabet: Sequence = ("f", "g", "h")) -> set[tuple[W.Word, W.Word]]:
    """All monoid pairs (A, B) up to *len_bound* satisfying both conjugation equations."""
    ws = monoid_words(alphabet, len_bound)
    eqs = [e for e in (p, q) if e != (W.EPS, W.EPS)]
    if not eqs:
        return set(itertools.product(ws, ws))
    sols = _conj_solutions(eqs[0], ws)
    return {(A, B) for A, B in sols if all(W.conj_holds(e, A, B) for e in eqs[1:])}


def relation_solutions(rel: W.Relation, len_bound: int = 6, alphabet: Sequence = ("f", "g", "h")) -> set[tuple[W.Word, W.Word]]:
    """Monoid pairs up to *len_bound* satisfying a relation."""
    ws = monoid_words(alphabet, len_bound)
    if isinstance(rel, W.Contradiction):
        return set()
    if isinstance(rel, W.Trivial):
        return set(itertools.product(ws, ws))
    if isinstance(rel, W.Solved):
        out = set()
        for B in ws:
            A = W.concat(B, rel.offset)
            if W.is_positive(A) and len(A) <= len_bound:
                out.add((A, B))
        return out
    return _conj_solutions((rel.u, rel.u2), ws)


# ---------------------------------------------------------------------------
# random instances


def random_ground(rng: random.Random, size: int, symbols=(("a", 0), ("b", 0), ("g", 1), ("f", 2))) -> Term:
    """A random ground term with at most *size* nodes."""
    if size <= 1:
        return app(rng.choice([n for n, r in symbols if r == 0]))
    choices = [(n, r) for n, r in symbols if 1 + r <= size]
    name, rank = rng.choice(choices)
    if rank == 0:
        return app(name)
    budget = size - 1
    args = []
    for i in range(rank):
        left = rank - i - 1
        k = rng.randint(1, max(1, budget - left))
        args.append(random_ground(rng, k, symbols))
        budget -= args[-1].size
    return app(name, *args)


def random_template(rng: random.Random, size: int, inner: Term) -> Term:
    """Random template with *inner* somewhere, then holed at random occurrences."""
    if size <= 1:
        return HOLE
    t = random_ground(rng, size)
    ps = [p for p, _ in positions(t)]
    chosen = rng.sample(ps, k=min(len(ps), rng.randint(1, 2)))
    chosen = [p for p in chosen if not any(q != p and p[: len(q)] == q for q in chosen)]
    return replace_at(t, chosen, HOLE)


def random_ground_system(rng: random.Random, max_eqs: int = 4, max_size: int = 9) -> list[tuple[Term, Term]]:
    """Random systems, about half planted with a solution that has one side the hole."""
    n = rng.randint(1, max_eqs)
    if rng.random() < 0.5:
        out = []
        for _ in range(n):
            s, t = random_ground(rng, rng.randint(1, max_size)), random_ground(rng, rng.randint(1, max_size))
            out.append((s, t))
        return out
    r = random_template(rng, rng.randint(1, 4), HOLE)
    out = []
    for _ in range(n):
        t = random_ground(rng, rng.randint(1, max(1, (max_size - r.size + 1) // max(1, r.holes))))
        s = subst_hole(r, t)
        if rng.random() < 0.15:
            s = random_ground(rng, rng.randint(1, max_size))
        out.append((t, s) if rng.random() < 0.5 else (s, t))
    return out


def random_word(rng: random.Random, alphabet: Sequence, max_len: int, balance: Optional[int] = None) -> W.Word:
    """A random reduced non-negative word (optionally with a prescribed balance)."""
    for _ in range(1000):
        n = rng.randint(0, max_len)
        w = W.reduce_word((rng.choice(alphabet), rng.choice((1, 1, -1))) for _ in range(n))
        if len(w) <= max_len and W.non_negative(w) and (balance is None or W.balance(w) == balance):
            return w
    return W.EPS if not balance else W.word(*([alphabet[0]] * balance))


def random_conj_pair(rng: random.Random, alphabet: Sequence = ("f", "g", "h"), max_len: int = 5, planted=None) -> W.Pair:
    """A conjugation equation; when *planted* = (A, B) it is satisfied by that pair if possible."""
    if planted is not None:
        A, B = planted
        d = W.concat(W.invert(B), A)
        if rng.random() < 0.05:
            return W.EPS, W.EPS
        for _ in range(50):
            if W.is_positive(d):
                # A = B d: (w d, d w) works
                w = random_word(rng, alphabet, max_len - len(d))
                u, u2 = W.concat(w, d), W.concat(d, w)
            elif W.is_positive(W.invert(d)):
                w = random_word(rng, alphabet, max_len + len(d))
                u, u2 = W.concat(W.invert(d), w), W.concat(w, W.invert(d))
            else:
                u = random_word(rng, alphabet, max_len)
                u2 = W.concat(W.invert(B), A, u, W.invert(A), B)
            if u and W.is_positive(u) and W.is_positive(u2) and max(len(u), len(u2)) <= max_len:
                return u, u2
    for _ in range(200):
        u = random_word(rng, alphabet, max_len)
        if not u and rng.random() < 0.9:
            continue
        u2 = random_word(rng, alphabet, max_len, W.balance(u))
        if len(u2) <= max_len and W.non_negative(u2):
            return u, u2
    return W.EPS, W.EPS


_RHS_SYMBOLS = (("a", 0), ("b", 0), ("g", 1), ("f", 2))


def _random_rhs(rng: random.Random, vs: Sequence[str], max_size: int) -> str:
    def build(size: int, x: Optional[str]) -> str:
        leaves = ["a", "b"] + ([x] if x else [])
        if size <= 1:
            return rng.choice(leaves)
        name, rank = rng.choice([(n, r) for n, r in _RHS_SYMBOLS if 1 + r <= size] or [("a", 0)])
        if rank == 0:
            return rng.choice(leaves)
        budget = size - 1
        args = []
        for i in range(rank):
            k = max(1, budget // (rank - i))
            args.append(build(k, x))
            budget -= k
        return f"{name}({','.join(args)})"

    x = rng.choice(list(vs) + [None])
    return build(rng.randint(1, max_size), x)


def random_program_text(
    rng: random.Random, max_vars: int = 3, max_procs: int = 2, max_edges: int = 10, max_size: int = 4
) -> str:
    """Text of a random valid-looking program; use :func:`random_program` to validate."""
    vs = ["x", "y", "z"][: rng.randint(1, max_vars)]
    nprocs = rng.randint(1, max_procs)
    names = ["main"] + [f"p{i}" for i in range(1, nprocs)]
    budget = max_edges
    lines = [f"vars {' '.join(vs)} ;"]
    node = itertools.count()
    for k, name in enumerate(names):
        share = budget if k == nprocs - 1 else rng.randint(1, max(1, budget - (nprocs - k - 1)))
        budget -= share
        length = rng.randint(1, max(1, min(share, 4)))
        chain = [f"n{next(node)}" for _ in range(length + 1)]
        lines.append(f"proc {name} entry {chain[0]} exit {chain[-1]} ;")
        edges = []
        for u, v in zip(chain, chain[1:]):
            edges.append((u, v, _random_stmt(rng, vs, names, max_size)))
        for _ in range(share - length):
            u, v = rng.choice(chain), rng.choice(chain)
            edges.append((u, v, _random_stmt(rng, vs, names, max_size)))
        for u, v, st in edges:
            lines.append(f"edge {u} {v} : {st} ;")
    return "\n".join(lines) + "\n"


def _random_stmt(rng: random.Random, vs, names, max_size) -> str:
    r = rng.random()
    if r < 0.15 and len(names) > 1:
        return f"call {rng.choice(names[1:])}"
    if r < 0.22:
        return "skip"
    x = rng.choice(vs)
    if r < 0.3:
        return f"{x} = ?"
    return f"{x} = {_random_rhs(rng, vs, max_size)}"


def random_program(rng: random.Random, **kw) -> Program:
    """A random program that passes validation."""
    while True:
        prog, _ = parse(random_program_text(rng, **kw))
        if prog is not None:
            return prog
