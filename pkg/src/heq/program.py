"""Programs as per-procedure control-flow graphs, and the `.heq` text format.

    vars x y ;
    proc main entry n0 exit n2 ;
    edge n0 n1 : x = a ;
    edge n1 n2 : call p ;
    ...

Statements are ``x = term``, ``x = ?``, ``call p`` and ``skip``.  ``#`` starts a
comment.  Branching is non-deterministic: a node may have several out-edges.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .factor import subterm_closure, maximal_ground_subterms
from .terms import ArityError, Signature, Term, TermSyntaxError, parse_term, subterms


@dataclass(frozen=True)
class Assign:
    x: str
    rhs: Term

    def __str__(self) -> str:
        return f"{self.x} = {self.rhs}"


@dataclass(frozen=True)
class Havoc:
    x: str

    def __str__(self) -> str:
        return f"{self.x} = ?"


@dataclass(frozen=True)
class Call:
    proc: str

    def __str__(self) -> str:
        return f"call {self.proc}"


@dataclass(frozen=True)
class Skip:
    def __str__(self) -> str:
        return "skip"


Stmt = Union[Assign, Havoc, Call, Skip]


@dataclass(frozen=True)
class Edge:
    u: str
    stmt: Stmt
    v: str


@dataclass(frozen=True)
class Procedure:
    name: str
    entry: str
    exit: str
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    def out_edges(self, u: str) -> list[Edge]:
        return [e for e in self.edges if e.u == u]


@dataclass(frozen=True)
class Program:
    vars: tuple[str, ...]
    procedures: tuple[Procedure, ...]
    signature: Signature = field(compare=False, default_factory=Signature)
    main: str = "main"

    def proc(self, name: str) -> Procedure:
        for p in self.procedures:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def proc_names(self) -> list[str]:
        return [p.name for p in self.procedures]

    def owner(self, node: str) -> Procedure:
        for p in self.procedures:
            if node in p.nodes:
                return p
        raise KeyError(node)

    def to_text(self) -> str:
        lines = [f"vars {' '.join(self.vars)} ;"]
        for p in self.procedures:
            lines.append(f"proc {p.name} entry {p.entry} exit {p.exit} ;")
            for e in p.edges:
                lines.append(f"edge {e.u} {e.v} : {e.stmt} ;")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    message: str
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        loc = f"{self.line}:{self.col}: " if self.line else ""
        return f"{loc}{self.level}: {self.message}"


class ProgramError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_NODE = r"[A-Za-z0-9_']+"
_VARS = re.compile(rf"vars((?:\s+{_IDENT})*)\s*$")
_PROC = re.compile(rf"proc\s+({_IDENT})\s+entry\s+({_NODE})\s+exit\s+({_NODE})\s*$")
_EDGE = re.compile(rf"edge\s+({_NODE})\s+({_NODE})\s*:\s*(.*?)\s*$", re.S)
_CALL = re.compile(rf"call\s+({_IDENT})$")
_ASSIGN = re.compile(rf"({_IDENT})\s*=\s*(.+)$", re.S)


def _statements(text: str):
    """Yield (line, col, statement text) for each ';'-terminated statement."""
    clean = re.sub(r"#[^\n]*", lambda m: " " * len(m.group()), text)
    start = 0
    for m in re.finditer(";", clean):
        chunk = clean[start:m.start()]
        stripped = chunk.strip()
        if stripped:
            off = start + (len(chunk) - len(chunk.lstrip()))
            yield _linecol(clean, off) + (stripped,)
        start = m.end()
    rest = clean[start:].strip()
    if rest:
        off = start + clean[start:].index(rest[0])
        yield _linecol(clean, off) + (None,)


def _linecol(text: str, off: int) -> tuple[int, int]:
    line = text.count("\n", 0, off) + 1
    col = off - (text.rfind("\n", 0, off) + 1) + 1
    return line, col


def parse(text: str) -> tuple[Optional[Program], list[Diagnostic]]:
    """Parse and validate; returns ``(program or None, diagnostics)``."""
    diags: list[Diagnostic] = []
    variables: list[str] = []
    procs: list[dict] = []
    sig = Signature()
    node_owner: dict[str, str] = {}

    def err(msg, line, col):
        diags.append(Diagnostic("error", msg, line, col))

    def own(node, proc, line, col):
        prev = node_owner.setdefault(node, proc["name"])
        if prev != proc["name"]:
            err(f"node {node} shared by procedures {prev} and {proc['name']}", line, col)
        elif node not in proc["nodes"]:
            proc["nodes"].append(node)

    for line, col, st in _statements(text):
        if st is None:
            err("missing ';' at end of input", line, col)
            break
        if m := _VARS.match(st):
            variables.extend(m.group(1).split())
            continue
        if m := _PROC.match(st):
            name, entry, exit_ = m.groups()
            if any(p["name"] == name for p in procs):
                err(f"procedure {name} defined twice", line, col)
                continue
            proc = {"name": name, "entry": entry, "exit": exit_, "nodes": [], "edges": [], "line": line}
            procs.append(proc)
            own(entry, proc, line, col)
            continue
        if m := _EDGE.match(st):
            if not procs:
                err("edge outside of a procedure", line, col)
                continue
            proc = procs[-1]
            u, v, body = m.groups()
            own(u, proc, line, col)
            own(v, proc, line, col)
            stmt = _parse_stmt(body, variables, sig, diags, line, col)
            if stmt is not None:
                proc["edges"].append((Edge(u, stmt, v), line, col))
            continue
        err(f"cannot parse statement {st.split()[0]!r}", line, col)

    for p in procs:
        p["nodes"].append(p["exit"]) if p["exit"] not in p["nodes"] else None
    for x in variables:
        if x in sig.symbols:
            err(f"name {x} used both as variable and function symbol", 0, 0)
    if not any(p["name"] == "main" for p in procs):
        err("no main procedure", 0, 0)
    if any(d.level == "error" for d in diags):
        return None, diags

    prog = Program(
        vars=tuple(dict.fromkeys(variables)),
        procedures=tuple(
            Procedure(p["name"], p["entry"], p["exit"], tuple(p["nodes"]), tuple(e for e, _, _ in p["edges"]))
            for p in procs
        ),
        signature=sig,
    )
    diags.extend(validate(prog))
    if any(d.level == "error" for d in diags):
        return None, diags
    return prog, diags


def _parse_stmt(body: str, variables, sig: Signature, diags, line, col) -> Optional[Stmt]:
    body = " ".join(body.split())
    if body == "skip":
        return Skip()
    if m := _CALL.match(body):
        return Call(m.group(1))
    m = _ASSIGN.match(body)
    if not m:
        diags.append(Diagnostic("error", f"cannot parse statement {body!r}", line, col))
        return None
    x, rhs = m.group(1), m.group(2).strip()
    if x not in variables:
        diags.append(Diagnostic("error", f"assignment to undeclared variable {x}", line, col))
        return None
    if rhs == "?":
        return Havoc(x)
    try:
        t = parse_term(rhs, set(variables))
        if t.holes:
            raise TermSyntaxError(f"hole in right-hand side {rhs!r}")
        sig.observe(t)
    except (TermSyntaxError, ArityError) as e:
        diags.append(Diagnostic("error", str(e), line, col))
        return None
    if len(t.vars) > 1:
        diags.append(
            Diagnostic("warning", f"{x} = {t} mentions several variables; treated as {x} = ?", line, col)
        )
        return Havoc(x)
    return Assign(x, t)


def parse_program(text: str) -> Program:
    prog, diags = parse(text)
    if prog is None:
        raise ProgramError([d for d in diags if d.level == "error"])
    return prog


# ---------------------------------------------------------------------------
# validation


def _reachable(proc: Procedure, usable=lambda e: True) -> set[str]:
    seen = {proc.entry}
    todo = [proc.entry]
    while todo:
        u = todo.pop()
        for e in proc.out_edges(u):
            if e.v not in seen and usable(e):
                seen.add(e.v)
                todo.append(e.v)
    return seen


def terminating_procedures(prog: Program) -> set[str]:
    """Least fixpoint of 'exit reachable via edges whose calls can terminate'."""
    term: set[str] = set()
    changed = True
    while changed:
        changed = False
        for p in prog.procedures:
            if p.name in term:
                continue
            ok = lambda e: not isinstance(e.stmt, Call) or e.stmt.proc in term
            if p.exit in _reachable(p, ok):
                term.add(p.name)
                changed = True
    return term


def validate(prog: Program) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    names = set(prog.proc_names)
    called = set()
    for p in prog.procedures:
        for e in p.edges:
            if isinstance(e.stmt, Call):
                called.add(e.stmt.proc)
                if e.stmt.proc not in names:
                    diags.append(Diagnostic("error", f"call to undefined procedure {e.stmt.proc}"))
    if any(d.level == "error" for d in diags):
        return diags
    for p in prog.procedures:
        reach = _reachable(p)
        for n in p.nodes:
            if n not in reach:
                diags.append(Diagnostic("error", f"unreachable point {n} in procedure {p.name}"))
    term = terminating_procedures(prog)
    for p in prog.procedures:
        if p.name not in term:
            diags.append(Diagnostic("error", f"procedure {p.name} has no terminating path"))
        if p.name != prog.main and p.name not in called:
            diags.append(Diagnostic("warning", f"procedure {p.name} is never called"))
    return diags


# ---------------------------------------------------------------------------
# derived term sets


@dataclass(frozen=True)
class DerivedSets:
    R: frozenset[Term]
    G: frozenset[Term]
    S: frozenset[Term]
    is_IR: bool


def _is_subterm(a: Term, b: Term) -> bool:
    return any(s is a for s in subterms(b))


def derive_sets(prog: Program) -> DerivedSets:
    R: set[Term] = set()
    maxg: list[Term] = []
    for p in prog.procedures:
        for e in p.edges:
            if isinstance(e.stmt, Assign):
                t = e.stmt.rhs
                if t.is_ground:
                    R.add(t)
                else:
                    maxg.extend(maximal_ground_subterms(t))
    G = subterm_closure(maxg)
    R_ = frozenset(R)
    incomparable = all(a is b or not _is_subterm(a, b) for a in R_ for b in R_)
    return DerivedSets(R_, G, G | R_, not (R_ & G) and incomparable)
