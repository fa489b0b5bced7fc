"""Command-line entry point: ``heq analyze|summaries|check|factor|words``.

Exit codes: 0 success, 1 diagnostics (bad input), 2 internal error,
3 the oracle refuted a reported invariant.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from typing import Optional, Sequence

from . import words as W
from .factor import TermUniverse, classify, decompose, factorize, subterm_closure
from .oracle import ConstInv, PairInv, RunConfig, soundness_report
from .program import Program, parse
from .subsumption import explain
from .terms import TermSyntaxError, parse_term
from .wp import SolverError, Transformer, analyze, solve_summaries

EXIT_OK, EXIT_DIAG, EXIT_INTERNAL, EXIT_REFUTED = 0, 1, 2, 3


class UsageError(Exception):
    """Bad user input that is reported as a diagnostic."""


def _load(path: str) -> Program:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    if not text.strip():
        raise UsageError(f"{path}: empty program")
    prog, diags = parse(text)
    for d in diags:
        if d.level == "warning":
            print(f"{path}:{d}", file=sys.stderr)
    if prog is None:
        raise UsageError("\n".join(f"{path}:{d}" for d in diags if d.level == "error"))
    return prog


def _emit(obj, fmt: str, text: str) -> None:
    if fmt == "json":
        print(json.dumps(obj, indent=2, ensure_ascii=False))
    else:
        print(text)


def run_analyze(args) -> int:
    prog = _load(args.file)
    report = analyze(prog)
    if args.point is not None and args.point not in {p.point for p in report.points}:
        raise UsageError(f"no point named {args.point}")
    if args.format == "json":
        data = report.as_json()
        if args.point is not None:
            data["points"] = [p for p in data["points"] if p["point"] == args.point]
        _emit(data, "json", "")
        return EXIT_OK
    lines = [report.to_text(args.point)]
    if args.explain:
        for proc in prog.procedures:
            for u in proc.nodes:
                if args.point is not None and u != args.point:
                    continue
                tr = report.reaching.values[u]
                for key in sorted(tr.table):
                    for row in explain(tr[key], report.ctx):
                        lines.append(f"  {u} {key}: {row}")
    print("\n".join(lines))
    return EXIT_OK


def run_summaries(args) -> int:
    prog = _load(args.file)
    sol = solve_summaries(prog)
    if args.format == "json":
        data = {
            p.name: {str(k): str(v) for k, v in sorted(sol.values[p.entry].table.items())}
            for p in prog.procedures
        }
        _emit({"iterations": sol.iterations, "summaries": data}, "json", "")
        return EXIT_OK
    lines = [f"iterations: {sol.iterations}"]
    for p in prog.procedures:
        tr = sol.values[p.entry]
        lines.append(f"proc {p.name} (entry {p.entry}):")
        if tr == Transformer.identity(tr.keys()):
            lines.append("  Id")
            continue
        lines.extend("  " + row for row in tr.render().splitlines())
    print("\n".join(lines))
    return EXIT_OK


def _parse_pool(item: Optional[str], prog: Program):
    if item is None:
        return None
    terms = _split_terms(item)
    try:
        return tuple(parse_term(t) for t in terms)
    except TermSyntaxError as e:
        raise UsageError(f"bad pool term: {e}") from None


def _parse_inject(entries: Sequence[str], prog: Program) -> dict:
    """``POINT:x=TERM`` or ``POINT:TEMPLATE@x=TEMPLATE@y``."""
    out: dict = {}
    vs = set(prog.vars)
    for item in entries:
        point, _, body = item.partition(":")
        lhs, eq, rhs = body.partition("=")
        if not eq:
            raise UsageError(f"bad --inject {item!r}")
        try:
            if "@" in lhs:
                (ra, x), (rb, y) = (side.rsplit("@", 1) for side in (lhs, rhs))
                inv = PairInv(parse_term(ra), x.strip(), parse_term(rb), y.strip())
            else:
                inv = ConstInv(lhs.strip(), parse_term(rhs))
        except (TermSyntaxError, ValueError) as e:
            raise UsageError(f"bad --inject {item!r}: {e}") from None
        if not {getattr(inv, "x", None), getattr(inv, "y", None)} - {None} <= vs:
            raise UsageError(f"--inject {item!r} names an unknown variable")
        out.setdefault(point, []).append(inv)
    return out


def run_check(args) -> int:
    prog = _load(args.file)
    pool = _parse_pool(args.pool, prog)
    if pool is not None and not pool and prog.vars:
        raise UsageError("empty --pool: havoc and uninitialized reads have no values to draw from")
    cfg = RunConfig(max_call_depth=args.depth, max_steps=args.steps, havoc_pool=pool)
    report = analyze(prog)
    extra = _parse_inject(args.inject or [], prog)
    res = soundness_report(prog, report, cfg, extra=extra)
    if args.format == "json":
        _emit(
            {
                "ok": res.ok,
                "checked": res.checked,
                "partial": res.partial,
                "failures": [{"point": f.point, "invariant": f.invariant, "state": f.state} for f in res.failures],
            },
            "json",
            "",
        )
    else:
        status = "pass" if res.ok else "FAIL"
        lines = [f"{status}: {res.checked} invariants checked" + (" (exploration truncated)" if res.partial else "")]
        lines += [f"  {f}" for f in res.failures]
        print("\n".join(lines))
    return EXIT_OK if res.ok else EXIT_REFUTED


def _split_terms(item: str) -> list[str]:
    """Split a comma-separated term list at top-level commas."""
    out, depth, cur = [], 0, []
    for ch in item:
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip()]


def run_factor(args) -> int:
    try:
        t = parse_term(args.term)
        G = [parse_term(s) for s in _split_terms(args.G or "")]
        S = [parse_term(s) for s in _split_terms(args.S)] if args.S is not None else list(G)
    except TermSyntaxError as e:
        raise UsageError(str(e)) from None
    if not t.is_ground or any(not u.is_ground for u in G + S):
        raise UsageError("factor works on ground terms only")
    Gc = subterm_closure(G)
    Sc = subterm_closure(S) | Gc
    if classify(t, Sc) == "small":
        raise UsageError(f"{t} is a small term (in S); only large terms factor")
    f = factorize(t, TermUniverse(Gc, Sc))
    parts = decompose(f.m) if f.m.holes else ()
    if args.format == "json":
        _emit({"m": str(f.m), "x": str(f.x), "factors": [str(p) for p in parts]}, "json", "")
    else:
        print(f"m = {f.m}\nx = {f.x}\nfactors: {' '.join(str(p) for p in parts) or 'none'}")
    return EXIT_OK


_LETTER = re.compile(r"([A-Za-z0-9_]+)(\^-1|')?")


def _parse_word(text: str) -> W.Word:
    """``f f g^-1`` (or ``f·f·g'``); ``eps`` is the empty word."""
    text = re.sub(r"[\s·*.]+", " ", text).strip()
    if text in ("", "ε", "eps"):
        return W.EPS
    letters = []
    for tok in text.split():
        m = _LETTER.fullmatch(tok)
        if not m:
            raise UsageError(f"bad letter {tok!r} in word {text!r}")
        letters.append((m.group(1), -1 if m.group(2) else 1))
    return W.reduce_word(letters)


def run_words(args) -> int:
    ws = [_parse_word(w) for w in args.words]
    if len(ws) == 2:
        try:
            rel = W.lemma_base(*ws)
        except ValueError as e:
            raise UsageError(str(e)) from None
        label = "lemma_base"
    elif len(ws) == 4:
        rel = W.solve_conjugation_pair((ws[0], ws[1]), (ws[2], ws[3]))
        label = "conjugation pair"
    else:
        raise UsageError("words takes 2 words (u u') or 4 words (u u' v v')")
    if args.format == "json":
        _emit({"kind": type(rel).__name__, "relation": _rel_text(rel)}, "json", "")
    else:
        print(f"{label}: {_rel_text(rel)}")
    return EXIT_OK


def _rel_text(rel: W.Relation) -> str:
    if isinstance(rel, W.Trivial):
        return "true"
    if isinstance(rel, W.Contradiction):
        return "false"
    return str(rel)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heq", description="Two-variable Herbrand equality inference.")
    ap.add_argument("--format", choices=("text", "json"), default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="report invariants at every program point")
    p.add_argument("file")
    p.add_argument("--point", help="only show this point")
    p.add_argument("--explain", action="store_true", help="dump subsumption buckets per key")
    p.set_defaults(run=run_analyze)

    p = sub.add_parser("summaries", help="dump procedure summaries (entry transformers)")
    p.add_argument("file")
    p.set_defaults(run=run_summaries)

    p = sub.add_parser("check", help="analyze, then test the invariants on bounded executions")
    p.add_argument("file")
    p.add_argument("--depth", type=int, default=4, help="maximum call depth")
    p.add_argument("--steps", type=int, default=200, help="maximum transitions per path")
    p.add_argument("--pool", help="comma-separated havoc values (default: small terms plus a fresh atom)")
    p.add_argument("--inject", action="append", metavar="POINT:INV",
                   help="extra invariant to check, e.g. n3:x=a or n3:_@x=f(_,_)@y")
    p.set_defaults(run=run_check)

    p = sub.add_parser("factor", help="factor a large ground term")
    p.add_argument("term")
    p.add_argument("-G", help="comma-separated ground subterms of non-ground right-hand sides")
    p.add_argument("-S", help="comma-separated small terms (default: same as G)")
    p.set_defaults(run=run_factor)

    p = sub.add_parser("words", help="solve conjugation equations over template words")
    p.add_argument("words", nargs="+", help="words like 'f f g^-1'; 'eps' for the empty word")
    p.set_defaults(run=run_words)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    # allow --format after the subcommand too
    argv = list(sys.argv[1:] if argv is None else argv)
    fmt = None
    for i, a in enumerate(argv):
        if a == "--format" and i + 1 < len(argv):
            fmt = argv[i + 1]
            del argv[i:i + 2]
            break
        if a.startswith("--format="):
            fmt = a.split("=", 1)[1]
            del argv[i]
            break
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_DIAG if e.code else EXIT_OK
    if fmt is not None:
        if fmt not in ("text", "json"):
            print(f"heq: bad --format {fmt!r}", file=sys.stderr)
            return EXIT_DIAG
        args.format = fmt
    try:
        return args.run(args)
    except UsageError as e:
        print(f"heq: {e}", file=sys.stderr)
        return EXIT_DIAG
    except (SolverError, AssertionError, RecursionError) as e:
        print(f"heq: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
