"""Maximum nesting depth of parentheses in a string; unmatched ')' are ignored."""

from __future__ import annotations

import copy

from ..edits import iter_paths
from ..lang import ast as A
from . import patterns as P
from .base import Mutator, Task, TestCase, load_program, output_of

CLASSES = [
    "empty_corner_case",
    "symbol_confusion",
    "unmatched_mishandling",
    "count_parens",
    "assume_nested",
    "miscount_other_chars",
]
EMPTY, SYMBOL, UNMATCHED, COUNT, NESTED, IGNORED = range(6)

REFERENCES = ["paren_a.mini", "paren_b.mini", "paren_c.mini", "paren_d.mini"]

SUITE_INPUTS = [
    "", "()", "(())", "(()())", "(()())((", "((()))", "()()()", ")(", "())(()", "((", "))",
    "x(y(z))w", "(a)(b(c))", "abc", "(((a)))b)",
]
TRACE_INPUTS = ["(()())((", "", "x(y(z))w"]
FRESH_NAMES = ("first", "head", "c0", "lead", "ch0")


def depth(s: str) -> int:
    cur = best = 0
    for ch in s:
        if ch == "(":
            cur += 1
            best = max(best, cur)
        elif ch == ")" and cur > 0:
            cur -= 1
    return best


def balanced(s: str) -> bool:
    cur = 0
    for ch in s:
        if ch == "(":
            cur += 1
        elif ch == ")":
            cur -= 1
            if cur < 0:
                return False
    return cur == 0


# ------------------------------------------------------------------ program facts


def _counter(prog):
    """Variable incremented under a condition that tests for '('."""
    for path, s in iter_paths(prog):
        if not P.increments(s):
            continue
        for outer in P.enclosing(prog, path):
            if isinstance(outer, A.If) and "(" in P.str_lits(outer.cond):
                return s.target.name
    return None


def _is_decrement(s, counter) -> bool:
    return counter is not None and P.increments(s, counter, 1, "-")


# ------------------------------------------------------------------ site enumerators


def _sites_empty(prog):
    if not prog.params:
        return []
    s = prog.params[0].name
    used = P.all_names(prog)
    name = next((n for n in FRESH_NAMES if n not in used), None)
    if name is None:
        return []
    out = []
    for i, st in enumerate(prog.body + [None]):
        stmt = A.Declare("str", name, A.Index(A.Var(s), A.IntLit(0)))
        out.append(("insert", (("body", i),), stmt, False))
        if st is not None and P.is_loop(st):
            break
    return out


def _symbol(n):
    if isinstance(n, A.StrLit) and n.value == "(":
        for v in ("[", "{", "<"):
            yield A.StrLit(v)


def _sites_symbol(prog):
    return P.modify_sites(prog, _symbol)


def _sites_unmatched(prog):
    counter, best = _counter(prog), P.printed_var(prog)
    if counter is None or best is None:
        return []
    idx = max(i for i, s in enumerate(prog.body) if isinstance(s, A.CallStmt) and s.call.name == "print")
    out = []
    for op in ("!=", ">"):
        for val in (0, -1):
            stmt = A.If(A.Binary(op, A.Var(counter), A.IntLit(0)), [A.Assign(A.Var(best), "=", A.IntLit(val))], [])
            out.append(("insert", (("body", idx),), stmt, False))
    return out


def _sites_count(prog):
    counter = _counter(prog)
    out = []
    for path, s in iter_paths(prog):
        if _is_decrement(s, counter):
            if s.op == "-=":
                new = A.Assign(A.Var(counter), "+=", A.IntLit(1))
            else:
                new = A.Assign(A.Var(counter), "=", A.Binary("+", A.Var(counter), A.IntLit(1)))
            out.append(("modify", path, new, False))
    return out


def _sites_nested(prog):
    counter = _counter(prog)
    return [("delete", path, None, False) for path, s in iter_paths(prog) if _is_decrement(s, counter)]


def _other_chars(n):
    if isinstance(n, A.Binary) and n.op == "==":
        for lit_side, other_side in (("right", "left"), ("left", "right")):
            lit = getattr(n, lit_side)
            if isinstance(lit, A.StrLit) and lit.value in ("(", ")"):
                new = copy.deepcopy(n)
                new.op = "!="
                setattr(new, lit_side, A.StrLit("(" if lit.value == ")" else ")"))
                yield new


def _sites_ignored(prog):
    return P.modify_sites(prog, _other_chars, lambda p, s: isinstance(s, (A.If, A.While)))


MUTATORS = [
    Mutator("paren.empty_case", EMPTY, _sites_empty),
    Mutator("paren.symbol", SYMBOL, _sites_symbol),
    Mutator("paren.unmatched", UNMATCHED, _sites_unmatched),
    Mutator("paren.count", COUNT, _sites_count),
    Mutator("paren.nested", NESTED, _sites_nested),
    Mutator("paren.ignored", IGNORED, _sites_ignored),
]


# ------------------------------------------------------------------ behaviour classes


def behavior(task, results) -> int | None:
    ins = [tc.inputs[0] for tc in task.suite]
    outs = [output_of(r) for r in results]
    exp = [tc.expected for tc in task.suite]
    ok = [o == e for o, e in zip(outs, exp)]
    if all(ok[i] for i, s in enumerate(ins) if s != "") and not all(ok):
        return EMPTY
    if any(o is None for o in outs):
        return None
    vals = []
    for o in outs:
        try:
            vals.append(int(o.strip()))
        except ValueError:
            return None
    if all(v == 0 for v in vals):
        return SYMBOL
    plain = [i for i, s in enumerate(ins) if set(s) <= {"(", ")"}]
    if all(ok[i] for i in plain):
        return IGNORED
    if all(ok[i] for i, s in enumerate(ins) if balanced(s)):
        return UNMATCHED
    if all(v == s.count("(") for v, s in zip(vals, ins)):
        return NESTED
    if any(v > s.count("(") for v, s in zip(vals, ins)):
        return COUNT
    return None


def make_task() -> Task:
    refs = [(name.removesuffix(".mini"), load_program(name)) for name in REFERENCES]
    return Task(
        id="CountParentheses",
        entry="depth",
        references=refs,
        suite=[TestCase((s,), f"{depth(s)}\n") for s in SUITE_INPUTS],
        trace_inputs=[(s,) for s in TRACE_INPUTS],
        classes=list(CLASSES),
        mutators=list(MUTATORS),
        behavior=behavior,
    )
