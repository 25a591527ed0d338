"""Print an 8x8 chessboard of X and O, starting with X."""

from __future__ import annotations

import copy

from ..edits import iter_paths
from ..lang import ast as A
from . import patterns as P
from .base import Mutator, Task, TestCase, load_program, output_of

ROW0 = "XOXOXOXO"
ROW1 = "OXOXOXOX"
EXPECTED = "".join((ROW0 if r % 2 == 0 else ROW1) + "\n" for r in range(8))

CLASSES = [
    "misprint",
    "switched_rows",
    "no_switch",
    "single_char",
    "extra_chars",
    "wrong_rows",
    "wrong_cols",
    "wrong_format",
]
MISPRINT, SWITCHED, NO_SWITCH, SINGLE, EXTRA, ROWS, COLS, FORMAT = range(8)

REFERENCES = ["chess_a.mini", "chess_b.mini", "chess_c.mini", "chess_d.mini", "chess_e.mini"]


def _is_xo(s: str) -> bool:
    return bool(s) and set(s) <= {"X", "O"}


def _parity(e) -> bool:
    return isinstance(e, A.Binary) and e.op == "%" and e.right == A.IntLit(2)


def _has_parity(e) -> bool:
    return any(_parity(n) for n in A.iter_exprs(e))


# ------------------------------------------------------------------ rewrites


def _misprint(n):
    if isinstance(n, A.StrLit) and ("X" in n.value or "O" in n.value) and set(n.value) <= {"X", "O", " "}:
        seen = {n.value}
        for v in (n.value.replace("O", "0"), n.value.replace("O", "o"), n.value.replace("X", "x"), n.value.lower()):
            if v not in seen:
                seen.add(v)
                yield A.StrLit(v)


def _parity_flip(n):
    if isinstance(n, A.Binary) and n.op in ("==", "!="):
        for side, other in (("right", n.left), ("left", n.right)):
            lit = getattr(n, side)
            if _parity(other) and isinstance(lit, A.IntLit) and lit.value in (0, 1):
                new = copy.deepcopy(n)
                setattr(new, side, A.IntLit(1 - lit.value))
                yield new


def _parity_shift(n):
    if _parity(n):
        yield A.Binary("%", A.Binary("+", copy.deepcopy(n.left), A.IntLit(1)), A.IntLit(2))


def _parity_drop(n):
    if _parity(n) and isinstance(n.left, A.Binary) and n.left.op == "+":
        yield A.Binary("%", copy.deepcopy(n.left.left), A.IntLit(2))
        yield A.Binary("%", copy.deepcopy(n.left.right), A.IntLit(2))


def _single_char(n):
    if isinstance(n, A.StrLit) and _is_xo(n.value):
        for c in "XO":
            v = c * len(n.value)
            if v != n.value:
                yield A.StrLit(v)


def _extra_char(n):
    if isinstance(n, A.StrLit) and _is_xo(n.value):
        yield A.StrLit(n.value + " ")
        yield A.StrLit(" " + n.value)


def _newline_change(n):
    if isinstance(n, A.StrLit) and n.value == "\n":
        yield A.StrLit("")
        yield A.StrLit("\n\n")


def _bound_change(n):
    c = P.cmp_with_literal(n)
    if c is None or c[0] not in ("<", "<=", ">", ">="):
        return
    lit = c[2]
    for d in (-1, 1):
        yield P.with_literal(n, lit + d)
    flip = {"<": "<=", "<=": "<", ">": ">=", ">=": ">"}
    yield A.Binary(flip[n.op], copy.deepcopy(n.left), copy.deepcopy(n.right))


# ------------------------------------------------------------------ site enumerators


def _sites_misprint(prog):
    return P.modify_sites(prog, _misprint)


def _sites_switched(prog):
    out = P.modify_sites(prog, _parity_flip, lambda p, s: isinstance(s, A.If))
    out += P.modify_sites(prog, _parity_shift)
    for path, s in iter_paths(prog):
        if isinstance(s, A.Declare) and s.type == "bool" and isinstance(s.init, A.BoolLit):
            out.append(("modify", path, A.Declare("bool", s.name, A.BoolLit(not s.init.value)), False))
        if isinstance(s, A.Declare) and isinstance(s.init, A.StrLit) and s.init.value in ("XO", "OX"):
            out.append(("modify", path, A.Declare(s.type, s.name, A.StrLit(s.init.value[::-1])), False))
    return out


def _is_toggle(s) -> bool:
    return (
        isinstance(s, A.Assign)
        and isinstance(s.target, A.Var)
        and s.op == "="
        and s.value == A.Unary("!", A.Var(s.target.name))
    )


def _sites_no_switch(prog):
    out = P.modify_sites(prog, _parity_drop)
    for path, s in iter_paths(prog):
        if _is_toggle(s):
            out.append(("delete", path, None, False))
            continue
        if isinstance(s, A.Assign) and isinstance(s.value, A.Var) and len(path) > 1:
            parent = P.enclosing(prog, path)[-1]
            if isinstance(parent, A.If) and _has_parity(parent.cond):
                out.append(("delete", path, None, False))
    return out


def _sites_single(prog):
    out = P.modify_sites(prog, _single_char)
    types = P.declared_types(prog)
    for path, s in iter_paths(prog):
        if not isinstance(s, A.If):
            continue
        cond = s.cond.operand if isinstance(s.cond, A.Unary) else s.cond
        bool_var = isinstance(cond, A.Var) and types.get(cond.name) == "bool"
        if _has_parity(s.cond) or bool_var:
            for b in (True, False):
                new = P._blockless(s)
                new.cond = A.BoolLit(b)
                out.append(("modify", path, new, True))
    return out


def _after_inner_loops(prog, text: str):
    """Insert ``v += text`` right after every inner loop, for each string variable it writes."""
    types = P.declared_types(prog)
    out = []
    for path, s in iter_paths(prog):
        if not P.is_loop(s) or P.loop_role(s) != "inner":
            continue
        written = []
        for sub in A.iter_stmts(s.body):
            v = A.written_var(sub)
            if v is not None and types.get(v) == "str" and v not in written:
                written.append(v)
        pos = path[:-1] + ((path[-1][0], path[-1][1] + 1),)
        for v in written:
            out.append(("insert", pos, A.Assign(A.Var(v), "+=", A.StrLit(text)), False))
    return out


def _sites_extra(prog):
    return P.modify_sites(prog, _extra_char) + _after_inner_loops(prog, " ")


def _loop_bound_sites(prog, role: str):
    out = []
    for path, s in iter_paths(prog):
        if isinstance(s, (A.For, A.While)) and P.loop_role(s) == role:
            for v in P.expr_variants(s.cond, _bound_change):
                new = P._blockless(s)
                new.cond = v
                out.append(("modify", path, new, True))
    return out


def _sites_rows(prog):
    return _loop_bound_sites(prog, "outer")


def _sites_cols(prog):
    return _loop_bound_sites(prog, "inner")


def _appends_newline(s) -> bool:
    return isinstance(s, A.Assign) and "\n" in P.stmt_str_lits(s)


def _sites_format(prog):
    out = _after_inner_loops(prog, "\n")
    out += P.modify_sites(prog, _newline_change)
    for path, s in iter_paths(prog):
        if isinstance(s, A.Declare) and s.type == "str" and s.init == A.StrLit(""):
            out.append(("modify", path, A.Declare("str", s.name, A.StrLit("\n")), False))
        if isinstance(s, A.If) and not _has_parity(s.cond):
            for v in P.expr_variants(s.cond, _bound_change):
                new = P._blockless(s)
                new.cond = v
                out.append(("modify", path, new, True))
            if s.then and not s.orelse and all(_appends_newline(t) for t in s.then):
                out.append(("delete", path, None, False))
    return out


MUTATORS = [
    Mutator("chess.misprint", MISPRINT, _sites_misprint),
    Mutator("chess.switched", SWITCHED, _sites_switched),
    Mutator("chess.no_switch", NO_SWITCH, _sites_no_switch),
    Mutator("chess.single_char", SINGLE, _sites_single),
    Mutator("chess.extra_chars", EXTRA, _sites_extra),
    Mutator("chess.wrong_rows", ROWS, _sites_rows),
    Mutator("chess.wrong_cols", COLS, _sites_cols),
    Mutator("chess.wrong_format", FORMAT, _sites_format),
]


# ------------------------------------------------------------------ behaviour classes


def _lines(out: str) -> list:
    lines = out.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def _alternating(lines: list, width: int = 8) -> bool:
    for r, line in enumerate(lines):
        want = "".join("XO"[(r + c) % 2] for c in range(width))
        if line != want:
            return False
    return True


def behavior(task, results) -> int | None:
    """Error class whose observable symptom the board output shows, None if ambiguous."""
    out = output_of(results[0])
    if out is None:
        return None
    fixed = out.replace("0", "O").replace("o", "O").replace("x", "X")
    if fixed != out and fixed == EXPECTED:
        return MISPRINT
    flat = EXPECTED.replace("\n", "")
    if out.replace("\n", "") == flat:
        return FORMAT
    lines = _lines(out)
    if len(lines) == 8 and all("".join(ch for ch in l if ch in "XO") == (ROW0 if r % 2 == 0 else ROW1)
                               for r, l in enumerate(lines)):
        return EXTRA
    xo = [ch for ch in out if ch in "XO"]
    if len(xo) >= 8 and len(set(xo)) == 1 and set(out) <= {"X", "O", "\n"}:
        return SINGLE
    if lines == [ROW1 if r % 2 == 0 else ROW0 for r in range(8)]:
        return SWITCHED
    if len(lines) == 8 and (set(lines) == {ROW0} or set(lines) == {ROW1}):
        return NO_SWITCH
    if lines and len(lines) != 8 and "" not in lines and _alternating(lines):
        return ROWS
    if len(lines) == 8 and len({len(l) for l in lines}) == 1 and len(lines[0]) not in (0, 8) \
            and _alternating(lines, len(lines[0])):
        return COLS
    return None


def make_task() -> Task:
    refs = [(name.removesuffix(".mini"), load_program(name)) for name in REFERENCES]
    return Task(
        id="Chessboard",
        entry="chessboard",
        references=refs,
        suite=[TestCase((), EXPECTED)],
        trace_inputs=[()],
        classes=list(CLASSES),
        mutators=list(MUTATORS),
        behavior=behavior,
    )
