"""Print the base-2 digits of a non-negative integer."""

from __future__ import annotations

import copy

from ..edits import iter_paths
from ..lang import ast as A
from . import patterns as P
from .base import Mutator, Task, TestCase, load_program, output_of

CLASSES = [
    "miss_zero",
    "decimal_digits",
    "shift_mistake",
    "add_instead_of_concat",
    "miss_msb",
]
ZERO, BYTES, SHIFT, ADD, MSB = range(5)

REFERENCES = ["bin_a.mini", "bin_b.mini", "bin_c.mini", "bin_d.mini"]

SUITE_INPUTS = [0, 1, 2, 3, 4, 5, 6, 7, 8, 13, 16, 31, 64, 100, 255]
TRACE_INPUTS = [0, 6, 13]


def _tests_zero(e) -> bool:
    c = P.cmp_with_literal(e)
    if c is not None and c[0] == "==" and c[2] == 0:
        return True
    return False


# ------------------------------------------------------------------ site enumerators


def _sites_zero(prog):
    return [("delete", path, None, False) for path, s in iter_paths(prog)
            if isinstance(s, A.If) and not s.orelse and _tests_zero(s.cond)]


def _digit_expr(n) -> bool:
    return isinstance(n, A.Binary) and (
        (n.op == "%" and n.right == A.IntLit(2)) or (n.op == "&" and n.right == A.IntLit(1))
    )


def _radix(n):
    if _digit_expr(n):
        alts = (10, 8, 16) if n.op == "%" else (255, 15, 3)
        for v in alts:
            yield A.Binary(n.op, copy.deepcopy(n.left), A.IntLit(v))


def _sites_bytes(prog):
    def digit_stmt(path, s):
        return not isinstance(s, (A.If, A.While, A.For, A.ForEach))

    return P.modify_sites(prog, _radix, digit_stmt)


def _halving(n):
    if isinstance(n, A.Binary) and n.op == "/" and n.right == A.IntLit(2):
        yield A.Binary("/", copy.deepcopy(n.left), A.IntLit(4))
        yield A.Binary("/", copy.deepcopy(n.left), A.IntLit(3))
        yield A.Binary(">>", copy.deepcopy(n.left), A.IntLit(2))
    if isinstance(n, A.Binary) and n.op == ">>" and n.right == A.IntLit(1):
        yield A.Binary(">>", copy.deepcopy(n.left), A.IntLit(2))
        yield A.Binary("/", copy.deepcopy(n.left), A.IntLit(3))
    if isinstance(n, A.Binary) and n.op == "*" and n.right == A.IntLit(2):
        yield A.Binary("*", copy.deepcopy(n.left), A.IntLit(4))


def _sites_shift(prog):
    def assign_only(path, s):
        return isinstance(s, A.Assign) and isinstance(s.target, A.Var)

    return P.modify_sites(prog, _halving, assign_only)


def _sites_add(prog):
    out = []
    for path, s in iter_paths(prog):
        if isinstance(s, A.Declare) and s.type == "str" and s.init == A.StrLit(""):
            out.append(("modify", path, A.Declare("int", s.name, A.IntLit(0)), False))
    return out


def _msb(n):
    c = P.cmp_with_literal(n)
    if c is not None and c[0] == ">" and c[2] == 0:
        yield P.with_literal(n, 1)
    if c is not None and c[0] == ">=" and c[2] == 1:
        yield P.with_literal(n, 2)


def _sites_msb(prog):
    out = []
    for path, s in iter_paths(prog):
        if isinstance(s, A.While):
            for v in P.expr_variants(s.cond, _msb):
                new = P._blockless(s)
                new.cond = v
                out.append(("modify", path, new, True))
    return out


MUTATORS = [
    Mutator("bin.miss_zero", ZERO, _sites_zero),
    Mutator("bin.radix", BYTES, _sites_bytes),
    Mutator("bin.shift", SHIFT, _sites_shift),
    Mutator("bin.add", ADD, _sites_add),
    Mutator("bin.msb", MSB, _sites_msb),
]


# ------------------------------------------------------------------ behaviour classes


def behavior(task, results) -> int | None:
    ns = [tc.inputs[0] for tc in task.suite]
    outs = [output_of(r) for r in results]
    exp = [tc.expected for tc in task.suite]
    ok = [o == e for o, e in zip(outs, exp)]
    pos = [i for i, n in enumerate(ns) if n >= 1]
    if all(ok[i] for i in pos):
        return ZERO
    if all(outs[i] == format(ns[i], "b")[1:] + "\n" for i in pos):
        return MSB
    if all(outs[i] == f"{bin(ns[i]).count('1')}\n" for i in pos):
        return ADD
    if any(o is None for o in outs):
        return None
    if all(set(o.strip()) <= {"0", "1"} for o in outs):
        return SHIFT
    return BYTES


def make_task() -> Task:
    refs = [(name.removesuffix(".mini"), load_program(name)) for name in REFERENCES]
    return Task(
        id="BinaryDigits",
        entry="binary",
        references=refs,
        suite=[TestCase((n,), format(n, "b") + "\n") for n in SUITE_INPUTS],
        trace_inputs=[(n,) for n in TRACE_INPUTS],
        classes=list(CLASSES),
        mutators=list(MUTATORS),
        behavior=behavior,
    )
