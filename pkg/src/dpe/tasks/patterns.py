"""AST pattern helpers shared by the mutators and the diversifier."""

from __future__ import annotations

import copy
from typing import Callable, Iterable, Iterator

from ..edits import iter_block_positions, iter_paths
from ..lang import ast as A

MIRROR = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "==", "!=": "!="}


def expr_variants(e, fn: Callable) -> Iterator:
    """Copies of ``e`` in which exactly one subexpression ``n`` is replaced by one of ``fn(n)``."""
    for rep in fn(e) or ():
        yield rep
    if isinstance(e, A.Binary):
        for l in expr_variants(e.left, fn):
            yield A.Binary(e.op, l, copy.deepcopy(e.right))
        for r in expr_variants(e.right, fn):
            yield A.Binary(e.op, copy.deepcopy(e.left), r)
    elif isinstance(e, A.Unary):
        for o in expr_variants(e.operand, fn):
            yield A.Unary(e.op, o)
    elif isinstance(e, A.Index):
        for b in expr_variants(e.base, fn):
            yield A.Index(b, copy.deepcopy(e.index))
        for i in expr_variants(e.index, fn):
            yield A.Index(copy.deepcopy(e.base), i)
    elif isinstance(e, A.Call):
        for k, a in enumerate(e.args):
            for v in expr_variants(a, fn):
                args = copy.deepcopy(e.args)
                args[k] = v
                yield A.Call(e.name, args)
    elif isinstance(e, A.ArrayLit):
        for k, a in enumerate(e.elems):
            for v in expr_variants(a, fn):
                elems = copy.deepcopy(e.elems)
                elems[k] = v
                yield A.ArrayLit(elems)


def _blockless(s: A.Stmt) -> A.Stmt:
    """Shallow header copy with empty blocks (blocks are restored by header-only edits)."""
    new = copy.copy(s)
    for name, _ in A.child_blocks(s):
        setattr(new, name, [])
    return copy.deepcopy(new)


def stmt_variants(s: A.Stmt, fn: Callable, headers: bool = True) -> Iterator:
    """(new statement, header_only) for every single-subexpression rewrite of ``s``'s own expressions."""
    if isinstance(s, A.Declare) and s.init is not None:
        for v in expr_variants(s.init, fn):
            yield A.Declare(s.type, s.name, v), False
    elif isinstance(s, A.Assign):
        for v in expr_variants(s.value, fn):
            yield A.Assign(copy.deepcopy(s.target), s.op, v), False
        if isinstance(s.target, A.Index):
            for v in expr_variants(s.target.index, fn):
                yield A.Assign(A.Index(copy.deepcopy(s.target.base), v), s.op, copy.deepcopy(s.value)), False
    elif isinstance(s, A.CallStmt):
        for v in expr_variants(s.call, fn):
            if isinstance(v, A.Call):
                yield A.CallStmt(v), False
    elif isinstance(s, A.Return) and s.value is not None:
        for v in expr_variants(s.value, fn):
            yield A.Return(v), False
    elif not headers:
        return
    elif isinstance(s, (A.If, A.While)):
        for v in expr_variants(s.cond, fn):
            new = _blockless(s)
            new.cond = v
            yield new, True
    elif isinstance(s, A.For):
        for v in expr_variants(s.cond, fn):
            new = _blockless(s)
            new.cond = v
            yield new, True
        for field_name in ("init", "update"):
            for sub, _ in stmt_variants(getattr(s, field_name), fn):
                new = _blockless(s)
                setattr(new, field_name, sub)
                yield new, True
    elif isinstance(s, A.ForEach):
        for v in expr_variants(s.iterable, fn):
            new = _blockless(s)
            new.iterable = v
            yield new, True


def modify_sites(prog: A.Program, fn: Callable, where: Callable = None) -> list:
    """Site tuples for every expression rewrite ``fn`` on statements accepted by ``where(path, stmt)``."""
    out = []
    for path, s in iter_paths(prog):
        if where is not None and not where(path, s):
            continue
        for new, header in stmt_variants(s, fn):
            out.append(("modify", path, new, header))
    return out


# ------------------------------------------------------------------ program facts


def declared_types(prog: A.Program) -> dict:
    types = {p.name: p.type for p in prog.params}
    for s in prog.statements():
        if isinstance(s, A.Declare):
            types.setdefault(s.name, s.type)
        elif isinstance(s, A.ForEach):
            types.setdefault(s.name, s.type)
    return types


def all_names(prog: A.Program) -> set:
    names = set(declared_types(prog))
    for s in prog.statements():
        for e in A.stmt_exprs(s):
            names |= A.vars_read(e)
    return names


def contains_call(block: list, name: str) -> bool:
    for s in A.iter_stmts(block):
        for e in A.stmt_exprs(s):
            if any(isinstance(n, A.Call) and n.name == name for n in A.iter_exprs(e)):
                return True
    return False


def is_loop(s) -> bool:
    return isinstance(s, (A.While, A.For, A.ForEach))


def contains_loop(block: list) -> bool:
    return any(is_loop(s) for s in A.iter_stmts(block))


def loop_role(s: A.Stmt) -> str:
    """"inner" for loops with no nested loop and no print in their body, "outer" otherwise."""
    if contains_loop(s.body) or contains_call(s.body, "print"):
        return "outer"
    return "inner"


def enclosing(prog: A.Program, path: tuple) -> list:
    """Statements enclosing ``path``, outermost first."""
    from ..edits import get_stmt

    return [get_stmt(prog, path[:k]) for k in range(1, len(path))]


def printed_var(prog: A.Program):
    """Name of the variable passed to the last top-level print, if any."""
    name = None
    for s in prog.body:
        if isinstance(s, A.CallStmt) and s.call.name == "print" and isinstance(s.call.args[0], A.Var):
            name = s.call.args[0].name
    return name


def increments(s: A.Stmt, var: str = None, amount: int = 1, sign: str = "+") -> bool:
    """``s`` is ``v += amount`` or ``v = v + amount`` (``-`` with sign="-")."""
    if not isinstance(s, A.Assign) or not isinstance(s.target, A.Var):
        return False
    v = s.target.name
    if var is not None and v != var:
        return False
    if s.op == sign + "=":
        return s.value == A.IntLit(amount)
    if s.op == "=" and isinstance(s.value, A.Binary) and s.value.op == sign:
        return s.value.left == A.Var(v) and s.value.right == A.IntLit(amount)
    return False


def str_lits(e) -> list:
    return [n.value for n in A.iter_exprs(e) if isinstance(n, A.StrLit)]


def stmt_str_lits(s: A.Stmt) -> list:
    out = []
    for e in A.stmt_exprs(s):
        out += str_lits(e)
    return out


def insert_positions(prog: A.Program, where: Callable = None) -> Iterable:
    """(position path, block, enclosing-statement path) for every insertion point."""
    for prefix, fld, block in iter_block_positions(prog):
        for i in range(len(block) + 1):
            pos = prefix + ((fld, i),)
            if where is None or where(prefix, fld, i, block):
                yield pos


def cmp_with_literal(e):
    """(op, other expression, literal value) for comparisons against an int literal, normalised so
    the literal is on the right; None otherwise."""
    if not isinstance(e, A.Binary) or e.op not in MIRROR:
        return None
    if isinstance(e.right, A.IntLit):
        return e.op, e.left, e.right.value
    if isinstance(e.left, A.IntLit):
        return MIRROR[e.op], e.right, e.left.value
    return None


def with_literal(e: A.Binary, value: int) -> A.Binary:
    if isinstance(e.right, A.IntLit):
        return A.Binary(e.op, copy.deepcopy(e.left), A.IntLit(value))
    return A.Binary(e.op, A.IntLit(value), copy.deepcopy(e.right))
