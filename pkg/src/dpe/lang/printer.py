"""Canonical pretty printer.  ``parse(pretty_print(p)) == p`` for every valid program."""

from __future__ import annotations

from . import ast as A
from .lexer import escape_string
from .parser import PRECEDENCE, UNARY_PREC

INDENT = "    "


def expr_str(e, parent_prec: int = 0) -> str:
    if isinstance(e, A.IntLit):
        if e.value == A.INT_MIN:
            s, prec = "-inf", UNARY_PREC
            return f"({s})" if prec < parent_prec else s
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.StrLit):
        return escape_string(e.value)
    if isinstance(e, A.ArrayLit):
        return "[" + ", ".join(expr_str(x) for x in e.elems) + "]"
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Index):
        return f"{expr_str(e.base, UNARY_PREC + 1)}[{expr_str(e.index)}]"
    if isinstance(e, A.Call):
        return f"{e.name}(" + ", ".join(expr_str(x) for x in e.args) + ")"
    if isinstance(e, A.Unary):
        inner = expr_str(e.operand, UNARY_PREC)
        # keep "- -x" and "-(-inf)" apart from "--"
        sep = " " if e.op == "-" and inner.startswith("-") else ""
        s = f"{e.op}{sep}{inner}"
        return f"({s})" if UNARY_PREC < parent_prec else s
    if isinstance(e, A.Binary):
        prec = PRECEDENCE[e.op]
        s = f"{expr_str(e.left, prec)} {e.op} {expr_str(e.right, prec + 1)}"
        return f"({s})" if prec < parent_prec else s
    raise TypeError(f"not an expression: {e!r}")


def simple_str(s: A.Stmt) -> str:
    """One-line rendering of a non-compound statement, without the semicolon."""
    if isinstance(s, A.Declare):
        if s.init is None:
            return f"{s.type} {s.name}"
        return f"{s.type} {s.name} = {expr_str(s.init)}"
    if isinstance(s, A.Assign):
        return f"{expr_str(s.target)} {s.op} {expr_str(s.value)}"
    if isinstance(s, A.CallStmt):
        return expr_str(s.call)
    if isinstance(s, A.Return):
        return "return" if s.value is None else f"return {expr_str(s.value)}"
    raise TypeError(f"not a simple statement: {s!r}")


def header_str(s: A.Stmt) -> str:
    """Statement text without nested blocks: the full line for simple statements."""
    if isinstance(s, A.If):
        return f"if ({expr_str(s.cond)})"
    if isinstance(s, A.While):
        return f"while ({expr_str(s.cond)})"
    if isinstance(s, A.For):
        return f"for ({simple_str(s.init)}; {expr_str(s.cond)}; {simple_str(s.update)})"
    if isinstance(s, A.ForEach):
        return f"for ({s.type} {s.name} : {expr_str(s.iterable)})"
    return simple_str(s) + ";"


def _block(stmts: list, depth: int, out: list) -> None:
    for s in stmts:
        _stmt(s, depth, out)


def _if(s: A.If, depth: int, out: list, lead: str) -> None:
    pad = INDENT * depth
    out.append(f"{lead}{header_str(s)} {{")
    _block(s.then, depth + 1, out)
    if len(s.orelse) == 1 and isinstance(s.orelse[0], A.If):
        _if(s.orelse[0], depth, out, lead=f"{pad}}} else ")
    elif s.orelse:
        out.append(f"{pad}}} else {{")
        _block(s.orelse, depth + 1, out)
        out.append(f"{pad}}}")
    else:
        out.append(f"{pad}}}")


def _stmt(s: A.Stmt, depth: int, out: list) -> None:
    pad = INDENT * depth
    if isinstance(s, A.If):
        _if(s, depth, out, pad)
    elif isinstance(s, (A.While, A.For, A.ForEach)):
        out.append(f"{pad}{header_str(s)} {{")
        _block(s.body, depth + 1, out)
        out.append(f"{pad}}}")
    else:
        out.append(f"{pad}{simple_str(s)};")


def stmt_str(s: A.Stmt, depth: int = 0) -> str:
    out: list = []
    _stmt(s, depth, out)
    return "\n".join(out)


def pretty_print(prog: A.Program) -> str:
    params = ", ".join(("const " if p.read_only else "") + f"{p.type} {p.name}" for p in prog.params)
    out = [f"fn {prog.name}({params}) {{"]
    _block(prog.body, 1, out)
    out.append("}")
    return "\n".join(out) + "\n"
