"""AST node classes for MiniImp.

Nodes are plain dataclasses.  Structural equality ignores statement ids and
source positions, so two parses of the same canonical text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

TYPES = ("int", "bool", "str", "int[]")


# ---------------------------------------------------------------- expressions


@dataclass
class IntLit:
    value: int


@dataclass
class BoolLit:
    value: bool


@dataclass
class StrLit:
    value: str


@dataclass
class ArrayLit:
    elems: list


@dataclass
class Var:
    name: str


@dataclass
class Index:
    base: "Expr"
    index: "Expr"


@dataclass
class Call:
    name: str
    args: list


@dataclass
class Unary:
    op: str
    operand: "Expr"


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, BoolLit, StrLit, ArrayLit, Var, Index, Call, Unary, Binary]


# ----------------------------------------------------------------- statements


@dataclass
class Stmt:
    sid: int = field(default=-1, compare=False, repr=False, kw_only=True)
    line: int = field(default=0, compare=False, repr=False, kw_only=True)
    col: int = field(default=0, compare=False, repr=False, kw_only=True)


@dataclass
class Declare(Stmt):
    type: str
    name: str
    init: Optional[Expr] = None


@dataclass
class Assign(Stmt):
    target: Union[Var, Index]
    op: str
    value: Expr


@dataclass
class If(Stmt):
    cond: Expr
    then: list
    orelse: list = field(default_factory=list)


@dataclass
class While(Stmt):
    cond: Expr
    body: list


@dataclass
class For(Stmt):
    init: Stmt
    cond: Expr
    update: Stmt
    body: list


@dataclass
class ForEach(Stmt):
    type: str
    name: str
    iterable: Expr
    body: list


@dataclass
class CallStmt(Stmt):
    call: Call


@dataclass
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass
class Param:
    type: str
    name: str
    read_only: bool = False


@dataclass
class Program:
    name: str
    params: list
    body: list
    spans: dict = field(default_factory=dict, compare=False, repr=False)

    def statements(self) -> Iterator[Stmt]:
        """All statements in pre-order (loop headers before their bodies)."""
        return iter_stmts(self.body)

    def stmt_by_id(self) -> dict:
        return {s.sid: s for s in self.statements()}

    def readonly_params(self) -> set:
        return {p.name for p in self.params if p.read_only}


BLOCK_FIELDS = {
    If: ("then", "orelse"),
    While: ("body",),
    For: ("body",),
    ForEach: ("body",),
}


def child_blocks(stmt: Stmt) -> list:
    """(field name, block) pairs of a compound statement."""
    return [(name, getattr(stmt, name)) for name in BLOCK_FIELDS.get(type(stmt), ())]


def header_stmts(stmt: Stmt) -> list:
    if isinstance(stmt, For):
        return [stmt.init, stmt.update]
    return []


def iter_stmts(block: list) -> Iterator[Stmt]:
    for s in block:
        yield s
        for h in header_stmts(s):
            yield h
        for _, sub in child_blocks(s):
            yield from iter_stmts(sub)


def number_statements(prog: Program) -> Program:
    """Assign pre-order statement ids in place and return the program."""
    for i, s in enumerate(prog.statements()):
        s.sid = i
    prog.spans = {s.sid: (s.line, s.col) for s in prog.statements()}
    return prog


def iter_exprs(e) -> Iterator:
    """Pre-order walk over an expression tree."""
    if e is None:
        return
    yield e
    if isinstance(e, (Index,)):
        yield from iter_exprs(e.base)
        yield from iter_exprs(e.index)
    elif isinstance(e, Call):
        for a in e.args:
            yield from iter_exprs(a)
    elif isinstance(e, ArrayLit):
        for a in e.elems:
            yield from iter_exprs(a)
    elif isinstance(e, Unary):
        yield from iter_exprs(e.operand)
    elif isinstance(e, Binary):
        yield from iter_exprs(e.left)
        yield from iter_exprs(e.right)


def vars_read(e) -> set:
    return {n.name for n in iter_exprs(e) if isinstance(n, Var)}


def stmt_exprs(s: Stmt) -> list:
    """Expressions owned directly by a statement (not by nested statements)."""
    if isinstance(s, Declare):
        return [s.init] if s.init is not None else []
    if isinstance(s, Assign):
        return [s.target, s.value]
    if isinstance(s, (If, While)):
        return [s.cond]
    if isinstance(s, For):
        return [s.cond]
    if isinstance(s, ForEach):
        return [s.iterable]
    if isinstance(s, CallStmt):
        return [s.call]
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    return []


def written_var(s: Stmt) -> Optional[str]:
    """Variable whose binding the statement changes, if any."""
    if isinstance(s, Declare):
        return s.name if s.init is not None else None
    if isinstance(s, Assign):
        t = s.target
        while isinstance(t, Index):
            t = t.base
        return t.name if isinstance(t, Var) else None
    if isinstance(s, ForEach):
        return s.name
    if isinstance(s, CallStmt) and s.call.name in ("append", "swap") and s.call.args:
        a = s.call.args[0]
        return a.name if isinstance(a, Var) else None
    return None
