"""Instrumented tree-walking interpreter.

Every statement that changes a variable binding is followed by a write event
carrying the post-write value, as if a ``write(var)`` call had been inserted
right after it.  Read-only parameters can never be written and so never show
up in a trace.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import ast as A
from .errors import BudgetExceeded, LangError, MiniRuntimeError

DEFAULT_BUDGET = 10_000


class _Bottom:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "BOTTOM"


BOTTOM = _Bottom()


class Verdict(str, enum.Enum):
    COMPLETED = "Completed"
    RUNTIME_ERROR = "RuntimeError"
    BUDGET_EXCEEDED = "BudgetExceeded"


@dataclass(frozen=True)
class WriteEvent:
    seq: int
    var: str
    value: object  # int | bool | str | tuple[int, ...]
    stmt_id: int


@dataclass
class ExecResult:
    output: str
    trace: list
    verdict: Verdict
    error: str = ""
    steps: int = 0
    executed: list = field(default_factory=list)
    returned: object = None
    final_values: dict = field(default_factory=dict)
    declared: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict is Verdict.COMPLETED


def display(v) -> str:
    """Text used by print and string concatenation."""
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return "-inf" if v == A.INT_MIN else str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(display(x) for x in v) + "]"
    return v


def snapshot(v):
    return tuple(v) if isinstance(v, list) else v


def _is_int(v) -> bool:
    return type(v) is int


def _type_ok(ty: str, v) -> bool:
    if ty == "int":
        return type(v) is int
    if ty == "bool":
        return type(v) is bool
    if ty == "str":
        return type(v) is str
    return isinstance(v, list)


def _check_range(v: int) -> int:
    if v < A.INT_MIN or v > A.INT_MAX:
        raise MiniRuntimeError("integer overflow")
    return v


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class Interpreter:
    """Executes one program once.  Create a fresh instance per run."""

    def __init__(
        self,
        prog: A.Program,
        budget: int = DEFAULT_BUDGET,
        record_executed: bool = False,
        on_write: Optional[Callable] = None,
        trace: bool = True,
    ):
        if budget <= 0:
            raise ValueError("step budget must be positive")
        self.prog = prog
        self.budget = budget
        self.record_executed = record_executed
        self.on_write = on_write
        self.tracing = trace
        self.env: dict = {}
        self.types: dict = {}
        self.scopes: list = []
        self.events: list = []
        self.executed: list = []
        self.out: list = []
        self.steps = 0
        self.final_values: dict = {}
        self.declared_order: list = []

    # -- bookkeeping
    def tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise BudgetExceeded(f"step budget of {self.budget} exceeded")

    def bind(self, name: str, value) -> None:
        ty = self.types[name]
        if not _type_ok(ty, value):
            raise MiniRuntimeError(f"cannot store {display(value)!r} in {ty} variable {name!r}")
        self.env[name] = value
        self.final_values[name] = snapshot(value)

    def emit(self, name: str, stmt: A.Stmt) -> None:
        if not self.tracing:
            return
        ev = WriteEvent(len(self.events), name, snapshot(self.env[name]), stmt.sid)
        self.events.append(ev)
        if self.on_write is not None:
            self.on_write(ev, self)

    def declare(self, name: str, ty: str) -> None:
        self.types[name] = ty
        self.env[name] = BOTTOM
        self.scopes[-1].append(name)
        if name not in self.declared_order:
            self.declared_order.append(name)

    def lookup(self, name: str):
        v = self.env[name]
        if v is BOTTOM:
            raise MiniRuntimeError(f"read of unassigned variable {name!r}")
        return v

    # -- entry point
    def run(self, inputs: list) -> ExecResult:
        prog = self.prog
        if len(inputs) != len(prog.params):
            raise ValueError(f"{prog.name} expects {len(prog.params)} input(s), got {len(inputs)}")
        self.scopes.append([])
        for p, v in zip(prog.params, inputs):
            if isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, list):
                v = list(v)
            if not _type_ok(p.type, v):
                raise ValueError(f"input for {p.name} is not a {p.type}")
            self.types[p.name] = p.type
            self.env[p.name] = v
        verdict, error, returned = Verdict.COMPLETED, "", None
        try:
            self.block(prog.body)
        except _Return as r:
            returned = r.value
        except BudgetExceeded as e:
            verdict, error = Verdict.BUDGET_EXCEEDED, str(e)
        except MiniRuntimeError as e:
            verdict, error = Verdict.RUNTIME_ERROR, str(e)
        except RecursionError:
            verdict, error = Verdict.RUNTIME_ERROR, "expression nesting too deep"
        return ExecResult(
            output="".join(self.out),
            trace=self.events,
            verdict=verdict,
            error=error,
            steps=self.steps,
            executed=self.executed,
            returned=snapshot(returned),
            final_values=dict(self.final_values),
            declared=[n for n in self.declared_order],
        )

    # -- statements
    def block(self, stmts: list) -> None:
        self.scopes.append([])
        try:
            for s in stmts:
                self.stmt(s)
        finally:
            for name in self.scopes.pop():
                self.env.pop(name, None)

    def stmt(self, s: A.Stmt) -> None:
        self.tick()
        if self.record_executed:
            self.executed.append(s.sid)
        kind = type(s)
        if kind is A.Assign:
            self.assign(s)
        elif kind is A.Declare:
            self.declare(s.name, s.type)
            if s.init is not None:
                v = self.eval(s.init)
                self.bind(s.name, list(v) if isinstance(v, list) else v)
                self.emit(s.name, s)
        elif kind is A.If:
            if self.cond(s.cond):
                self.block(s.then)
            elif s.orelse:
                self.block(s.orelse)
        elif kind is A.While:
            while self.cond(s.cond):
                self.block(s.body)
                self.tick()
                if self.record_executed:
                    self.executed.append(s.sid)
        elif kind is A.For:
            self.scopes.append([])
            try:
                self.stmt(s.init)
                while self.cond(s.cond):
                    self.block(s.body)
                    self.stmt(s.update)
                    self.tick()
                    if self.record_executed:
                        self.executed.append(s.sid)
            finally:
                for name in self.scopes.pop():
                    self.env.pop(name, None)
        elif kind is A.ForEach:
            seq = self.eval(s.iterable)
            if not isinstance(seq, (list, str)):
                raise MiniRuntimeError("for-each needs an array or string")
            items = list(seq)
            self.scopes.append([])
            try:
                self.declare(s.name, s.type)
                for item in items:
                    self.bind(s.name, item)
                    self.emit(s.name, s)
                    self.block(s.body)
                    self.tick()
                    if self.record_executed:
                        self.executed.append(s.sid)
            finally:
                for name in self.scopes.pop():
                    self.env.pop(name, None)
        elif kind is A.CallStmt:
            self.call(s.call, s)
        elif kind is A.Return:
            raise _Return(None if s.value is None else self.eval(s.value))
        else:
            raise TypeError(f"unknown statement {s!r}")

    def cond(self, e) -> bool:
        v = self.eval(e)
        if type(v) is not bool:
            raise MiniRuntimeError("condition is not a bool")
        return v

    def assign(self, s: A.Assign) -> None:
        t = s.target
        if type(t) is A.Var:
            name = t.name
            if s.op == "=":
                v = self.eval(s.value)
                v = list(v) if isinstance(v, list) else v
            else:
                v = self.binop(s.op[0], self.lookup(name), self.eval(s.value))
            self.bind(name, v)
            self.emit(name, s)
            return
        # element write: A[i] op= e
        base = t.base
        if type(base) is not A.Var:
            raise MiniRuntimeError("only array variables can be indexed for writing")
        arr = self.lookup(base.name)
        if not isinstance(arr, list):
            raise MiniRuntimeError(f"{base.name!r} is not an array")
        i = self.eval(t.index)
        self._bounds(arr, i)
        if s.op == "=":
            v = self.eval(s.value)
        else:
            v = self.binop(s.op[0], arr[i], self.eval(s.value))
        if type(v) is not int:
            raise MiniRuntimeError("arrays hold ints only")
        arr[i] = v
        self.final_values[base.name] = tuple(arr)
        self.emit(base.name, s)

    @staticmethod
    def _bounds(seq, i) -> None:
        if type(i) is not int:
            raise MiniRuntimeError("index is not an int")
        if i < 0 or i >= len(seq):
            raise MiniRuntimeError(f"index {i} out of bounds for length {len(seq)}")

    def call(self, c: A.Call, s: Optional[A.Stmt] = None):
        name = c.name
        if name == "len":
            v = self.eval(c.args[0])
            if not isinstance(v, (list, str)):
                raise MiniRuntimeError("len needs an array or string")
            return len(v)
        if name == "print":
            self.out.append(display(self.eval(c.args[0])) + "\n")
            return None
        arr_name = c.args[0].name
        arr = self.lookup(arr_name)
        if not isinstance(arr, list):
            raise MiniRuntimeError(f"{name} needs an int[] variable")
        if name == "append":
            v = self.eval(c.args[1])
            if type(v) is not int:
                raise MiniRuntimeError("arrays hold ints only")
            arr.append(v)
        elif name == "swap":
            i, j = self.eval(c.args[1]), self.eval(c.args[2])
            self._bounds(arr, i)
            self._bounds(arr, j)
            arr[i], arr[j] = arr[j], arr[i]
        self.final_values[arr_name] = tuple(arr)
        self.emit(arr_name, s)
        return None

    # -- expressions
    def eval(self, e):
        kind = type(e)
        if kind is A.Var:
            return self.lookup(e.name)
        if kind is A.IntLit or kind is A.StrLit or kind is A.BoolLit:
            return e.value
        if kind is A.Binary:
            op = e.op
            if op == "&&":
                return self.cond(e.left) and self.cond(e.right)
            if op == "||":
                return self.cond(e.left) or self.cond(e.right)
            return self.binop(op, self.eval(e.left), self.eval(e.right))
        if kind is A.Index:
            seq = self.eval(e.base)
            i = self.eval(e.index)
            if not isinstance(seq, (list, str)):
                raise MiniRuntimeError("only arrays and strings can be indexed")
            self._bounds(seq, i)
            return seq[i]
        if kind is A.Unary:
            v = self.eval(e.operand)
            if e.op == "-":
                if type(v) is not int:
                    raise MiniRuntimeError("unary minus needs an int")
                return _check_range(-v)
            if type(v) is not bool:
                raise MiniRuntimeError("! needs a bool")
            return not v
        if kind is A.Call:
            return self.call(e)
        if kind is A.ArrayLit:
            vals = [self.eval(x) for x in e.elems]
            if any(type(v) is not int for v in vals):
                raise MiniRuntimeError("arrays hold ints only")
            return vals
        raise TypeError(f"unknown expression {e!r}")

    def binop(self, op: str, a, b):
        ta, tb = type(a), type(b)
        if op == "+":
            if ta is str or tb is str:
                return display(a) + display(b)
            if ta is int and tb is int:
                return _check_range(a + b)
            raise MiniRuntimeError("bad operands for +")
        if op in ("==", "!="):
            same = (ta is tb) or (isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)))
            if not same:
                raise MiniRuntimeError(f"cannot compare {display(a)!r} and {display(b)!r}")
            eq = list(a) == list(b) if isinstance(a, (list, tuple)) else a == b
            return eq if op == "==" else not eq
        if op in ("<", "<=", ">", ">="):
            if not ((ta is int and tb is int) or (ta is str and tb is str)):
                raise MiniRuntimeError(f"bad operands for {op}")
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            return a >= b
        if ta is not int or tb is not int:
            raise MiniRuntimeError(f"bad operands for {op}")
        if op == "-":
            return _check_range(a - b)
        if op == "*":
            return _check_range(a * b)
        if op in ("/", "%"):
            if b == 0:
                raise MiniRuntimeError("division by zero")
            q = abs(a) // abs(b)
            if (a < 0) != (b < 0):
                q = -q
            if op == "/":
                return _check_range(q)
            return a - q * b
        if op == "<<":
            if b < 0 or b > 63:
                raise MiniRuntimeError("bad shift count")
            return _check_range(a << b)
        if op == ">>":
            if b < 0:
                raise MiniRuntimeError("bad shift count")
            return a >> min(b, 63)
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        raise MiniRuntimeError(f"unknown operator {op}")


def execute(
    prog: A.Program,
    inputs: Optional[list] = None,
    budget: int = DEFAULT_BUDGET,
    record_executed: bool = False,
    on_write: Optional[Callable] = None,
    trace: bool = True,
) -> ExecResult:
    """Run ``prog`` on ``inputs``; errors inside the program become verdicts, not exceptions."""
    return Interpreter(prog, budget, record_executed, on_write, trace).run(list(inputs or []))


def replay(trace: list) -> dict:
    """Apply write events in seq order to an empty environment."""
    env: dict = {}
    for ev in sorted(trace, key=lambda e: e.seq):
        env[ev.var] = ev.value
    return env


__all__ = ["BOTTOM", "DEFAULT_BUDGET", "ExecResult", "Interpreter", "LangError", "Verdict",
           "WriteEvent", "display", "execute", "replay"]
