"""MiniImp: a small C-like imperative language with an instrumented interpreter."""

from . import ast
from .errors import (
    BudgetExceeded,
    CheckError,
    LangError,
    MiniRuntimeError,
    MiniSyntaxError,
    ReadOnlyWrite,
    Redeclaration,
    UndeclaredVariable,
)
from .interp import BOTTOM, DEFAULT_BUDGET, ExecResult, Verdict, WriteEvent, display, execute, replay
from .parser import parse
from .printer import expr_str, header_str, pretty_print, stmt_str

__all__ = [
    "BOTTOM", "DEFAULT_BUDGET", "BudgetExceeded", "CheckError", "ExecResult", "LangError",
    "MiniRuntimeError", "MiniSyntaxError", "ReadOnlyWrite", "Redeclaration", "UndeclaredVariable",
    "Verdict", "WriteEvent", "ast", "display", "execute", "expr_str", "header_str", "parse",
    "pretty_print", "replay", "stmt_str",
]
