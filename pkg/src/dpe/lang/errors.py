"""Error types raised by the MiniImp front end and interpreter."""

from __future__ import annotations


class LangError(Exception):
    """Base class for every MiniImp error."""


class MiniSyntaxError(LangError):
    """Lexing or parsing failure with a 1-based line and column."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{message} at line {line}, column {col}")


class CheckError(LangError):
    """Static check failure found after parsing."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{message} at line {line}, column {col}")


class UndeclaredVariable(CheckError):
    pass


class ReadOnlyWrite(CheckError):
    pass


class Redeclaration(CheckError):
    pass


class MiniRuntimeError(LangError):
    """Division by zero, bad index, read of an unassigned variable, overflow, type clash."""


class BudgetExceeded(LangError):
    """The step budget ran out before the program finished."""
