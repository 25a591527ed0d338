"""Recursive-descent parser and static checker for MiniImp.

Grammar sketch::

    program  := 'fn' IDENT '(' [param {',' param}] ')' block
    param    := ['const'] type IDENT
    type     := 'int' ['[' ']'] | 'bool' | 'str'
    block    := '{' {stmt} '}'
    stmt     := type IDENT ['=' expr] ';' | lvalue aop expr ';' | call ';'
              | 'if' '(' expr ')' block ['else' (if | block)]
              | 'while' '(' expr ')' block
              | 'for' '(' simple ';' expr ';' simple ')' block
              | 'for' '(' type IDENT ':' expr ')' block
              | 'return' [expr] ';'
"""

from __future__ import annotations

from . import ast as A
from .errors import MiniSyntaxError, ReadOnlyWrite, Redeclaration, UndeclaredVariable, CheckError
from .lexer import Token, tokenize

BUILTINS = {"print": 1, "append": 2, "len": 1, "swap": 3}
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=")

# binary precedence, higher binds tighter
PRECEDENCE = {
    "||": 1, "&&": 2, "|": 3, "&": 4,
    "==": 5, "!=": 5,
    "<": 6, "<=": 6, ">": 6, ">=": 6,
    "<<": 7, ">>": 7,
    "+": 8, "-": 8,
    "*": 9, "/": 9, "%": 9,
}
UNARY_PREC = 10


class Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.pos = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Token = None):
        tok = tok or self.tok
        raise MiniSyntaxError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.pos += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error(f"expected identifier, found {self.tok.text!r}")
        t = self.tok
        self.pos += 1
        return t

    # -- declarations
    def at_type(self) -> bool:
        return self.tok.kind == "kw" and self.tok.text in ("int", "bool", "str")

    def parse_type(self) -> str:
        t = self.tok
        if not self.at_type():
            self.error(f"expected type, found {t.text!r}")
        self.pos += 1
        if t.text == "int" and self.at("["):
            self.expect("[")
            self.expect("]")
            return "int[]"
        return t.text

    def program(self) -> A.Program:
        self.expect("fn")
        name = self.ident().text
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ro = self.accept("const")
                ty = self.parse_type()
                params.append(A.Param(ty, self.ident().text, ro))
                if not self.accept(","):
                    break
        self.expect(")")
        body = self.block()
        if self.tok.kind != "eof":
            self.error("unexpected text after function body")
        return A.Program(name, params, body)

    def block(self) -> list:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return stmts

    def _pos(self, stmt, tok: Token):
        stmt.line, stmt.col = tok.line, tok.col
        return stmt

    def statement(self) -> A.Stmt:
        t = self.tok
        if self.at("if"):
            return self.if_stmt()
        if self.at("while"):
            self.pos += 1
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return self._pos(A.While(cond, self.block()), t)
        if self.at("for"):
            return self.for_stmt()
        if self.at("return"):
            self.pos += 1
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return self._pos(A.Return(value), t)
        s = self.simple()
        self.expect(";")
        return s

    def if_stmt(self) -> A.If:
        t = self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse = []
        if self.accept("else"):
            orelse = [self.if_stmt()] if self.at("if") else self.block()
        return self._pos(A.If(cond, then, orelse), t)

    def for_stmt(self) -> A.Stmt:
        t = self.expect("for")
        self.expect("(")
        if self.at_type() and self.peek().kind == "ident" and self.peek(2).text == ":":
            ty = self.parse_type()
            name = self.ident().text
            self.expect(":")
            it = self.expr()
            self.expect(")")
            return self._pos(A.ForEach(ty, name, it, self.block()), t)
        init = self.simple()
        self.expect(";")
        cond = self.expr()
        self.expect(";")
        update = self.simple()
        self.expect(")")
        return self._pos(A.For(init, cond, update, self.block()), t)

    def simple(self) -> A.Stmt:
        t = self.tok
        if self.at_type():
            ty = self.parse_type()
            name = self.ident().text
            init = self.expr() if self.accept("=") else None
            return self._pos(A.Declare(ty, name, init), t)
        if t.kind == "ident" and self.peek().text == "(":
            return self._pos(A.CallStmt(self.call()), t)
        if t.kind != "ident":
            self.error(f"expected statement, found {t.text!r}")
        target = A.Var(self.ident().text)
        if self.accept("["):
            target = A.Index(target, self.expr())
            self.expect("]")
        if not (self.tok.kind == "op" and self.tok.text in ASSIGN_OPS):
            self.error(f"expected assignment operator, found {self.tok.text!r}")
        op = self.tok.text
        self.pos += 1
        return self._pos(A.Assign(target, op, self.expr()), t)

    def call(self) -> A.Call:
        t = self.ident()
        if t.text not in BUILTINS:
            raise CheckError(f"unknown function {t.text!r}", t.line, t.col)
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        if len(args) != BUILTINS[t.text]:
            raise CheckError(f"{t.text} takes {BUILTINS[t.text]} argument(s)", t.line, t.col)
        return A.Call(t.text, args)

    # -- expressions (precedence climbing)
    def expr(self, min_prec: int = 1):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in PRECEDENCE:
            op = self.tok.text
            prec = PRECEDENCE[op]
            if prec < min_prec:
                break
            self.pos += 1
            right = self.expr(prec + 1)
            left = A.Binary(op, left, right)
        return left

    def unary(self):
        if self.at("-"):
            self.pos += 1
            if self.at("inf"):
                self.pos += 1
                return A.IntLit(A.INT_MIN)
            return A.Unary("-", self.unary())
        if self.at("!"):
            self.pos += 1
            return A.Unary("!", self.unary())
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while self.at("["):
            self.pos += 1
            e = A.Index(e, self.expr())
            self.expect("]")
        return e

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.pos += 1
            if t.value > A.INT_MAX:
                self.error("integer literal out of range", t)
            return A.IntLit(t.value)
        if t.kind == "str":
            self.pos += 1
            return A.StrLit(t.value)
        if self.at("true") or self.at("false"):
            self.pos += 1
            return A.BoolLit(t.text == "true")
        if self.at("inf"):
            self.error("'inf' is only allowed as '-inf'")
        if self.at("("):
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if self.at("["):
            self.pos += 1
            elems = []
            if not self.at("]"):
                elems.append(self.expr())
                while self.accept(","):
                    elems.append(self.expr())
            self.expect("]")
            return A.ArrayLit(elems)
        if t.kind == "ident":
            if self.peek().text == "(":
                c = self.call()
                if c.name != "len":
                    raise CheckError(f"{c.name} does not return a value", t.line, t.col)
                return c
            self.pos += 1
            return A.Var(t.text)
        self.error(f"unexpected {t.text or 'end of input'!r}")


def check(prog: A.Program) -> None:
    """Scope check: every use declared before, no redeclaration in scope, no writes to const params."""
    readonly = prog.readonly_params()
    scopes = [{p.name for p in prog.params}]
    if len(scopes[0]) != len(prog.params):
        raise Redeclaration("duplicate parameter", 0, 0)

    def declared(name):
        return any(name in s for s in scopes)

    def use(e, stmt):
        for v in A.vars_read(e):
            if not declared(v):
                raise UndeclaredVariable(f"use of undeclared variable {v!r}", stmt.line, stmt.col)

    def declare(name, stmt):
        if declared(name):
            raise Redeclaration(f"variable {name!r} already declared", stmt.line, stmt.col)
        scopes[-1].add(name)

    def write(name, stmt):
        if name in readonly:
            raise ReadOnlyWrite(f"cannot write read-only parameter {name!r}", stmt.line, stmt.col)

    def simple(s):
        if isinstance(s, A.Declare):
            if s.init is not None:
                use(s.init, s)
            declare(s.name, s)
        elif isinstance(s, A.Assign):
            use(s.target, s)
            use(s.value, s)
            write(A.written_var(s), s)
        elif isinstance(s, A.CallStmt):
            use(s.call, s)
            if s.call.name in ("append", "swap"):
                if not isinstance(s.call.args[0], A.Var):
                    raise CheckError(f"{s.call.name} needs a variable as first argument", s.line, s.col)
                write(s.call.args[0].name, s)
        elif isinstance(s, A.Return):
            if s.value is not None:
                use(s.value, s)

    def block(stmts):
        scopes.append(set())
        for s in stmts:
            stmt(s)
        scopes.pop()

    def stmt(s):
        if isinstance(s, A.If):
            use(s.cond, s)
            block(s.then)
            block(s.orelse)
        elif isinstance(s, A.While):
            use(s.cond, s)
            block(s.body)
        elif isinstance(s, A.For):
            scopes.append(set())
            simple(s.init)
            use(s.cond, s)
            block(s.body)
            simple(s.update)
            scopes.pop()
        elif isinstance(s, A.ForEach):
            use(s.iterable, s)
            scopes.append(set())
            declare(s.name, s)
            block(s.body)
            scopes.pop()
        else:
            simple(s)

    for s in prog.body:
        stmt(s)


def parse(source: str) -> A.Program:
    """Parse and check MiniImp source; statement ids are assigned in pre-order."""
    prog = Parser(source).program()
    check(prog)
    return A.number_statements(prog)
