"""Tokenizer for MiniImp source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MiniSyntaxError

KEYWORDS = {
    "fn", "int", "bool", "str", "const", "if", "else", "while", "for",
    "return", "true", "false", "inf",
}

# longest operators first
OPERATORS = [
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|",
    "(", ")", "{", "}", "[", "]", ";", ",", ":",
]

ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}

_ident = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_number = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "kw", "int", "str", "op", "eof"
    text: str
    line: int
    col: int
    value: object = None


def tokenize(source: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_col = col
        m = _ident.match(source, i)
        if m:
            text = m.group()
            toks.append(Token("kw" if text in KEYWORDS else "ident", text, line, start_col))
            i = m.end()
            col += len(text)
            continue
        m = _number.match(source, i)
        if m:
            text = m.group()
            toks.append(Token("int", text, line, start_col, int(text)))
            i = m.end()
            col += len(text)
            continue
        if c == '"':
            j = i + 1
            chars = []
            while True:
                if j >= n or source[j] == "\n":
                    raise MiniSyntaxError("unterminated string literal", line, start_col)
                ch = source[j]
                if ch == '"':
                    break
                if ch == "\\":
                    if j + 1 >= n or source[j + 1] not in ESCAPES:
                        raise MiniSyntaxError("bad escape sequence", line, col + (j - i))
                    chars.append(ESCAPES[source[j + 1]])
                    j += 2
                    continue
                chars.append(ch)
                j += 1
            text = source[i:j + 1]
            toks.append(Token("str", text, line, start_col, "".join(chars)))
            col += len(text)
            i = j + 1
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                toks.append(Token("op", op, line, start_col))
                i += len(op)
                col += len(op)
                break
        else:
            raise MiniSyntaxError(f"unexpected character {c!r}", line, start_col)
    toks.append(Token("eof", "", line, col))
    return toks


def escape_string(s: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'
