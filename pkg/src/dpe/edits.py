"""Statement-level edits addressed by paths.

A statement path is a tuple of ``(block field, index)`` steps starting at the
function body, e.g. ``(("body", 1), ("then", 0))``.  Insert edits use the same
shape where the last index is the position in the *original* block before
which the new statement goes (it may equal the block length).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .lang import ast as A
from .lang.parser import parse
from .lang.printer import header_str, pretty_print, stmt_str


class InvalidAnchor(ValueError):
    pass


class ConflictingAnchors(ValueError):
    pass


@dataclass(frozen=True)
class Correction:
    kind: str  # "insert" | "delete" | "modify"
    path: tuple
    stmt: Optional[A.Stmt] = field(default=None, compare=False, hash=False)
    header_only: bool = False
    ordinal: int = 0
    tag: Optional[str] = None
    ref_path: Optional[tuple] = None
    text: str = ""  # canonical rendering of the payload, used for equality and hashing

    @property
    def anchor(self) -> tuple:
        if self.kind == "insert":
            return ("insert", self.path, self.ordinal)
        return ("stmt", self.path)

    def describe(self) -> str:
        where = "/".join(f"{f}[{i}]" for f, i in self.path)
        body = self.text.splitlines()[0] if self.text else ""
        return f"{self.kind} {where} {body}".strip()


def make_correction(kind: str, path: tuple, stmt: Optional[A.Stmt] = None, header_only: bool = False,
                    ordinal: int = 0, ref_path: Optional[tuple] = None, tag: Optional[str] = None) -> Correction:
    text = ""
    if stmt is not None:
        text = header_str(stmt) if header_only else stmt_str(stmt)
    return Correction(kind, tuple(path), stmt, header_only, ordinal, tag, ref_path, text)


def get_block(prog: A.Program, block_path: tuple, fld: str) -> list:
    """The statement list named ``fld`` inside the statement at ``block_path`` (or the body)."""
    if not block_path:
        if fld != "body":
            raise InvalidAnchor(f"function has no block {fld!r}")
        return prog.body
    s = get_stmt(prog, block_path)
    if fld not in A.BLOCK_FIELDS.get(type(s), ()):
        raise InvalidAnchor(f"{type(s).__name__} has no block {fld!r}")
    return getattr(s, fld)


def get_stmt(prog: A.Program, path: tuple) -> A.Stmt:
    if not path:
        raise InvalidAnchor("empty statement path")
    block = get_block(prog, tuple(path[:-1]), path[-1][0])
    i = path[-1][1]
    if not 0 <= i < len(block):
        raise InvalidAnchor(f"no statement at {path}")
    return block[i]


def iter_paths(prog: A.Program) -> Iterable:
    """(path, stmt) for every block statement, pre-order."""

    def walk(block, prefix, fld):
        for i, s in enumerate(block):
            p = prefix + ((fld, i),)
            yield p, s
            for name, sub in A.child_blocks(s):
                yield from walk(sub, p, name)

    yield from walk(prog.body, (), "body")


def iter_block_positions(prog: A.Program) -> Iterable:
    """(block prefix, field, block) for every statement list, function body first."""

    def walk(block, prefix, fld):
        yield prefix, fld, block
        for i, s in enumerate(block):
            p = prefix + ((fld, i),)
            for name, sub in A.child_blocks(s):
                yield from walk(sub, p, name)

    yield from walk(prog.body, (), "body")


def with_header(stmt: A.Stmt, header_from: A.Stmt) -> A.Stmt:
    """Copy of ``stmt`` whose header fields come from ``header_from`` (same kind)."""
    if type(stmt) is not type(header_from):
        raise InvalidAnchor("header replacement needs statements of the same kind")
    blocks = {name: getattr(stmt, name) for name, _ in A.child_blocks(stmt)}
    new = copy.deepcopy(header_from)
    for name, b in blocks.items():
        setattr(new, name, b)
    return new


def _check_conflicts(corrections: list) -> None:
    seen = set()
    for c in corrections:
        if c.anchor in seen:
            raise ConflictingAnchors(f"two edits at {c.anchor}")
        seen.add(c.anchor)
    stmt_targets = {c.path: c for c in corrections if c.kind != "insert"}
    for c in corrections:
        # every proper prefix of c's path names an enclosing statement
        p = c.path
        for k in range(1, len(p)):
            outer = stmt_targets.get(p[:k])
            if outer is not None and (outer.kind == "delete" or not outer.header_only):
                raise ConflictingAnchors(f"edit at {p} lies inside a replaced or deleted statement")


def apply_edits(prog: A.Program, corrections: Iterable[Correction], reparse: bool = True) -> A.Program:
    """Apply a set of non-conflicting corrections and return a new, re-checked program."""
    corrections = list(corrections)
    _check_conflicts(corrections)
    by_block: dict = {}
    for c in corrections:
        key = (tuple(c.path[:-1]), c.path[-1][0])
        by_block.setdefault(key, []).append(c)
    # validate anchors against the original program
    for (prefix, fld), cs in by_block.items():
        block = get_block(prog, prefix, fld)
        for c in cs:
            i = c.path[-1][1]
            limit = len(block) if c.kind == "insert" else len(block) - 1
            if not 0 <= i <= limit:
                raise InvalidAnchor(f"no position {i} in block {fld} at {prefix}")
            if c.kind == "modify" and c.header_only and type(block[i]) is not type(c.stmt):
                raise InvalidAnchor("header modification of a different statement kind")

    def rebuild(block: list, prefix: tuple, fld: str) -> list:
        edits = by_block.get((prefix, fld), [])
        deletes = {c.path[-1][1] for c in edits if c.kind == "delete"}
        modifies = {c.path[-1][1]: c for c in edits if c.kind == "modify"}
        inserts: dict = {}
        for c in sorted((c for c in edits if c.kind == "insert"), key=lambda c: c.ordinal):
            inserts.setdefault(c.path[-1][1], []).append(c)
        out = []
        for i in range(len(block) + 1):
            for c in inserts.get(i, []):
                out.append(copy.deepcopy(c.stmt))
            if i == len(block) or i in deletes:
                continue
            s = block[i]
            m = modifies.get(i)
            here = prefix + ((fld, i),)
            if m is not None and not m.header_only:
                out.append(copy.deepcopy(m.stmt))
                continue
            new = copy.copy(s)
            if m is not None:
                new = with_header(s, m.stmt)
            if isinstance(new, A.For):
                new.init = copy.deepcopy(new.init)
                new.update = copy.deepcopy(new.update)
            for name, sub in A.child_blocks(s):
                setattr(new, name, rebuild(sub, here, name))
            out.append(new)
        return out

    new = A.Program(prog.name, copy.deepcopy(prog.params), rebuild(prog.body, (), "body"))
    if reparse:
        return parse(pretty_print(new))
    return A.number_statements(new)


def invert(prog: A.Program, c: Correction) -> Correction:
    """Correction that undoes ``c`` on ``apply_edits(prog, [c])``."""
    if c.kind == "modify":
        old = get_stmt(prog, c.path)
        return make_correction("modify", c.path, copy.deepcopy(old), c.header_only)
    if c.kind == "delete":
        old = get_stmt(prog, c.path)
        return make_correction("insert", c.path, copy.deepcopy(old))
    return make_correction("delete", c.path)
