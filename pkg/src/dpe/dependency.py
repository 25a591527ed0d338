"""Per-statement data and control dependencies.

The analysis is syntactic and flow-insensitive: a side-effecting statement
depends on the variables its own expressions read (data) and on every
variable read by an enclosing guard (control).  For loops count their update
variable as part of the guard.  Read-only parameters are never tracked, so
they never appear in either set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .lang import ast as A


@dataclass(frozen=True)
class StmtDeps:
    var: str
    data: frozenset
    control: frozenset

    @property
    def all(self) -> frozenset:
        return self.data | self.control


class DependencyMap(dict):
    """stmt id -> StmtDeps, for side-effecting statements only."""

    def to_json(self) -> str:
        return json.dumps(
            {str(k): {"data": sorted(v.data), "control": sorted(v.control)} for k, v in sorted(self.items())},
            sort_keys=True,
        )


def _guard_vars(s: A.Stmt) -> set:
    if isinstance(s, (A.If, A.While)):
        return A.vars_read(s.cond)
    if isinstance(s, A.For):
        out = A.vars_read(s.cond)
        w = A.written_var(s.update)
        if w:
            out.add(w)
        return out
    if isinstance(s, A.ForEach):
        return A.vars_read(s.iterable) | {s.name}
    return set()


def _data_vars(s: A.Stmt) -> set:
    if isinstance(s, A.Declare):
        return A.vars_read(s.init) if s.init is not None else set()
    if isinstance(s, A.Assign):
        out = A.vars_read(s.value)
        t = s.target
        if isinstance(t, A.Index):
            out |= A.vars_read(t.index)
        if s.op != "=":
            out.add(A.written_var(s))
        return out
    if isinstance(s, A.CallStmt):
        return A.vars_read(s.call)
    if isinstance(s, A.ForEach):
        return A.vars_read(s.iterable)
    return set()


def analyze(prog: A.Program) -> DependencyMap:
    ignore = prog.readonly_params()
    deps = DependencyMap()

    def record(s: A.Stmt, guards: frozenset):
        var = A.written_var(s)
        if var is None:
            return
        deps[s.sid] = StmtDeps(
            var,
            frozenset(_data_vars(s) - ignore),
            frozenset(guards - ignore),
        )

    def walk(block: list, guards: frozenset):
        for s in block:
            if isinstance(s, A.For):
                record(s.init, guards)
                inner = guards | _guard_vars(s)
                record(s.update, inner)
                walk(s.body, inner)
            elif isinstance(s, A.ForEach):
                inner = guards | _guard_vars(s)
                record(s, inner)
                walk(s.body, inner)
            elif isinstance(s, (A.If, A.While)):
                inner = guards | _guard_vars(s)
                for _, sub in A.child_blocks(s):
                    walk(sub, inner)
            else:
                record(s, guards)

    walk(prog.body, frozenset())
    return deps


def event_dependencies(deps: DependencyMap, trace: list) -> list:
    """Dependency variable set (data | control) for each write event, in trace order."""
    out = []
    for ev in trace:
        d = deps.get(ev.stmt_id)
        out.append(sorted(d.all) if d is not None else [])
    return out
