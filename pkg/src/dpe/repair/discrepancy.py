"""Statement-level discrepancies between a program and a reference solution."""

from __future__ import annotations

import copy
from collections import Counter
from typing import Optional

from ..edits import Correction, get_stmt, make_correction
from ..lang import ast as A
from ..lang.printer import header_str, stmt_str


def _lcs(a: list, b: list) -> list:
    """Index pairs of one longest common subsequence (leftmost-preferring backtrack)."""
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            dp[i][j] = dp[i + 1][j + 1] + 1 if a[i] == b[j] else max(dp[i + 1][j], dp[i][j + 1])
    out, i, j = [], 0, 0
    while i < n and j < m:
        if a[i] == b[j]:
            out.append((i, j))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def _kind(s: A.Stmt) -> tuple:
    return type(s).__name__, A.written_var(s)


def _script(pb: list, cb: list) -> list:
    """Edit script over two blocks: ("pair", i, j), ("del", i) and ("ins", j) in block order."""
    anchors = _lcs([stmt_str(s) for s in pb], [stmt_str(s) for s in cb])
    ops = []
    pi = cj = 0
    for ai, aj in anchors + [(len(pb), len(cb))]:
        gp, gc = list(range(pi, ai)), list(range(cj, aj))
        if len(gp) == len(gc):
            ops += [("pair", i, j) for i, j in zip(gp, gc)]
        else:
            inner = _lcs([_kind(pb[i]) for i in gp], [_kind(cb[j]) for j in gc])
            x = y = 0
            for ii, jj in inner + [(len(gp), len(gc))]:
                ops += [("del", gp[k]) for k in range(x, ii)]
                ops += [("ins", gc[k]) for k in range(y, jj)]
                if ii < len(gp):
                    ops.append(("pair", gp[ii], gc[jj]))
                x, y = ii + 1, jj + 1
        if ai < len(pb):
            ops.append(("same", ai, aj))
        pi, cj = ai + 1, aj + 1
    return ops


def _diff_block(pb: list, cb: list, p_prefix: tuple, c_prefix: tuple, pf: str, cf: str, out: list) -> None:
    ops = _script(pb, cb)
    used: Counter = Counter()
    for k, op in enumerate(ops):
        if op[0] == "del":
            out.append(make_correction("delete", p_prefix + ((pf, op[1]),)))
        elif op[0] == "ins":
            # new statements go before the next statement of P in script order
            nxt = next((o[1] for o in ops[k + 1:] if o[0] != "ins"), len(pb))
            ordinal = used[nxt]
            used[nxt] += 1
            out.append(make_correction("insert", p_prefix + ((pf, nxt),), copy.deepcopy(cb[op[1]]),
                                       ordinal=ordinal, ref_path=c_prefix + ((cf, op[1]),)))
        elif op[0] == "pair":
            s, t = pb[op[1]], cb[op[2]]
            p_path, c_path = p_prefix + ((pf, op[1]),), c_prefix + ((cf, op[2]),)
            if stmt_str(s) == stmt_str(t):
                continue
            if type(s) is type(t) and A.child_blocks(s):
                if header_str(s) != header_str(t):
                    out.append(make_correction("modify", p_path, _header_copy(t), header_only=True, ref_path=c_path))
                for (name, sb), (_, tb) in zip(A.child_blocks(s), A.child_blocks(t)):
                    _diff_block(sb, tb, p_path, c_path, name, name, out)
            else:
                out.append(make_correction("modify", p_path, copy.deepcopy(t), ref_path=c_path))


def _header_copy(s: A.Stmt) -> A.Stmt:
    new = copy.copy(s)
    for name, _ in A.child_blocks(s):
        setattr(new, name, [])
    return copy.deepcopy(new)


def generate_discrepancies(P: A.Program, Pc: A.Program, task=None) -> list:
    """Corrections turning ``P`` into ``Pc``, tagged with error classes when ``task`` is given."""
    out: list = []
    _diff_block(P.body, Pc.body, (), (), "body", "body", out)
    if task is not None:
        out = tag_corrections(out, P, Pc, task)
    return out


# ------------------------------------------------------------------ tagging


def anonymized(s: A.Stmt) -> str:
    """Canonical text with variables renamed by order of first appearance."""
    s = copy.deepcopy(s)
    names: dict = {}

    def nm(x):
        return names.setdefault(x, f"v{len(names)}")

    for st in A.iter_stmts([s]):
        if isinstance(st, (A.Declare, A.ForEach)):
            st.name = nm(st.name)
        for e in A.stmt_exprs(st):
            for n in A.iter_exprs(e):
                if isinstance(n, A.Var):
                    n.name = nm(n.name)
    return stmt_str(s)


class SiteIndex:
    """Every rewrite the task's mutators can apply to one reference, keyed for signature lookups."""

    def __init__(self, ref: A.Program, task):
        self.modify: dict = {}
        self.delete: dict = {}
        self.insert: dict = {}
        for m in task.mutators:
            cls = task.classes[m.label]
            for site in m.sites(ref):
                if site.kind == "modify":
                    self.modify.setdefault((site.path, site.header_only, site.text()), []).append(cls)
                elif site.kind == "delete":
                    self.delete.setdefault(site.path, []).append(cls)
                else:
                    self.insert.setdefault(anonymized(site.stmt), []).append(cls)

    def match(self, c: Correction, P: A.Program) -> Optional[str]:
        if c.kind == "modify":
            cur = get_stmt(P, c.path)
            text = header_str(cur) if c.header_only else stmt_str(cur)
            hits = self.modify.get((c.ref_path, c.header_only, text))
        elif c.kind == "insert":
            hits = self.delete.get(c.ref_path)
        else:
            hits = self.insert.get(anonymized(get_stmt(P, c.path)))
        if not hits:
            return None
        # several mutators of one class may produce the same rewrite; ties across classes go to the most common
        return Counter(hits).most_common(1)[0][0]


def tag_corrections(corrections: list, P: A.Program, Pc: A.Program, task) -> list:
    idx = SiteIndex(Pc, task)
    out = []
    for c in corrections:
        tag = idx.match(c, P)
        out.append(Correction(c.kind, c.path, c.stmt, c.header_only, c.ordinal, tag, c.ref_path, c.text))
    return out
