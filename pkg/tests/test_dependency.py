from __future__ import annotations

import json

import pytest

from dpe.dependency import analyze, event_dependencies
from dpe.encoding import tokenize_value
from dpe.lang import ast as A
from dpe.lang import execute, parse
from dpe.lang.interp import BOTTOM
from dpe.lang.printer import expr_str, stmt_str
from dpe.tasks import load_task
from dpe.tasks.base import load_program


def deps_of(prog, text):
    d = analyze(prog)
    for s in prog.statements():
        if stmt_str(s).strip() == text and s.sid in d:
            return d[s.sid]
    raise KeyError(text)


def test_max_update_dependencies():
    p = load_program("max.mini")
    d = deps_of(p, "max_val = item;")
    assert d.data == {"item"}
    assert d.control == {"item", "max_val"}


def test_top_level_constant_assignment():
    p = parse("fn f() { int x = 0; x = 1; }")
    d = deps_of(p, "x = 1;")
    assert d.data == set() and d.control == set()


def _guard_oracle(prog, target):
    """Independent recursive walk: variables read by every enclosing guard (plus For update targets)."""
    def walk(block, acc):
        for s in block:
            if s is target:
                return acc
            extra = set()
            if isinstance(s, (A.If, A.While)):
                extra = {n.name for n in A.iter_exprs(s.cond) if isinstance(n, A.Var)}
            elif isinstance(s, A.For):
                extra = {n.name for n in A.iter_exprs(s.cond) if isinstance(n, A.Var)} | {s.update.target.name}
                if s.update is target:
                    return acc | extra
            for _, sub in A.child_blocks(s):
                found = walk(sub, acc | extra)
                if found is not None:
                    return found
        return None
    return walk(prog.body, set())


def test_bubble_swap_dependencies():
    p = load_program("bubble.mini")
    d = deps_of(p, "A[j] = A[j + 1];")
    assert d.data == {"A", "j"}
    assert d.control == {"A", "i", "j"}
    target = next(s for s in p.statements() if stmt_str(s).strip() == "A[j] = A[j + 1];")
    assert d.control == _guard_oracle(p, target)


def test_control_deps_invariant_under_sibling_reordering():
    a = parse("fn f(int n) { int x = 0; int y = 0; while (x < n) { x += 1; y = y + 2; } }")
    b = parse("fn f(int n) { int x = 0; int y = 0; while (x < n) { y = y + 2; x += 1; } }")
    ca = {d.var: d.control for d in analyze(a).values()}
    cb = {d.var: d.control for d in analyze(b).values()}
    assert ca == cb


def test_json_dump_shape():
    p = load_program("max.mini")
    data = json.loads(analyze(p).to_json())
    for v in data.values():
        assert set(v) == {"data", "control"}


def test_event_dependencies_align_with_trace():
    p = load_program("max.mini")
    r = execute(p, [[1, 5, 3]])
    ds = event_dependencies(analyze(p), r.trace)
    assert len(ds) == len(r.trace)
    assert ds[4] == ["item", "max_val"]  # the line-8 write of 5


# ------------------------------------------------------------------ soundness by perturbation


def _types(prog):
    out = {p.name: p.type for p in prog.params}
    for s in prog.statements():
        if isinstance(s, (A.Declare, A.ForEach)):
            out.setdefault(s.name, s.type)
    return out


def _perturb(v):
    if isinstance(v, bool):
        return [not v]
    if isinstance(v, int):
        return [x for x in (v + 1, v - 1) if A.INT_MIN <= x <= A.INT_MAX]
    if isinstance(v, str):
        return [v + "x", ""] if v else ["x"]
    if isinstance(v, tuple):
        if not v:
            return [(1,)]
        return [(v[0] + 1,) + v[1:], v[:-1]]
    return []


def _literal(v):
    return tokenize_value(v)


def _run_snippet(prog, env, types, stmt_src, readonly):
    """Execute ``stmt_src`` after declaring every variable of ``env``; returns the last event value or a marker."""
    params, decls = [], []
    for name, v in env.items():
        if name in readonly:
            params.append(f"const {types[name]} {name}")
            continue
        decls.append(f"{types[name]} {name} = {_literal(v)};")
    args = [list(env[n]) if isinstance(env[n], tuple) else env[n] for n in env if n in readonly]
    src = "fn snip(" + ", ".join(params) + ") { " + " ".join(decls) + " " + stmt_src + " }"
    r = execute(parse(src), args)
    if r.verdict.value != "Completed":
        return ("error", r.verdict.value)
    skip = len(decls)
    evs = r.trace[skip:]
    return evs[-1].value if evs else ("no write",)


def _enclosing_guards(prog, target):
    def walk(block, acc):
        for s in block:
            if s is target:
                return acc
            if isinstance(s, A.For) and (s.init is target or s.update is target):
                return acc + ([s.cond] if s.update is target else [])
            here = acc
            if isinstance(s, (A.If, A.While)):
                here = acc + [s.cond]
            elif isinstance(s, A.For):
                here = acc + [s.cond]
            for _, sub in A.child_blocks(s):
                found = walk(sub, here)
                if found is not None:
                    return found
        return None
    return walk(prog.body, [])


def small_programs():
    """Bundled programs with at most three written variables, paired with one input each."""
    cands = [("max.mini", [[1, 5, 3]])]
    for tid in ("CountParentheses", "BinaryDigits", "Chessboard"):
        task = load_task(tid)
        for name, prog in task.references:
            cands.append((name, list(task.trace_inputs[-1])))
    cands += [("bubble.mini", [[3, 1, 2]]), ("insertion.mini", [[3, 1, 2]])]
    out = []
    for name, inputs in cands:
        prog = load_program(name if name.endswith(".mini") else name + ".mini")
        written = {d.var for d in analyze(prog).values()}
        if len(written) <= 3:
            out.append((name, prog, inputs))
    return out


SMALL = small_programs()


def test_some_programs_qualify_for_perturbation():
    assert len(SMALL) >= 3


@pytest.mark.parametrize("name,prog,inputs", SMALL, ids=[s[0] for s in SMALL])
def test_dependency_soundness_by_perturbation(name, prog, inputs):
    deps = analyze(prog)
    types = _types(prog)
    readonly = prog.readonly_params()
    by_id = prog.stmt_by_id()
    r = execute(prog, inputs)
    env = {p.name: (tuple(v) if isinstance(v, list) else v) for p, v in zip(prog.params, inputs)}
    for ev in r.trace[:20]:
        s = by_id[ev.stmt_id]
        d = deps.get(s.sid)
        if d is None or isinstance(s, A.ForEach):
            env[ev.var] = ev.value
            continue
        allowed = d.data | d.control | {d.var}
        live = {k: v for k, v in env.items() if v is not BOTTOM}
        if isinstance(s, A.Declare):
            live.pop(s.name, None)
        src = stmt_str(s).strip()
        if not src.endswith(";"):
            src += ";"
        guards = _enclosing_guards(prog, s) or []
        base = _run_snippet(prog, live, types, src, readonly)
        base_g = [_run_snippet(prog, live, types, f"bool g__ = {expr_str(g)};", readonly) for g in guards]
        for u, val in live.items():
            if u in readonly:
                continue
            for alt in _perturb(val):
                env2 = dict(live)
                env2[u] = alt
                if _run_snippet(prog, env2, types, src, readonly) != base:
                    assert u in allowed, f"{name}: {src} depends on {u}"
                for g, bg in zip(guards, base_g):
                    if _run_snippet(prog, env2, types, f"bool g__ = {expr_str(g)};", readonly) != bg:
                        assert u in d.control, f"{name}: guard {expr_str(g)} of {src} depends on {u}"
        env[ev.var] = ev.value
