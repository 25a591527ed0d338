from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpe.lang import (
    BOTTOM,
    MiniSyntaxError,
    ReadOnlyWrite,
    UndeclaredVariable,
    Verdict,
    ast as A,
    display,
    execute,
    parse,
    pretty_print,
    replay,
)
from dpe.lang.interp import snapshot
from dpe.tasks.base import load_program

# values written to A by each sort on A = [8, 5, 1, 4, 3]
BUBBLE_ROWS = [
    "[5,5,1,4,3]", "[5,8,1,4,3]", "[5,1,1,4,3]", "[5,1,8,4,3]", "[1,1,8,4,3]", "[1,5,8,4,3]",
    "[1,5,4,4,3]", "[1,5,4,8,3]", "[1,4,4,8,3]", "[1,4,5,8,3]", "[1,4,5,3,3]", "[1,4,5,3,8]",
    "[1,4,3,3,8]", "[1,4,3,5,8]", "[1,3,3,5,8]", "[1,3,4,5,8]",
]
INSERTION_ROWS = [
    "[5,5,1,4,3]", "[5,8,1,4,3]", "[5,1,1,4,3]", "[5,1,8,4,3]", "[5,1,4,4,3]", "[5,1,4,8,3]",
    "[5,1,4,3,3]", "[5,1,4,3,8]", "[1,1,4,3,8]", "[1,5,4,3,8]", "[1,4,4,3,8]", "[1,4,5,3,8]",
    "[1,4,3,3,8]", "[1,4,3,5,8]", "[1,3,3,5,8]", "[1,3,4,5,8]",
]


def a_values(prog_name: str) -> list:
    r = execute(load_program(prog_name), [[8, 5, 1, 4, 3]])
    return [display(e.value) for e in r.trace if e.var == "A"]


def test_bubble_trace_column():
    assert a_values("bubble.mini") == BUBBLE_ROWS


def test_insertion_trace_column():
    assert a_values("insertion.mini") == INSERTION_ROWS


def test_sorts_diverge_at_row_five():
    b, i = a_values("bubble.mini"), a_values("insertion.mini")
    assert b[:4] == i[:4]
    assert (b[4], i[4]) == ("[1,1,8,4,3]", "[5,1,4,4,3]")


def test_bubble_structure():
    p = load_program("bubble.mini")
    kinds = [type(s).__name__ for s in p.statements()]
    assert kinds.count("For") == 2 and kinds.count("If") == 1


def test_max_variable_trace():
    r = execute(load_program("max.mini"), [[1, 5, 3]])
    assert [(e.var, display(e.value)) for e in r.trace] == [
        ("max_val", "-inf"), ("item", "1"), ("max_val", "1"), ("item", "5"), ("max_val", "5"), ("item", "3"),
    ]
    assert r.output == "5\n"


def test_empty_body_round_trip():
    p = parse("fn f() { }")
    assert p.body == []
    assert pretty_print(p) == "fn f() {\n}\n"


def test_undeclared_variable_rejected():
    with pytest.raises(UndeclaredVariable):
        parse("fn f() { x = 1; }")


def test_syntax_error_has_location():
    with pytest.raises(MiniSyntaxError) as ei:
        parse("fn f() {\n  int x = ;\n}")
    assert ei.value.line == 2


def test_const_param_is_read_only():
    with pytest.raises(ReadOnlyWrite):
        parse("fn f(const int x) { x = 1; }")


def test_infinite_loop_exceeds_budget():
    r = execute(parse("fn f() { while (true) { } }"), [], budget=10_000)
    assert r.verdict == Verdict.BUDGET_EXCEEDED


@pytest.mark.parametrize("src", [
    "fn f() { int x = 1 / 0; }",
    "fn f() { int[] a = [1]; int y = a[3]; }",
    "fn f() { int x; int y = x + 1; }",
    "fn f() { int x = 9223372036854775807; x += 1; }",
])
def test_runtime_errors(src):
    r = execute(parse(src), [])
    assert r.verdict == Verdict.RUNTIME_ERROR


def test_read_only_params_emit_no_events():
    r = execute(load_program("max.mini"), [[1, 5, 3]])
    assert all(e.var != "arr" for e in r.trace)


def test_write_events_are_gapless_and_never_bottom():
    r = execute(load_program("bubble.mini"), [[8, 5, 1, 4, 3]])
    assert [e.seq for e in r.trace] == list(range(len(r.trace)))
    assert all(e.value is not BOTTOM for e in r.trace)


def test_straightline_stmt_order():
    p = parse("fn f() { int a = 1; int b = 2; print(a); a += b; int[] c = []; append(c, a); }")
    r = execute(p, [])
    side = [s.sid for s in p.body if A.written_var(s) is not None]
    assert [e.stmt_id for e in r.trace] == side


@pytest.mark.parametrize("name", [
    "bubble.mini", "insertion.mini", "max.mini", "chess_a.mini", "chess_b.mini", "chess_c.mini", "chess_d.mini",
    "chess_e.mini", "paren_a.mini", "paren_b.mini", "paren_c.mini", "paren_d.mini", "bin_a.mini", "bin_b.mini",
    "bin_c.mini", "bin_d.mini",
])
def test_round_trip_bundled(name):
    p = load_program(name)
    q = parse(pretty_print(p))
    assert q == p
    assert [s.sid for s in q.statements()] == [s.sid for s in p.statements()]
    assert pretty_print(q) == pretty_print(p)


def test_replay_reproduces_final_environment():
    r = execute(load_program("bubble.mini"), [[8, 5, 1, 4, 3]])
    env = replay(r.trace)
    for var, value in env.items():
        assert snapshot(r.final_values[var]) == value


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=0, max_size=7))
def test_execution_is_deterministic_and_sorts(xs):
    p = load_program("bubble.mini")
    r1, r2 = execute(p, [list(xs)]), execute(p, [list(xs)])
    assert r1.output == r2.output
    assert [(e.var, e.value) for e in r1.trace] == [(e.var, e.value) for e in r2.trace]
    assert r1.output == "[" + ",".join(map(str, sorted(xs))) + "]\n"
