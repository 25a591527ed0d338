"""Semantics-preserving surface rewrites of reference programs.

Each rewrite keeps every variable's value sequence intact (up to renaming), so
traces of a diversified program project onto the same canonical variables as
the original while its syntax drifts.
"""

from __future__ import annotations

import copy
import random

from ..lang import ast as A
from ..lang.errors import CheckError
from ..lang.parser import parse
from ..lang.printer import pretty_print
from .patterns import MIRROR

NAME_POOL = (
    "i j k n m r c x y z t u w p q a b d e f g h v idx row col pos cnt count num val value "
    "acc res result out ans buf text line lines board cell cells tmp temp cur curr best top "
    "level depth deep maxd mx total bits digit digits bit word chars ch ptr step flag toggle "
    "start first second even odd rest rem left right key item elem s1 s2 n1 n2 k1 k2"
).split()

_OPS = ("+", "-", "*")


def rename(prog: A.Program, rng: random.Random) -> A.Program:
    """Consistently rename every parameter and local variable."""
    names = []
    for p in prog.params:
        names.append(p.name)
    for s in prog.statements():
        if isinstance(s, (A.Declare, A.ForEach)) and s.name not in names:
            names.append(s.name)
    pool = list(NAME_POOL)
    rng.shuffle(pool)
    mapping = dict(zip(names, pool))
    new = copy.deepcopy(prog)
    for p in new.params:
        p.name = mapping[p.name]

    def ren_expr(e):
        for n in A.iter_exprs(e):
            if isinstance(n, A.Var) and n.name in mapping:
                n.name = mapping[n.name]

    for s in new.statements():
        if isinstance(s, (A.Declare, A.ForEach)):
            s.name = mapping.get(s.name, s.name)
        for e in A.stmt_exprs(s):
            ren_expr(e)
    return new


def _swap_compound(s: A.Stmt, rng: random.Random, p: float) -> None:
    if not isinstance(s, A.Assign) or not isinstance(s.target, A.Var) or rng.random() >= p:
        return
    if s.op != "=" and s.op[0] in _OPS:
        s.value = A.Binary(s.op[0], copy.deepcopy(s.target), s.value)
        s.op = "="
    elif (
        s.op == "="
        and isinstance(s.value, A.Binary)
        and s.value.op in _OPS
        and s.value.left == s.target
    ):
        s.op = s.value.op + "="
        s.value = s.value.right


def _mirror(e, rng: random.Random, p: float):
    for n in A.iter_exprs(e):
        if isinstance(n, A.Binary) and n.op in MIRROR and rng.random() < p:
            n.op = MIRROR[n.op]
            n.left, n.right = n.right, n.left


def _swap_if(s: A.Stmt, rng: random.Random, p: float) -> None:
    if not isinstance(s, A.If) or not s.orelse or rng.random() >= p:
        return
    if len(s.orelse) == 1 and isinstance(s.orelse[0], A.If):
        return
    s.cond = A.Unary("!", s.cond)
    s.then, s.orelse = s.orelse, s.then


def _for_to_while(block: list, rng: random.Random, p: float) -> list:
    out = []
    for s in block:
        for name, sub in A.child_blocks(s):
            setattr(s, name, _for_to_while(sub, rng, p))
        if isinstance(s, A.For) and isinstance(s.init, A.Declare) and rng.random() < p:
            out.append(s.init)
            out.append(A.While(s.cond, s.body + [s.update]))
        else:
            out.append(s)
    return out


def diversify(prog: A.Program, rng: random.Random, p: float = 0.5) -> A.Program:
    """Random mix of renaming, compound-assignment toggles, comparison mirroring,
    negated if/else swaps and for-to-while conversion.  Always re-checks the result."""
    base = rename(prog, rng)
    for _ in range(4):
        new = copy.deepcopy(base)
        for s in new.statements():
            _swap_compound(s, rng, p)
            if isinstance(s, (A.If, A.While, A.For)):
                _mirror(s.cond, rng, p * 0.6)
            _swap_if(s, rng, p * 0.6)
        new.body = _for_to_while(new.body, rng, p * 0.5)
        try:
            return parse(pretty_print(new))
        except CheckError:
            continue
    return parse(pretty_print(base))
