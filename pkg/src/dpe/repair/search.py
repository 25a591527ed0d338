"""Minimal-fix search: enumerative and classifier-guided."""

from __future__ import annotations

import itertools
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..edits import ConflictingAnchors, InvalidAnchor, apply_edits, iter_paths
from ..lang import ast as A
from ..lang.errors import LangError
from ..lang.printer import header_str
from .discrepancy import generate_discrepancies

DEFAULT_K = 3
DEFAULT_BUDGET = 200_000


@dataclass(frozen=True)
class FixSet:
    corrections: tuple = ()
    reference: str = ""

    @property
    def size(self) -> int:
        return len(self.corrections)

    def apply(self, prog: A.Program) -> A.Program:
        return apply_patch(prog, self)


@dataclass
class SearchStats:
    subsets_evaluated: int = 0
    wall_ms: float = 0.0
    rounds: int = 0
    fallback: bool = False
    exhausted: bool = False
    references_tried: list = field(default_factory=list)


def apply_patch(prog: A.Program, fix) -> A.Program:
    """Apply a FixSet (or any iterable of corrections); the result is re-parsed and re-checked."""
    corrections = fix.corrections if isinstance(fix, FixSet) else tuple(fix)
    return apply_edits(prog, corrections)


def is_correct(prog: A.Program, task) -> bool:
    return task.is_correct(prog)


def _stmt_multiset(prog: A.Program) -> Counter:
    # block statements only: a for-loop's init and update already live in its header string
    return Counter(header_str(s) for _, s in iter_paths(prog))


def diff_size(a: A.Program, b: A.Program) -> int:
    ca, cb = _stmt_multiset(a), _stmt_multiset(b)
    return sum(abs(ca[k] - cb[k]) for k in set(ca) | set(cb))


def identify_candidates(P: A.Program, solutions: Sequence, K: int = DEFAULT_K) -> list:
    """Top-K (id, Program) references by ascending statement-multiset difference, ties by id."""
    if not solutions:
        raise ValueError("no reference solutions")
    ranked = sorted(solutions, key=lambda rs: (diff_size(P, rs[1]), rs[0]))
    return ranked[:K]


class _Evaluator:
    def __init__(self, task, budget: int, stats: SearchStats):
        self.task, self.budget, self.stats = task, budget, stats

    @property
    def left(self) -> int:
        return self.budget - self.stats.subsets_evaluated

    def __call__(self, prog: A.Program, subset) -> Optional[A.Program]:
        """Patched program if it is correct; counts one subset evaluation."""
        self.stats.subsets_evaluated += 1
        try:
            cand = apply_edits(prog, subset)
        except (LangError, ConflictingAnchors, InvalidAnchor):
            return None
        return cand if self.task.is_correct(cand) else None


def _enumerate(P, task, solutions, ev: _Evaluator, K: int) -> Optional[tuple]:
    """Alg.-1 style search; returns (reference id, corrections, patched program) or None."""
    best = None
    k = None
    for rid, ref in identify_candidates(P, solutions, K):
        ev.stats.references_tried.append(rid)
        C = generate_discrepancies(P, ref)
        top = len(C) if k is None else min(len(C), k - 1)
        found = False
        for size in range(1, top + 1):
            for subset in itertools.combinations(C, size):
                if ev.left <= 0:
                    ev.stats.exhausted = True
                    return best
                fixed = ev(P, subset)
                if fixed is not None:
                    best, k, found = (rid, subset, fixed), size, True
                    break
            if found:
                break
    return best


def enumerative_fix(P: A.Program, task, solutions: Sequence, budget: int = DEFAULT_BUDGET,
                    K: int = DEFAULT_K) -> tuple:
    """(FixSet or None, SearchStats)."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    stats = SearchStats()
    t0 = time.perf_counter()
    if task.is_correct(P):
        stats.wall_ms = (time.perf_counter() - t0) * 1e3
        return FixSet((), ""), stats
    res = _enumerate(P, task, solutions, _Evaluator(task, budget, stats), K)
    stats.wall_ms = (time.perf_counter() - t0) * 1e3
    if res is None:
        return None, stats
    rid, subset, _ = res
    return FixSet(tuple(subset), rid), stats


def guided_fix(P: A.Program, task, solutions: Sequence, predict: Callable, budget: int = DEFAULT_BUDGET,
               max_rounds: int = 10, K: int = DEFAULT_K) -> tuple:
    """Repeatedly repair the error class the classifier ranks highest among the classes present.

    ``predict(program) -> probability vector`` over the task's classes.  Each round
    diffs the current program against its closest reference, keeps corrections
    tagged with the chosen class and tries their subsets by ascending size.  When
    no subset finishes the repair the whole group is applied and the next round
    starts from the patched program.  Without any tagged correction the search
    falls back to enumerative search on the remaining budget.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    stats = SearchStats()
    t0 = time.perf_counter()
    ev = _Evaluator(task, budget, stats)

    def done(final: Optional[A.Program]):
        stats.wall_ms = (time.perf_counter() - t0) * 1e3
        if final is None:
            return None, stats
        fix = FixSet(tuple(generate_discrepancies(P, final)), "")
        return fix, stats

    if task.is_correct(P):
        return done(P)
    cur = P
    for _ in range(max_rounds):
        stats.rounds += 1
        rid, ref = identify_candidates(cur, solutions, K)[0]
        stats.references_tried.append(rid)
        C = generate_discrepancies(cur, ref, task)
        present = {c.tag for c in C if c.tag is not None}
        if not present:
            break
        probs = np.asarray(predict(cur), dtype=float)
        order = {name: i for i, name in enumerate(task.classes)}
        choice = max(sorted(present), key=lambda t: probs[order[t]])
        group = [c for c in C if c.tag == choice]
        for size in range(1, len(group) + 1):
            for subset in itertools.combinations(group, size):
                if ev.left <= 0:
                    stats.exhausted = True
                    return done(None)
                fixed = ev(cur, subset)
                if fixed is not None:
                    return done(fixed)
        try:
            cur = apply_edits(cur, group)
        except (LangError, ConflictingAnchors, InvalidAnchor):
            break
    stats.fallback = True
    if ev.left <= 0:
        stats.exhausted = True
        return done(None)
    res = _enumerate(cur, task, solutions, ev, K)
    if res is None:
        return done(None)
    return done(res[2])
