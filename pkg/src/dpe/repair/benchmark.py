"""Composed multi-error programs and the enumerative-vs-guided repair benchmark."""

from __future__ import annotations

import csv
import hashlib
import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from ..edits import ConflictingAnchors, InvalidAnchor, apply_edits
from ..lang.errors import LangError
from ..lang.parser import parse
from ..lang.printer import pretty_print
from .discrepancy import generate_discrepancies
from .search import enumerative_fix, guided_fix

DEFAULT_BUCKETS = ((1, 2), (3, 5), (6, 7))
CSV_FIELDS = ["program_id", "errors", "method", "found", "fix_size", "subsets_evaluated", "wall_ms"]


@dataclass
class ComposedProgram:
    id: str
    errors: int
    reference: str  # name of the reference the program was derived from
    source: str
    reference_source: str = ""  # set when that reference is not a bundled one (e.g. a diversified variant)

    def program(self):
        return parse(self.source)


def _seed(*parts) -> int:
    return int.from_bytes(hashlib.sha256("\0".join(map(str, parts)).encode()).digest()[:8], "little")


def _independent(chosen: list, site) -> bool:
    """No shared anchor, and nothing nested under a statement that is deleted or fully replaced."""
    def key(x):
        return (x.kind == "insert", x.path)

    def covers(outer, inner) -> bool:
        # a header-only rewrite leaves the statement's blocks alone
        if outer.kind == "insert" or (outer.kind == "modify" and outer.header_only):
            return False
        n = len(outer.path)
        return len(inner.path) > n and inner.path[:n] == outer.path

    for c in chosen:
        if key(c) == key(site):
            return False
        if c.kind != "insert" and site.kind != "insert" and c.path == site.path:
            return False
        if covers(c, site) or covers(site, c):
            return False
    return True


def compose_mutant(task, errors: int, rng: random.Random, reference: Optional[tuple] = None) -> Optional[tuple]:
    """Inject ``errors`` mutator rewrites at unrelated statements of one reference.

    Returns (reference name, program) when the result is incorrect and diffs
    against its reference in exactly ``errors`` corrections, else None.
    """
    name, ref = reference or task.references[rng.randrange(len(task.references))]
    sites = [s for m in task.mutators for s in m.sites(ref)]
    rng.shuffle(sites)
    chosen = []
    for s in sites:
        if _independent(chosen, s):
            chosen.append(s)
        if len(chosen) == errors:
            break
    if len(chosen) < errors:
        return None
    try:
        prog = apply_edits(ref, [s.correction() for s in chosen])
    except (LangError, ConflictingAnchors, InvalidAnchor):
        return None
    if len(generate_discrepancies(prog, ref)) != errors or task.is_correct(prog):
        return None
    return name, prog


def compose_benchmark(task, per_bucket: int = 100, buckets: Sequence = DEFAULT_BUCKETS, seed: int = 0,
                      max_attempts: int = 200) -> list:
    """``per_bucket`` distinct composed programs per error-count bucket (counts spread evenly)."""
    out = []
    seen = {pretty_print(p) for _, p in task.references}
    for lo, hi in buckets:
        got = 0
        attempt = 0
        while got < per_bucket:
            errors = lo + got % (hi - lo + 1)
            if attempt >= per_bucket * max_attempts:
                raise RuntimeError(f"{task.id}: could not compose {per_bucket} programs with {lo}-{hi} errors")
            rng = random.Random(_seed(seed, task.id, lo, hi, attempt))
            attempt += 1
            res = compose_mutant(task, errors, rng)
            if res is None:
                continue
            name, prog = res
            src = pretty_print(prog)
            if src in seen:
                continue
            seen.add(src)
            out.append(ComposedProgram(f"{task.id}-{lo}_{hi}-{got:03d}", errors, name, src))
            got += 1
    return out


def run_benchmark(programs: Sequence[ComposedProgram], task, methods: Sequence[str] = ("enum", "guided"),
                  predict: Optional[Callable] = None, budget: int = 5_000, verify: bool = True) -> list:
    """One CSV row dict per (program, method)."""
    rows = []
    for cp in programs:
        prog = cp.program()
        solutions = list(task.references)
        if cp.reference_source:
            solutions.append((cp.reference, parse(cp.reference_source)))
        for method in methods:
            if method == "enum":
                fix, stats = enumerative_fix(prog, task, solutions, budget)
            elif method == "guided":
                if predict is None:
                    raise ValueError("guided repair needs a predictor")
                fix, stats = guided_fix(prog, task, solutions, predict, budget)
            else:
                raise ValueError(f"unknown repair method {method!r}")
            if fix is not None and verify and not task.is_correct(fix.apply(prog)):
                raise AssertionError(f"{method} returned an incorrect fix for {cp.id}")
            rows.append({
                "program_id": cp.id,
                "errors": cp.errors,
                "method": method,
                "found": fix is not None,
                "fix_size": fix.size if fix is not None else "",
                "subsets_evaluated": stats.subsets_evaluated,
                "wall_ms": round(stats.wall_ms, 3),
                "fallback": stats.fallback,
            })
    return rows


def bucket_of(errors: int, buckets: Sequence = DEFAULT_BUCKETS) -> str:
    for lo, hi in buckets:
        if lo <= errors <= hi:
            return f"{lo}-{hi}"
    return str(errors)


def summarize(rows: Sequence[dict], buckets: Sequence = DEFAULT_BUCKETS) -> list:
    """Mean subsets evaluated and success rate per (bucket, method)."""
    acc: dict = {}
    for r in rows:
        k = (bucket_of(int(r["errors"]), buckets), r["method"])
        a = acc.setdefault(k, [0, 0, 0])
        a[0] += 1
        a[1] += int(str(r["found"]) == "True")
        a[2] += int(r["subsets_evaluated"])
    return [{"bucket": b, "method": m, "programs": n, "found": f, "mean_subsets": s / n}
            for (b, m), (n, f, s) in sorted(acc.items())]


def write_rows(rows: Sequence[dict], path, fields: Sequence[str] = CSV_FIELDS) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=list(fields), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
