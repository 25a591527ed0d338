"""Synthetic single-error datasets."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .. import encoding as E
from ..dependency import analyze, event_dependencies
from ..lang import ast as A
from ..lang.interp import execute
from ..lang.parser import parse
from ..lang.printer import header_str, pretty_print
from .base import Task
from .diversify import diversify


class InsufficientDiversity(RuntimeError):
    pass


@dataclass
class DatasetRecord:
    source: str
    task: str
    label: int
    traces: dict
    split: str = "train"
    reference: str = ""
    mutator: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "DatasetRecord":
        return cls(**json.loads(line))

    def program(self) -> A.Program:
        return parse(self.source)

    @property
    def key(self) -> str:
        return hashlib.sha256(f"{self.task}\0{self.label}\0{self.source}".encode()).hexdigest()


def compute_traces(prog: A.Program, task: Task, cap: int = E.MAX_TRACE_EVENTS) -> dict:
    """All trace views of ``prog`` on the task's trace inputs, runs joined by the separator."""
    runs, executed, verdicts = [], [], []
    for inputs in task.trace_inputs:
        r = execute(prog, list(inputs), budget=task.budget, record_executed=True)
        runs.append(r.trace)
        executed.append(r.executed)
        verdicts.append(r.verdict.value)
    runs, cut = E.cap_runs(runs, cap)
    var_view = E.variable_view_runs(runs)
    state_view = E.state_view_runs(runs, E.tracked_variables(prog))
    deps = analyze(prog)
    dep_runs = []
    for run in runs:
        ds = event_dependencies(deps, run)
        dep_runs.append([[ev.var, E.tokenize_value(ev.value), d] for ev, d in zip(run, ds)])
    by_id = prog.stmt_by_id()
    stmts, left = [], cap
    for ex in executed:
        ex = ex[:max(left, 0)]
        left -= len(ex)
        stmts.append([header_str(by_id[i]) for i in ex])
    return {
        "variable": var_view.traces,
        "state": {"vars": state_view.vars, "states": [list(s) for s in state_view.states]},
        "deps": dep_runs,
        "stmts": stmts,
        "verdicts": verdicts,
        "truncated": cut,
    }


def _derived_seed(*parts) -> int:
    h = hashlib.sha256("\0".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "little")


def mutate(prog: A.Program, mutator, rng: random.Random, task: Optional[Task] = None) -> A.Program:
    """Apply one randomly chosen rewrite of ``mutator``; raises NotApplicable when there is none.

    With ``task`` given, rewrites that leave the program passing its suite (a
    static site can be semantically dead, e.g. an unread character appended to
    a lookup string) are rejected and another site is drawn.
    """
    from .base import NotApplicable

    sites = mutator.sites(prog)
    rng.shuffle(sites)
    for site in sites:
        try:
            mut = mutator.apply(prog, site)
        except Exception:  # rewrites that break scoping count as rejected
            continue
        if task is None or not task.is_correct(mut):
            return mut
    raise NotApplicable(mutator.id)


def sample_mutant(task: Task, label: int, rng: random.Random, diversify_p: float = 0.5) -> Optional[tuple]:
    """One attempt at a (diversified reference, mutant, mutator id) triple for ``label``."""
    _, ref = task.references[rng.randrange(len(task.references))]
    ref = diversify(ref, rng, diversify_p)
    options = [(m, m.sites(ref)) for m in task.mutators_for(label)]
    options = [(m, s) for m, s in options if s]
    if not options:
        return None
    m, sites = options[rng.randrange(len(options))]
    site = sites[rng.randrange(len(sites))]
    try:
        mut = m.apply(ref, site)
    except Exception:  # rewrites that break scoping are simply resampled
        return None
    if task.classify_behavior(mut) != label:
        return None
    return ref, mut, m.id


def split_counts(n: int, ratios: Sequence[float]) -> list:
    """Per-split sizes for one class: rounded train/val, remainder to test."""
    sizes = [int(round(n * r)) for r in ratios[:-1]]
    sizes.append(n - sum(sizes))
    return sizes


SPLITS = ("train", "val", "test")


def generate_dataset(
    task: Task,
    counts,
    ratios: Sequence[float] = (0.8, 0.1, 0.1),
    seed: int = 0,
    max_attempts_per_record: int = 60,
    with_traces: bool = True,
) -> list:
    """Stratified, deduplicated single-error corpus, ordered by record hash."""
    if isinstance(counts, int):
        counts = {c: counts for c in range(len(task.classes))}
    elif not isinstance(counts, dict):
        counts = dict(enumerate(counts))
    if any(n < 1 for n in counts.values()):
        raise ValueError("every class needs a positive count")
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValueError("ratios must be three non-negative numbers summing to 1")
    seen = {pretty_print(p) for _, p in task.references}
    records = []
    for label in sorted(counts):
        want = counts[label]
        got = []
        attempt = 0
        while len(got) < want:
            if attempt >= want * max_attempts_per_record:
                raise InsufficientDiversity(
                    f"{task.id} class {task.classes[label]!r}: {len(got)}/{want} after {attempt} attempts")
            rng = random.Random(_derived_seed(seed, task.id, label, attempt))
            attempt += 1
            res = sample_mutant(task, label, rng)
            if res is None:
                continue
            ref, mut, mid = res
            src = pretty_print(mut)
            if src in seen:
                continue
            seen.add(src)
            got.append(DatasetRecord(src, task.id, label, {}, reference=pretty_print(ref), mutator=mid))
        order = list(range(len(got)))
        random.Random(_derived_seed(seed, task.id, label, "split")).shuffle(order)
        sizes = split_counts(len(got), ratios)
        bounds = [sum(sizes[:k + 1]) for k in range(3)]
        for rank, idx in enumerate(order):
            got[idx].split = SPLITS[next(k for k, b in enumerate(bounds) if rank < b)]
        records.extend(got)
    if with_traces:
        for r in records:
            r.traces = compute_traces(parse(r.source), task)
    records.sort(key=lambda r: r.key)
    return records


def write_jsonl(records: Sequence[DatasetRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(r.to_json() + "\n")


def read_jsonl(path) -> list:
    with open(path, encoding="utf-8") as f:
        return [DatasetRecord.from_json(line) for line in f if line.strip()]
