"""Task, test-suite and mutator containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional

from ..edits import Correction, apply_edits, make_correction
from ..lang import ast as A
from ..lang.interp import ExecResult, Verdict, execute
from ..lang.parser import parse
from ..lang.printer import header_str, stmt_str


class UnknownTask(KeyError):
    pass


class NotApplicable(ValueError):
    pass


@dataclass(frozen=True)
class TestCase:
    inputs: tuple
    expected: str  # full printed output, newline-terminated lines


@dataclass
class Site:
    """One concrete rewrite a mutator can perform on a program."""

    mutator: str
    kind: str  # "modify" | "insert" | "delete"
    path: tuple
    stmt: Optional[A.Stmt] = None
    header_only: bool = False

    def correction(self) -> Correction:
        return make_correction(self.kind, self.path, self.stmt, self.header_only)

    def text(self) -> str:
        if self.stmt is None:
            return ""
        return header_str(self.stmt) if self.header_only else stmt_str(self.stmt)


@dataclass
class Mutator:
    id: str
    label: int
    sites_fn: Callable[[A.Program], list]

    def sites(self, prog: A.Program) -> list:
        return [Site(self.id, k, p, s, h) for k, p, s, h in self.sites_fn(prog)]

    def applicable(self, prog: A.Program) -> bool:
        return bool(self.sites(prog))

    def apply(self, prog: A.Program, site: Site) -> A.Program:
        return apply_edits(prog, [site.correction()])


@dataclass
class Task:
    id: str
    entry: str
    references: list  # [(name, Program)]
    suite: list  # [TestCase]
    trace_inputs: list  # list of input tuples
    classes: list  # class names, index = label
    mutators: list = field(default_factory=list)
    behavior: Optional[Callable] = None  # outputs -> class index or None
    budget: int = 10_000

    def run_suite(self, prog: A.Program, stop_on_fail: bool = False) -> list:
        """ExecResult per test case (shortened when ``stop_on_fail`` hits a failure)."""
        out = []
        for tc in self.suite:
            r = execute(prog, list(tc.inputs), budget=self.budget, trace=False)
            out.append(r)
            if stop_on_fail and not passes(r, tc):
                break
        return out

    def is_correct(self, prog: A.Program) -> bool:
        for tc in self.suite:
            r = execute(prog, list(tc.inputs), budget=self.budget, trace=False)
            if not passes(r, tc):
                return False
        return True

    def classify_behavior(self, prog: A.Program) -> Optional[int]:
        results = self.run_suite(prog)
        if all(passes(r, tc) for r, tc in zip(results, self.suite)):
            return None
        return self.behavior(self, results)

    def mutators_for(self, label: int) -> list:
        return [m for m in self.mutators if m.label == label]


def passes(r: ExecResult, tc: TestCase) -> bool:
    return r.verdict == Verdict.COMPLETED and r.output == tc.expected


def output_of(r: ExecResult) -> Optional[str]:
    """Printed text of a completed run, None for runs that errored."""
    return r.output if r.verdict == Verdict.COMPLETED else None


def load_program(name: str) -> A.Program:
    src = resources.files("dpe.tasks").joinpath("programs", name).read_text()
    return parse(src)


def program_source(name: str) -> str:
    return resources.files("dpe.tasks").joinpath("programs", name).read_text()
