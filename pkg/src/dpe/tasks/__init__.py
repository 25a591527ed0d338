"""Bundled exercises, their test suites and error-class mutators."""

from __future__ import annotations

from functools import lru_cache

from .base import Mutator, NotApplicable, Site, Task, TestCase, UnknownTask, load_program, passes

TASK_IDS = ("Chessboard", "CountParentheses", "BinaryDigits")


@lru_cache(maxsize=None)
def _load(task_id: str) -> Task:
    if task_id == "Chessboard":
        from .chessboard import make_task
    elif task_id == "CountParentheses":
        from .parens import make_task
    elif task_id == "BinaryDigits":
        from .binary import make_task
    else:
        raise UnknownTask(task_id)
    return make_task()


def load_task(task_id: str) -> Task:
    if task_id not in TASK_IDS:
        raise UnknownTask(task_id)
    return _load(task_id)


__all__ = [
    "TASK_IDS", "load_task", "Task", "TestCase", "Mutator", "Site", "UnknownTask", "NotApplicable",
    "load_program", "passes",
]
