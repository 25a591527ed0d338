"""End-to-end acceptance checks, one test (or one test per task) per criterion.

Each criterion writes a PASS/FAIL line into the terminal summary. The model
and repair criteria run at desk scale and take most of the suite's wall time.
"""

from __future__ import annotations

import subprocess
import sys
import time
from pathlib import Path

import pytest

from conftest import CRITERIA
from dpe import cli
from dpe.encoding import BOTTOM_TOK, project_state_traces
from dpe.lang import display, execute
from dpe.models import ARCHITECTURES, DYNAMIC, SYNTAX, ModelConfig, evaluate, train
from dpe.repair.benchmark import bucket_of, compose_benchmark, run_benchmark
from dpe.tasks import TASK_IDS, load_task
from dpe.tasks.base import load_program
from dpe.tasks.generate import generate_dataset
from test_lang import BUBBLE_ROWS, INSERTION_ROWS

TESTS = Path(__file__).parent

# desk-scale settings shared by the classification and repair criteria
DESK = dict(embedding_dim=32, hidden=64, state_hidden=32, epochs=30, lr=3e-3, patience=6)
CORPUS, CORPUS_SEED = 2500, 1

_models: dict = {}
_classification: dict = {}


def record(n: int, ok: bool, detail: str) -> None:
    CRITERIA[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"


def run_pytest(*selectors: str) -> tuple:
    t = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *selectors],
                          cwd=TESTS.parent, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
    return proc.returncode == 0, time.perf_counter() - t, tail


def corpus(task):
    C = len(task.classes)
    counts = [CORPUS // C + (i < CORPUS % C) for i in range(C)]
    recs = generate_dataset(task, counts, seed=CORPUS_SEED)
    return {s: [r for r in recs if r.split == s] for s in ("train", "val", "test")}


def desk_model(task, arch, splits):
    cfg = ModelConfig(architecture=arch, classes=len(task.classes), **DESK)
    model, _ = train(splits["train"], splits["val"], cfg, task=task.id)
    return model


# ------------------------------------------------------------------ 1. trace fidelity


def test_criterion_1_trace_fidelity():
    t = time.perf_counter()
    runs = {n: execute(load_program(f"{n}.mini"), [[8, 5, 1, 4, 3]]) for n in ("bubble", "insertion")}
    mx = execute(load_program("max.mini"), [[1, 5, 3]])
    elapsed = time.perf_counter() - t
    cols = {n: [display(e.value) for e in r.trace if e.var == "A"] for n, r in runs.items()}
    var_cols = {v: [display(e.value) for e in mx.trace if e.var == v] for v in ("max_val", "item")}
    states = project_state_traces(mx.trace, ["max_val", "item"]).states
    checks = {
        "bubble column": cols["bubble"] == BUBBLE_ROWS,
        "insertion column": cols["insertion"] == INSERTION_ROWS,
        "row 5 divergence": (cols["bubble"][4], cols["insertion"][4]) == ("[1,1,8,4,3]", "[5,1,4,4,3]")
        and cols["bubble"][:4] == cols["insertion"][:4],
        "variable column": var_cols == {"max_val": ["-inf", "1", "5"], "item": ["1", "5", "3"]},
        "state column": states == [("-inf", BOTTOM_TOK), ("-inf", "1"), ("1", "1"), ("1", "5"), ("5", "5"),
                                   ("5", "3")],
        "under 1 s": elapsed < 1.0,
    }
    bad = [k for k, v in checks.items() if not v]
    record(1, not bad, f"{elapsed * 1000:.0f} ms" + (f"; failed: {', '.join(bad)}" if bad else ""))
    assert not bad


# ------------------------------------------------------------------ 2. numerical soundness


def test_criterion_2_numerical_soundness():
    ok, secs, tail = run_pytest(
        "tests/test_nn.py", "-k", "gradient or softmax or pool",
        "tests/test_models.py::test_end_to_end_finite_differences",
    )
    record(2, ok and secs < 60, f"{secs:.1f} s, {tail}")
    assert ok, tail
    assert secs < 60


# ------------------------------------------------------------------ 3. classification


@pytest.mark.parametrize("tid", TASK_IDS)
def test_criterion_3_classification(tid):
    task = load_task(tid)
    t = time.perf_counter()
    splits = corpus(task)
    acc = {}
    for arch in ARCHITECTURES:
        model = desk_model(task, arch, splits)
        acc[arch] = evaluate(model, splits["test"])["accuracy"]
        if arch == "DependencyEnforcement":
            _models[tid] = model
    secs = time.perf_counter() - t
    best_syntax = max(acc[a] for a in SYNTAX)
    floor_ok = all(acc[a] >= 0.85 for a in DYNAMIC)
    gap_ok = all(acc[a] - best_syntax >= 0.30 for a in DYNAMIC)
    _classification[tid] = (floor_ok and gap_ok and secs <= 1800,
                            f"{tid} [{' '.join(f'{a}={acc[a]:.3f}' for a in ARCHITECTURES)}] "
                            f"gap={min(acc[a] for a in DYNAMIC) - best_syntax:+.3f} {secs / 60:.1f} min")
    record(3, all(v[0] for v in _classification.values()) and len(_classification) == len(TASK_IDS),
           " | ".join(v[1] for v in _classification.values()))
    assert floor_ok, acc
    assert gap_ok, acc
    assert secs <= 1800


# ------------------------------------------------------------------ 4. repair speedup


def test_criterion_4_repair_speedup():
    task = load_task("Chessboard")
    if "Chessboard" not in _models:
        _models["Chessboard"] = desk_model(task, "DependencyEnforcement", corpus(task))
    predict = _models["Chessboard"].program_predictor(task)
    t = time.perf_counter()
    programs = compose_benchmark(task, per_bucket=100, seed=0)
    rows = run_benchmark(programs, task, predict=predict, budget=5_000)  # raises on any incorrect fix
    secs = time.perf_counter() - t
    mean: dict = {}
    found: dict = {}
    for b in ("1-2", "3-5", "6-7"):
        for m in ("enum", "guided"):
            sel = [r for r in rows if bucket_of(r["errors"]) == b and r["method"] == m]
            mean[b, m] = sum(r["subsets_evaluated"] for r in sel) / len(sel)
            found[b, m] = sum(r["found"] for r in sel)
    ratio = {b: mean[b, "enum"] / mean[b, "guided"] for b in ("1-2", "3-5", "6-7")}
    ok = ratio["3-5"] >= 5 and ratio["6-7"] >= 10 and secs <= 1200
    detail = " ".join(f"{b}: enum {mean[b, 'enum']:.1f} guided {mean[b, 'guided']:.1f} ({ratio[b]:.1f}x, "
                      f"found {found[b, 'enum']}/{found[b, 'guided']})" for b in ratio)
    record(4, ok, f"{detail}; {secs / 60:.1f} min")
    assert ratio["3-5"] >= 5, detail
    assert ratio["6-7"] >= 10, detail
    assert secs <= 1200


# ------------------------------------------------------------------ 5. oracle equivalence


def test_criterion_5_oracle_equivalence():
    ok, secs, tail = run_pytest(
        "tests/test_encoding.py::test_dtw_matches_alignment_enumeration_exhaustively",
        "tests/test_repair.py::test_enumerative_fix_is_minimal_exhaustively",
        "tests/test_dependency.py::test_dependency_soundness_by_perturbation",
        "tests/test_dependency.py::test_some_programs_qualify_for_perturbation",
    )
    record(5, ok, f"{secs:.1f} s, {tail}")
    assert ok, tail


# ------------------------------------------------------------------ 6. determinism


def snapshot_dir(d: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


def test_criterion_6_determinism(tmp_path, capsys):
    data, run = tmp_path / "data", tmp_path / "run"
    cfg = tmp_path / "c.json"
    cfg.write_text('{"tasks": ["CountParentheses"], "counts": 10, "seed": 4, '
                   '"model": {"embedding_dim": 8, "hidden": 8, "layers": 1, "epochs": 3, "state_hidden": 8}}')
    snaps = []
    for _ in range(2):
        assert cli.main(["gen-data", "--config", str(cfg), "--out", str(data)]) == 0
        assert cli.main(["train", "--config", str(cfg), "--arch", "DependencyEnforcement", "--data", str(data),
                         "--out", str(run)]) == 0
        assert cli.main(["eval", "--checkpoint", str(run / "model.dpe"), "--data", str(data)]) == 0
        snaps.append((snapshot_dir(data), snapshot_dir(run)))
    (d1, r1), (d2, r2) = snaps
    same = d1 == d2 and r1 == r2
    files = [f"data/{k}" for k in sorted(d1)] + [f"run/{k}" for k in sorted(r1)]
    record(6, same, f"{len(files)} files byte-identical across reruns: {', '.join(files)}" if same
           else "rerun differs: " + ", ".join(k for k in d1 if d1[k] != d2.get(k)) +
           " " + ", ".join(k for k in r1 if r1[k] != r2.get(k)))
    assert same
    assert {"metrics.csv", "eval.csv", "confusion.csv", "model.dpe"} <= set(r1)
