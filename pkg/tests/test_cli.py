from __future__ import annotations

import argparse
import csv
import json
from pathlib import Path

from dpe import cli
from dpe.encoding import Vocabulary
from dpe.tasks.generate import DatasetRecord, read_jsonl, write_jsonl
from test_lang import BUBBLE_ROWS


def rows(path: Path) -> list:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def header(path: Path) -> list:
    with open(path, newline="", encoding="utf-8") as f:
        return next(csv.reader(f))


def write_config(path: Path, **d) -> Path:
    path.write_text(json.dumps(d), encoding="utf-8")
    return path


# ------------------------------------------------------------------ run


def test_run_trace_matches_bubble_column(capsys):
    assert cli.main(["run", "bubble", "--input", "[8,5,1,4,3]", "--trace"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["verdict"] == "Completed" and data["output"] == "[1,3,4,5,8]\n"
    assert [e["value"] for e in data["trace"] if e["var"] == "A"] == BUBBLE_ROWS
    assert [e["seq"] for e in data["trace"]] == list(range(len(data["trace"])))


def test_run_chessboard_prints_board(capsys):
    assert cli.main(["run", "chess_a"]) == 0
    assert capsys.readouterr().out.splitlines() == ["XOXOXOXO", "OXOXOXOX"] * 4


def test_run_exit_codes(tmp_path, capsys):
    broken = tmp_path / "broken.mini"
    broken.write_text("fn f() {\n  int x = ;\n}\n")
    assert cli.main(["run", str(broken)]) == 1
    assert "line 2" in capsys.readouterr().err
    crash = tmp_path / "crash.mini"
    crash.write_text("fn f() { int x = 1 / 0; }")
    assert cli.main(["run", str(crash)]) == 1
    spin = tmp_path / "spin.mini"
    spin.write_text("fn f() { while (true) { } }")
    assert cli.main(["run", str(spin), "--budget", "100"]) == 2
    assert cli.main(["run", "no_such_program"]) == 1
    assert cli.main(["run", "max", "--input", "[1,"]) == 1


# ------------------------------------------------------------------ config


def ns(**kw):
    base = dict(config=None, seed=None, total=None, out=None, architecture=None, task=None, counts=None,
                epochs=None, batch_size=None, embedding_dim=None, hidden=None, lr=None)
    base.update(kw)
    return argparse.Namespace(**base)


def test_config_precedence(tmp_path, monkeypatch):
    cfgp = write_config(tmp_path / "c.json", seed=3, model={"hidden": 9})
    monkeypatch.delenv("DPE_SEED", raising=False)
    assert cli.load_config(ns(config=str(cfgp))).seed == 3
    monkeypatch.setenv("DPE_SEED", "11")
    assert cli.load_config(ns(config=str(cfgp))).seed == 11
    c = cli.load_config(ns(config=str(cfgp), seed=5, hidden=4))
    assert c.seed == 5 and c.model["hidden"] == 4


def test_bad_config_is_an_input_error(tmp_path):
    cfgp = write_config(tmp_path / "c.json", colour="blue")
    assert cli.main(["gen-data", "--config", str(cfgp), "--out", str(tmp_path / "o")]) == 1
    assert cli.main(["gen-data", "--config", str(tmp_path / "missing.json")]) == 1


# ------------------------------------------------------------------ gen-data


def gen(tmp_path, out, task="Chessboard", counts=2, seed=7):
    return cli.main(["gen-data", "--task", task, "--counts", str(counts), "--seed", str(seed), "--out", str(out)])


def test_gen_data_is_byte_identical_across_reruns(tmp_path, capsys):
    out = tmp_path / "d"
    assert gen(tmp_path, out) == 0
    first = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    assert set(first) == {"Chessboard.jsonl", "Chessboard.vocab.json", "manifest.json", "config.json"}
    assert gen(tmp_path, out) == 0
    assert {p.name: p.read_bytes() for p in sorted(out.iterdir())} == first


def test_gen_data_800_lines_and_manifest_hash(tmp_path, capsys):
    out = tmp_path / "d"
    assert gen(tmp_path, out, task="BinaryDigits", counts=160, seed=1) == 0
    lines = (out / "BinaryDigits.jsonl").read_text().splitlines()
    assert len(lines) == 800
    man = json.loads((out / "manifest.json").read_text())
    info = man["datasets"]["BinaryDigits"]
    assert info["records"] == 800 and info["splits"] == {"train": 640, "val": 80, "test": 80}
    assert Vocabulary.load(out / "BinaryDigits.vocab.json").content_hash() == info["vocab_hash"]
    recomputed = cli.value_vocab(read_jsonl(out / "BinaryDigits.jsonl")).content_hash()
    assert recomputed == info["vocab_hash"]
    assert json.loads((out / "config.json").read_text()) == man["config"]


# ------------------------------------------------------------------ train / eval / compare


def toy_dataset(path: Path) -> Path:
    """Separable by the first traced token; split 60/10/20."""
    recs = []
    for i in range(90):
        label = i % 2
        toks = ["a" if label else "b", str(i % 5), str(i % 3)]
        split = "train" if i < 60 else "val" if i < 70 else "test"
        recs.append(DatasetRecord("", "Chessboard", label, {"variable": {"x": toks}}, split=split))
    path.mkdir(parents=True, exist_ok=True)
    write_jsonl(recs, path / "Chessboard.jsonl")
    return path


TOY_MODEL = {"embedding_dim": 8, "hidden": 8, "layers": 1, "batch_size": 8, "lr": 0.01, "epochs": 40, "patience": 40}


def test_train_eval_toy_separable(tmp_path, capsys):
    data = toy_dataset(tmp_path / "data")
    cfgp = write_config(tmp_path / "c.json", tasks=["Chessboard"], model=TOY_MODEL)
    run = tmp_path / "run"
    assert cli.main(["train", "--config", str(cfgp), "--arch", "VariableTrace", "--data", str(data),
                     "--out", str(run)]) == 0
    assert header(run / "metrics.csv") == ["epoch", "split", "loss", "accuracy"]
    assert cli.main(["eval", "--checkpoint", str(run / "model.dpe"), "--data", str(data)]) == 0
    (row,) = rows(run / "eval.csv")
    assert header(run / "eval.csv") == ["task", "arch", "split", "accuracy"]
    assert row["arch"] == "VariableTrace" and float(row["accuracy"]) >= 0.99
    assert header(run / "confusion.csv")[0] == "true\\predicted"
    man = json.loads((run / "manifest.json").read_text())
    assert man["architecture"] == "VariableTrace" and json.loads((run / "config.json").read_text()) == man["config"]


def test_eval_vocab_mismatch_and_missing_inputs(tmp_path, capsys):
    data = toy_dataset(tmp_path / "data")
    cfgp = write_config(tmp_path / "c.json", tasks=["Chessboard"], model=dict(TOY_MODEL, epochs=1))
    run = tmp_path / "run"
    assert cli.main(["train", "--config", str(cfgp), "--arch", "VariableTrace", "--data", str(data),
                     "--out", str(run)]) == 0
    (data / "manifest.json").write_text(json.dumps({"datasets": {"Chessboard": {"vocab_hash": "0" * 64}}}))
    assert cli.main(["eval", "--checkpoint", str(run / "model.dpe"), "--data", str(data)]) == 1
    assert "vocabulary" in capsys.readouterr().err
    assert cli.main(["eval", "--checkpoint", str(tmp_path / "none.dpe"), "--data", str(data)]) == 1
    assert cli.main(["compare", str(tmp_path / "nowhere"), "--out", str(tmp_path / "cmp")]) == 1


def test_compare_six_architectures(tmp_path):
    from dpe.models import ARCHITECTURES

    for tid in ("Chessboard", "BinaryDigits"):
        for k, arch in enumerate(ARCHITECTURES):
            d = tmp_path / "runs" / tid / arch
            d.mkdir(parents=True)
            with open(d / "eval.csv", "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["task", "arch", "split", "accuracy"])
                w.writerow([tid, arch, "test", f"{0.5 + k / 20:.6f}"])
                w.writerow([tid, arch, "val", "0.1"])
    assert cli.main(["compare", str(tmp_path / "runs"), "--out", str(tmp_path / "cmp")]) == 0
    t2 = tmp_path / "cmp" / "table2.csv"
    assert header(t2) == ["task", "arch", "accuracy"]
    got = rows(t2)
    for tid in ("Chessboard", "BinaryDigits"):
        assert [r["arch"] for r in got if r["task"] == tid] == list(ARCHITECTURES)


# ------------------------------------------------------------------ repair


def test_repair_guided_never_exceeds_enum_on_single_mutants(tmp_path, capsys):
    data = tmp_path / "data"
    assert gen(tmp_path, data, task="BinaryDigits", counts=2, seed=3) == 0
    cfgp = write_config(tmp_path / "c.json", tasks=["BinaryDigits"],
                        model={"embedding_dim": 4, "hidden": 4, "layers": 1, "epochs": 1, "state_hidden": 4})
    run = tmp_path / "run"
    assert cli.main(["train", "--config", str(cfgp), "--arch", "VariableTrace", "--data", str(data),
                     "--out", str(run)]) == 0
    rep = tmp_path / "rep"
    assert cli.main(["repair", "--task", "BinaryDigits", "--programs", str(data / "BinaryDigits.jsonl"),
                     "--split", "train", "--checkpoint", str(run / "model.dpe"), "--out", str(rep)]) == 0
    got = rows(rep / "repair.csv")
    assert header(rep / "repair.csv") == ["task", "program_id", "errors", "method", "found", "fix_size",
                                          "subsets_evaluated", "wall_ms"]
    by_prog: dict = {}
    for r in got:
        by_prog.setdefault(r["program_id"], {})[r["method"]] = r
    assert len(by_prog) == 10  # five classes, two records each
    for pid, m in by_prog.items():
        assert m["enum"]["found"] == "True" and m["guided"]["found"] == "True"
        assert int(m["guided"]["subsets_evaluated"]) <= int(m["enum"]["subsets_evaluated"])
    assert header(rep / "repair_summary.csv") == ["task", "bucket", "method", "programs", "found", "mean_subsets"]


def test_guided_repair_needs_checkpoint(tmp_path, capsys):
    assert cli.main(["repair", "--task", "Chessboard", "--method", "guided", "--per-bucket", "1",
                     "--out", str(tmp_path / "r")]) == 1
