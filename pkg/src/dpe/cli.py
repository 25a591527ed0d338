"""``dpe`` command line: run programs, build datasets, train, evaluate, repair, compare.

Exit codes: 0 ok, 1 input error, 2 budget or resource exhaustion, 3 internal assertion.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .encoding import EmptyCorpus, Vocabulary, build_vocab
from .lang.errors import LangError
from .lang.interp import Verdict, display, execute
from .lang.parser import parse
from .models import ARCHITECTURES, DYNAMIC, ModelConfig, VocabMismatch, evaluate, fit_featurizer, load_model, \
    save_model, train, write_metrics
from .models.features import value_tokens
from .tasks import TASK_IDS, UnknownTask, load_task
from .tasks.base import program_source
from .tasks.generate import InsufficientDiversity, generate_dataset, read_jsonl, write_jsonl

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


class BudgetError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Everything needed to rerun one experiment; copied verbatim into each output directory."""

    tasks: list = field(default_factory=lambda: ["Chessboard"])
    architecture: str = "DependencyEnforcement"
    architectures: list = field(default_factory=lambda: list(ARCHITECTURES))
    model: dict = field(default_factory=dict)  # ModelConfig overrides
    counts: Optional[object] = None  # int per class, list per class, or None to use ``total``
    total: int = 2500
    ratios: list = field(default_factory=lambda: [0.8, 0.1, 0.1])
    seed: int = 0
    out: str = "out"
    repair: dict = field(default_factory=lambda: {"per_bucket": 100, "budget": 5000, "methods": ["enum", "guided"]})

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**d)
        for t in cfg.tasks:
            if t not in TASK_IDS:
                raise InputError(f"unknown task {t!r}")
        return cfg

    def class_counts(self, n_classes: int) -> list:
        if self.counts is None:
            base, rem = divmod(self.total, n_classes)
            return [base + (1 if i < rem else 0) for i in range(n_classes)]
        if isinstance(self.counts, int):
            return [self.counts] * n_classes
        if len(self.counts) != n_classes:
            raise InputError(f"counts lists {len(self.counts)} classes, task has {n_classes}")
        return list(self.counts)

    def model_config(self, arch: str, n_classes: int) -> ModelConfig:
        d = {"architecture": arch, "classes": n_classes, "seed": self.seed}
        d.update(self.model)
        d["architecture"], d["classes"] = arch, n_classes
        try:
            return ModelConfig.from_dict(d)
        except (TypeError, ValueError) as e:
            raise InputError(str(e)) from e


# ------------------------------------------------------------------ helpers


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest(out: Path, command: str, cfg: ExperimentConfig, files: Sequence[Path], extra: Optional[dict] = None):
    man = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": asdict(cfg),
        "files": {p.name: _sha256(p) for p in files},
    }
    man.update(extra or {})
    _write_json(out / "manifest.json", man)
    _write_json(out / "config.json", asdict(cfg))


def load_config(args) -> ExperimentConfig:
    """Config file, then DPE_SEED, then command-line flags (flags win)."""
    raw: dict = {}
    if getattr(args, "config", None):
        p = Path(args.config)
        if not p.exists():
            raise InputError(f"config file {p} not found")
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise InputError(f"config {p}: {e}") from e
    cfg = ExperimentConfig.from_dict(raw)
    if os.environ.get("DPE_SEED"):
        try:
            cfg.seed = int(os.environ["DPE_SEED"])
        except ValueError as e:
            raise InputError("DPE_SEED must be an integer") from e
    for name in ("seed", "total", "out", "architecture"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "task", None):
        cfg.tasks = list(args.task)
    if getattr(args, "counts", None) is not None:
        cfg.counts = args.counts
    for name in ("epochs", "batch_size", "embedding_dim", "hidden", "lr"):
        v = getattr(args, name, None)
        if v is not None:
            cfg.model[name] = v
    return cfg


def _resolve_program(name: str) -> str:
    p = Path(name)
    if p.exists():
        return p.read_text(encoding="utf-8")
    stem = name[:-5] if name.endswith(".mini") else name
    try:
        return program_source(stem + ".mini")
    except (FileNotFoundError, OSError) as e:
        raise InputError(f"program {name!r} not found") from e


def _dataset_file(data: Path, task: str) -> Path:
    p = data / f"{task}.jsonl" if data.is_dir() else data
    if not p.exists():
        raise InputError(f"dataset {p} not found")
    return p


def _read_manifest(data: Path) -> dict:
    p = (data if data.is_dir() else data.parent) / "manifest.json"
    return json.loads(p.read_text(encoding="utf-8")) if p.exists() else {}


# ------------------------------------------------------------------ commands


def cmd_run(args) -> int:
    src = _resolve_program(args.file)
    try:
        prog = parse(src)
    except LangError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        inputs = [json.loads(x) for x in args.input]
    except json.JSONDecodeError as e:
        raise InputError(f"--input must be JSON: {e}") from e
    try:
        r = execute(prog, inputs, budget=args.budget)
    except ValueError as e:
        raise InputError(str(e)) from e
    if args.trace:
        events = [{"seq": ev.seq, "var": ev.var, "value": display(ev.value), "stmt_id": ev.stmt_id} for ev in r.trace]
        print(json.dumps({"verdict": r.verdict.value, "output": r.output, "error": r.error, "trace": events}))
    else:
        sys.stdout.write(r.output)
        print(f"verdict: {r.verdict.value}" + (f" ({r.error})" if r.error else ""), file=sys.stderr)
    if r.verdict == Verdict.RUNTIME_ERROR:
        return EXIT_INPUT
    if r.verdict == Verdict.BUDGET_EXCEEDED:
        return EXIT_BUDGET
    return EXIT_OK


def value_vocab(records) -> Vocabulary:
    train_recs = [r for r in records if r.split == "train"]
    return build_vocab([value_tokens(r.traces) for r in train_recs])


def gen_data(cfg: ExperimentConfig, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files, info = [], {}
    for tid in cfg.tasks:
        task = load_task(tid)
        counts = cfg.class_counts(len(task.classes))
        try:
            recs = generate_dataset(task, counts, tuple(cfg.ratios), seed=cfg.seed)
        except InsufficientDiversity as e:
            raise BudgetError(str(e)) from e
        except ValueError as e:
            raise InputError(str(e)) from e
        path = out / f"{tid}.jsonl"
        write_jsonl(recs, path)
        vocab = value_vocab(recs)
        vpath = out / f"{tid}.vocab.json"
        vocab.save(vpath)
        files += [path, vpath]
        info[tid] = {
            "records": len(recs),
            "counts": counts,
            "splits": {s: sum(r.split == s for r in recs) for s in ("train", "val", "test")},
            "vocab_hash": vocab.content_hash(),
        }
    _manifest(out, "gen-data", cfg, files, {"datasets": info})
    return info


def cmd_gen_data(args) -> int:
    cfg = load_config(args)
    info = gen_data(cfg, Path(cfg.out))
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def _splits(path: Path) -> dict:
    recs = read_jsonl(path)
    return {s: [r for r in recs if r.split == s] for s in ("train", "val", "test")}


def train_one(cfg: ExperimentConfig, data: Path, tid: str, arch: str, out: Path):
    task = load_task(tid)
    sp = _splits(_dataset_file(data, tid))
    mcfg = cfg.model_config(arch, len(task.classes))
    feat = None
    vpath = (data if data.is_dir() else data.parent) / f"{tid}.vocab.json"
    if arch in DYNAMIC and vpath.exists():
        try:
            feat = fit_featurizer(arch, sp["train"], top_vars=mcfg.top_vars, value_vocab=Vocabulary.load(vpath))
        except EmptyCorpus as e:
            raise InputError(str(e)) from e
    model, history = train(sp["train"], sp["val"], mcfg, featurizer=feat, task=tid, class_names=task.classes)
    out.mkdir(parents=True, exist_ok=True)
    ck, mp = out / "model.dpe", out / "metrics.csv"
    save_model(model, ck)
    write_metrics(history, mp)
    return model, sp, [ck, mp]


def cmd_train(args) -> int:
    cfg = load_config(args)
    if len(cfg.tasks) != 1:
        raise InputError("train takes exactly one task")
    out = Path(cfg.out)
    model, _, files = train_one(cfg, Path(args.data), cfg.tasks[0], cfg.architecture, out)
    _manifest(out, "train", cfg, files, {"vocab_hash": model.featurizer.value_vocab_hash or model.vocab_hash,
                                         "task": cfg.tasks[0], "architecture": cfg.architecture})
    return EXIT_OK


def write_confusion(conf, names: Sequence[str], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["true\\predicted"] + list(names))
        for name, row in zip(names, conf):
            w.writerow([name] + [int(x) for x in row])


def eval_one(model, records, tid: str, expected_hash: Optional[str]) -> dict:
    if model.task and model.task != tid:
        raise InputError(f"checkpoint was trained on {model.task}, not {tid}")
    return evaluate(model, records, vocab_hash=expected_hash)


def cmd_eval(args) -> int:
    ck = Path(args.checkpoint)
    if not ck.exists():
        raise InputError(f"checkpoint {ck} not found")
    model = load_model(ck)
    data = Path(args.data)
    tid = model.task
    recs = [r for r in read_jsonl(_dataset_file(data, tid)) if r.split == args.split]
    man = _read_manifest(data)
    expected = man.get("datasets", {}).get(tid, {}).get("vocab_hash") if model.config.architecture in DYNAMIC else None
    m = eval_one(model, recs, tid, expected)
    out = Path(args.out) if args.out else ck.parent
    out.mkdir(parents=True, exist_ok=True)
    write_confusion(m["confusion"], model.class_names, out / "confusion.csv")
    with open(out / "eval.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["task", "arch", "split", "accuracy"])
        w.writerow([tid, model.config.architecture, args.split, f"{m['accuracy']:.6f}"])
    print(json.dumps({"task": tid, "arch": model.config.architecture, "split": args.split,
                      "accuracy": m["accuracy"]}))
    return EXIT_OK


def cmd_repair(args) -> int:
    from .repair.benchmark import ComposedProgram, compose_benchmark, run_benchmark, summarize, write_rows

    cfg = load_config(args)
    tid = cfg.tasks[0]
    task = load_task(tid)
    rep = dict(cfg.repair)
    if args.budget is not None:
        rep["budget"] = args.budget
    if args.per_bucket is not None:
        rep["per_bucket"] = args.per_bucket
    methods = ["enum", "guided"] if args.method == "both" else [args.method]
    if args.programs:
        p = Path(args.programs)
        if not p.exists():
            raise InputError(f"{p} not found")
        progs = [ComposedProgram(f"{r.task}-{i:04d}", 1, f"record-{i:04d}", r.source, r.reference)
                 for i, r in enumerate(read_jsonl(p)) if r.task == tid and r.split == args.split]
    else:
        progs = compose_benchmark(task, rep["per_bucket"], seed=cfg.seed)
    predict = None
    if "guided" in methods:
        if not args.checkpoint:
            raise InputError("guided repair needs --checkpoint")
        model = load_model(args.checkpoint)
        if model.task != tid:
            raise InputError(f"checkpoint was trained on {model.task}, not {tid}")
        predict = model.program_predictor(task)
    rows = run_benchmark(progs, task, methods, predict, rep["budget"])
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for r in rows:
        r["task"] = tid
    rp, sp = out / "repair.csv", out / "repair_summary.csv"
    write_rows(rows, rp, ["task", "program_id", "errors", "method", "found", "fix_size", "subsets_evaluated",
                          "wall_ms"])
    summ = summarize(rows)
    for s in summ:
        s["task"] = tid
    write_rows(summ, sp, ["task", "bucket", "method", "programs", "found", "mean_subsets"])
    _manifest(out, "repair", cfg, [rp, sp])
    print(json.dumps(summ))
    return EXIT_OK


def _read_csv(path: Path) -> list:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def cmd_compare(args) -> int:
    """Run directories in; per-task accuracy (table2.csv) and repair (table3.csv) summaries out."""
    from .repair.benchmark import summarize, write_rows

    acc_rows, rep_rows = [], []
    for d in args.runs:
        d = Path(d)
        if not d.exists():
            raise InputError(f"{d} not found")
        for p in sorted(d.rglob("eval.csv")):
            acc_rows += [r for r in _read_csv(p) if r["split"] == args.split]
        for p in sorted(d.rglob("repair.csv")):
            rep_rows += _read_csv(p)
    if not acc_rows and not rep_rows:
        raise InputError("no eval.csv or repair.csv under the given directories")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    acc_rows.sort(key=lambda r: (r["task"], ARCHITECTURES.index(r["arch"]) if r["arch"] in ARCHITECTURES else 99))
    write_rows(acc_rows, out / "table2.csv", ["task", "arch", "accuracy"])
    table3 = []
    for tid in sorted({r["task"] for r in rep_rows}):
        for s in summarize([r for r in rep_rows if r["task"] == tid]):
            s["task"] = tid
            table3.append(s)
    write_rows(table3, out / "table3.csv", ["task", "bucket", "method", "programs", "found", "mean_subsets"])
    return EXIT_OK


# ------------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpe", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model: bool = False):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--task", action="append", choices=TASK_IDS)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if model:
            p.add_argument("--arch", dest="architecture", choices=ARCHITECTURES)
            p.add_argument("--epochs", type=int)
            p.add_argument("--batch-size", type=int)
            p.add_argument("--embedding-dim", type=int)
            p.add_argument("--hidden", type=int)
            p.add_argument("--lr", type=float)

    p = sub.add_parser("run", help="execute a MiniImp program")
    p.add_argument("file", help="source path or bundled program name")
    p.add_argument("--input", action="append", default=[], help="JSON value for the next parameter")
    p.add_argument("--trace", action="store_true", help="print output, verdict and write events as JSON")
    p.add_argument("--budget", type=int, default=10_000)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("gen-data", help="synthesize a labelled dataset")
    common(p)
    p.add_argument("--total", type=int)
    p.add_argument("--counts", type=int, help="records per class")
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="train one architecture")
    common(p, model=True)
    p.add_argument("--data", required=True, help="gen-data output directory or JSONL file")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("repair", help="enumerative and guided repair benchmark")
    common(p)
    p.add_argument("--method", default="both", choices=("enum", "guided", "both"))
    p.add_argument("--checkpoint")
    p.add_argument("--programs", help="JSONL of buggy programs (default: composed multi-error benchmark)")
    p.add_argument("--split", default="test")
    p.add_argument("--budget", type=int)
    p.add_argument("--per-bucket", type=int)
    p.set_defaults(fn=cmd_repair)

    p = sub.add_parser("compare", help="aggregate eval/repair CSVs into summary tables")
    p.add_argument("runs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test")
    p.set_defaults(fn=cmd_compare)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, UnknownTask, VocabMismatch, LangError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except AssertionError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
