"""Training loop, evaluation and checkpointing for the program classifiers."""

from __future__ import annotations

import csv
import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..nn import checkpoint
from ..nn import tensor as T
from ..nn.optim import Adam
from .arch import Classifier, ModelConfig
from .features import DYNAMIC, Featurizer, batch_length, fit_featurizer, make_batch


class EmptyDataset(ValueError):
    pass


class DivergedLoss(RuntimeError):
    pass


class VocabMismatch(ValueError):
    pass


@dataclass
class Model:
    """A classifier together with the featurizer that produced its inputs."""

    config: ModelConfig
    featurizer: Featurizer
    classifier: Classifier
    task: str = ""
    class_names: list = field(default_factory=list)

    @property
    def params(self):
        return self.classifier.params

    @property
    def vocab_hash(self) -> str:
        return self.featurizer.vocab.content_hash()

    def encode(self, records: Sequence) -> list:
        return [self.featurizer.encode(r) for r in records]

    def predict_proba(self, records: Sequence, batch_size: int = 128) -> np.ndarray:
        enc = self.encode(records)
        out = []
        for lo in range(0, len(enc), batch_size):
            out.append(self.classifier.predict_proba(make_batch(self.config.architecture, enc[lo:lo + batch_size])))
        return np.concatenate(out, axis=0) if out else np.zeros((0, self.config.classes))

    def program_predictor(self, task) -> Callable:
        """``predict(program) -> probabilities``, computing traces on the task's trace inputs."""
        from ..lang.printer import pretty_print
        from ..tasks.generate import DatasetRecord, compute_traces

        def predict(prog):
            traces = compute_traces(prog, task) if self.config.architecture in DYNAMIC or \
                self.config.architecture == "SyntacticTraceRnn" else {}
            rec = DatasetRecord(pretty_print(prog), task.id, 0, traces)
            return self.predict_proba([rec])[0]

        return predict


def _extra(feat: Featurizer) -> int:
    if feat.arch == "DependencyEnforcement":
        return len(feat.canon.names())
    if feat.arch == "AstRecursive":
        return len(feat.prods)
    return 0


def build_model(cfg: ModelConfig, feat: Featurizer, task: str = "", class_names: Sequence = ()) -> Model:
    clf = Classifier(cfg, len(feat.vocab), _extra(feat))
    return Model(cfg, feat, clf, task, list(class_names))


def _batches(arch: str, enc: list, labels: np.ndarray, size: int, rng: random.Random, shuffle: bool):
    """Minibatches of similar length: shuffle, then sort within pools of 8 batches."""
    idx = list(range(len(enc)))
    if shuffle:
        rng.shuffle(idx)
    pool = size * 8
    out = []
    for lo in range(0, len(idx), pool):
        chunk = sorted(idx[lo:lo + pool], key=lambda i: batch_length(arch, enc[i]))
        out += [chunk[j:j + size] for j in range(0, len(chunk), size)]
    if shuffle:
        rng.shuffle(out)
    for b in out:
        yield make_batch(arch, [enc[i] for i in b]), labels[b]


def evaluate_encoded(model: Model, enc: list, labels: np.ndarray, batch_size: int = 128) -> dict:
    if not enc:
        raise EmptyDataset("cannot evaluate an empty split")
    C = model.config.classes
    conf = np.zeros((C, C), dtype=np.int64)
    total_loss = 0.0
    for lo in range(0, len(enc), batch_size):
        batch = make_batch(model.config.architecture, enc[lo:lo + batch_size])
        y = labels[lo:lo + batch_size]
        with T.no_grad():
            loss, probs = model.classifier.loss(batch, y)
        total_loss += float(loss.data) * len(y)
        np.add.at(conf, (y, probs.argmax(axis=1)), 1)
    n = len(enc)
    return {"accuracy": float(np.trace(conf)) / n, "loss": total_loss / n, "confusion": conf}


def evaluate(model: Model, records: Sequence, vocab_hash: Optional[str] = None) -> dict:
    """Top-1 accuracy, mean loss and confusion matrix (rows = true class) on ``records``."""
    if not records:
        raise EmptyDataset("cannot evaluate an empty split")
    if vocab_hash is not None:
        mine = model.featurizer.value_vocab_hash or model.vocab_hash
        if mine != vocab_hash:
            raise VocabMismatch(f"model vocabulary {mine} != dataset vocabulary {vocab_hash}")
    labels = np.array([r.label for r in records], dtype=np.int64)
    return evaluate_encoded(model, model.encode(records), labels)


def train(
    train_records: Sequence,
    val_records: Sequence,
    config: ModelConfig,
    featurizer: Optional[Featurizer] = None,
    task: str = "",
    class_names: Sequence = (),
    log: Optional[Callable[[dict], None]] = None,
    time_limit_s: Optional[float] = None,
) -> tuple:
    """Fit a classifier; returns (Model at its best validation epoch, metric history rows).

    History rows are dicts with keys epoch, split, loss, accuracy; zero
    epochs gives an empty history.  Training stops after ``patience`` epochs
    without a validation improvement, or when ``time_limit_s`` is spent.
    """
    config.validate()
    if not train_records:
        raise EmptyDataset("training split is empty")
    feat = featurizer or fit_featurizer(config.architecture, train_records, top_vars=config.top_vars)
    model = build_model(config, feat, task, class_names)
    arch = config.architecture
    enc_tr = model.encode(train_records)
    y_tr = np.array([r.label for r in train_records], dtype=np.int64)
    enc_va = model.encode(val_records) if val_records else []
    y_va = np.array([r.label for r in val_records], dtype=np.int64)
    if y_tr.max() >= config.classes or y_tr.min() < 0:
        raise ValueError("label outside the configured class range")

    history: list = []

    def record(epoch: int, split: str, m: dict) -> None:
        row = {"epoch": epoch, "split": split, "loss": m["loss"], "accuracy": m["accuracy"]}
        history.append(row)
        if log:
            log(row)

    if config.epochs == 0:
        return model, history

    opt = Adam(model.params, lr=config.lr, clip_norm=config.clip_norm)
    rng = random.Random(config.seed)
    best_acc, best_params, stale = -1.0, model.params.copy_data(), 0
    t0 = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        tot, correct, n = 0.0, 0, 0
        for batch, y in _batches(arch, enc_tr, y_tr, config.batch_size, rng, shuffle=True):
            model.params.zero_grad()
            loss, probs = model.classifier.loss(batch, y)
            lv = float(loss.data)
            if not math.isfinite(lv):
                raise DivergedLoss(f"non-finite loss {lv} at epoch {epoch} (batch of {len(y)})")
            loss.backward()
            opt.step()
            tot += lv * len(y)
            correct += int((probs.argmax(axis=1) == y).sum())
            n += len(y)
        record(epoch, "train", {"loss": tot / n, "accuracy": correct / n})
        if enc_va:
            m = evaluate_encoded(model, enc_va, y_va)
            record(epoch, "val", m)
            acc = m["accuracy"]
        else:
            acc = correct / n
        if acc > best_acc:
            best_acc, best_params, stale = acc, model.params.copy_data(), 0
        else:
            stale += 1
            if stale >= config.patience:
                break
        if time_limit_s is not None and time.perf_counter() - t0 > time_limit_s:
            break
    for name, p in model.params.items():
        p.data = best_params[name]
    return model, history


def write_metrics(history: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=["epoch", "split", "loss", "accuracy"])
        w.writeheader()
        for row in history:
            w.writerow({k: row[k] for k in ("epoch", "split", "loss", "accuracy")})


def save_model(model: Model, path) -> None:
    meta = {
        "architecture": model.config.architecture,
        "config": model.config.to_dict(),
        "featurizer": model.featurizer.to_dict(),
        "vocab_hash": model.vocab_hash,
        "seed": model.config.seed,
        "task": model.task,
        "classes": model.class_names,
    }
    checkpoint.save(path, model.params, meta)


def load_model(path) -> Model:
    params, meta = checkpoint.load(path)
    cfg = ModelConfig.from_dict(meta["config"])
    feat = Featurizer.from_dict(meta["featurizer"])
    if feat.vocab.content_hash() != meta["vocab_hash"]:
        raise VocabMismatch("checkpoint vocabulary does not match its recorded hash")
    clf = Classifier(cfg, len(feat.vocab), _extra(feat), params=params)
    return Model(cfg, feat, clf, meta.get("task", ""), list(meta.get("classes", [])))
