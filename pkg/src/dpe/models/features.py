"""Turning dataset records into padded model inputs for each architecture."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import encoding as E
from ..lang import ast as A
from ..lang.lexer import tokenize
from ..lang.parser import parse
from ..lang.printer import expr_str

DYNAMIC = ("VariableTrace", "StateTrace", "DependencyEnforcement")
SYNTAX = ("TokenRnn", "SyntacticTraceRnn", "AstRecursive")
ARCHITECTURES = DYNAMIC + SYNTAX


class EmptyTrace(ValueError):
    pass


class EmptyProgram(ValueError):
    pass


# ------------------------------------------------------------------ token views of a record


def value_tokens(traces: dict) -> list:
    out = []
    for toks in traces["variable"].values():
        out.extend(toks)
    return out


def source_tokens(source: str) -> list:
    return [t.text for t in tokenize(source) if t.kind != "EOF"]


def stmt_tokens(traces: dict) -> list:
    out = []
    for k, run in enumerate(traces["stmts"]):
        if k > 0:
            out.append(E.SEP)
        out.extend(run)
    return out


def _label(node) -> str:
    name = type(node).__name__
    if isinstance(node, (A.IntLit, A.BoolLit)):
        return f"{name}:{expr_str(node)}"
    if isinstance(node, A.StrLit):
        return f"{name}:{expr_str(node)}"
    if isinstance(node, A.Var):
        return f"{name}:{node.name}"
    if isinstance(node, (A.Binary, A.Unary)):
        return f"{name}:{node.op}"
    if isinstance(node, A.Call):
        return f"{name}:{node.name}"
    if isinstance(node, A.Assign):
        return f"{name}:{node.op}"
    if isinstance(node, A.Declare):
        return f"{name}:{node.type}:{node.name}"
    if isinstance(node, A.ForEach):
        return f"{name}:{node.type}:{node.name}"
    return name


def ast_tree(node) -> tuple:
    """(label, [children]) view of a program; blocks become ``Block`` nodes."""
    if isinstance(node, A.Program):
        return ("Program", [ast_tree(s) for s in node.body])
    if isinstance(node, list):
        return ("Block", [ast_tree(s) for s in node])
    lab = _label(node)
    kids: list = []
    if isinstance(node, A.Index):
        kids = [node.base, node.index]
    elif isinstance(node, A.Call):
        kids = list(node.args)
    elif isinstance(node, A.ArrayLit):
        kids = list(node.elems)
    elif isinstance(node, A.Unary):
        kids = [node.operand]
    elif isinstance(node, A.Binary):
        kids = [node.left, node.right]
    elif isinstance(node, A.Declare):
        kids = [node.init] if node.init is not None else []
    elif isinstance(node, A.Assign):
        kids = [node.target, node.value]
    elif isinstance(node, A.If):
        kids = [node.cond, node.then, node.orelse]
    elif isinstance(node, A.While):
        kids = [node.cond, node.body]
    elif isinstance(node, A.For):
        kids = [node.init, node.cond, node.update, node.body]
    elif isinstance(node, A.ForEach):
        kids = [node.iterable, node.body]
    elif isinstance(node, A.CallStmt):
        kids = [node.call]
    elif isinstance(node, A.Return):
        kids = [node.value] if node.value is not None else []
    return (lab, [ast_tree(k) for k in kids])


def arity_bucket(n: int) -> int:
    return min(n, 4)


def tree_labels(tree) -> list:
    out = [tree[0]]
    for c in tree[1]:
        out.extend(tree_labels(c))
    return out


def tree_productions(tree) -> list:
    out = [f"{tree[0].split(':')[0]}/{arity_bucket(len(tree[1]))}"]
    for c in tree[1]:
        out.extend(tree_productions(c))
    return out


# ------------------------------------------------------------------ featurizer


@dataclass
class Featurizer:
    """Vocabularies (and the variable canonicaliser) fitted on a training split."""

    arch: str
    vocab: E.Vocabulary
    canon: Optional[E.Canonicalizer] = None
    prods: Optional[E.Vocabulary] = None
    value_vocab_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "arch": self.arch,
            "vocab": self.vocab.to_dict(),
            "canon": self.canon.to_dict() if self.canon else None,
            "prods": self.prods.to_dict() if self.prods else None,
            "value_vocab_hash": self.value_vocab_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Featurizer":
        canon = E.Canonicalizer.from_dict(d["canon"]) if d.get("canon") else None
        prods = E.Vocabulary.from_dict(d["prods"]) if d.get("prods") else None
        return cls(d["arch"], E.Vocabulary.from_dict(d["vocab"]), canon, prods, d.get("value_vocab_hash", ""))

    # -- per-example encodings
    def encode(self, rec) -> object:
        a = self.arch
        if a == "VariableTrace":
            seqs = [self.vocab.encode(t) for t in rec.traces["variable"].values() if t]
            if not seqs:
                raise EmptyTrace("record has no variable writes")
            return seqs
        if a == "StateTrace":
            return self._states(rec.traces)
        if a == "DependencyEnforcement":
            return self._events(rec.traces)
        if a == "TokenRnn":
            toks = source_tokens(rec.source)
            if not toks:
                raise EmptyProgram("no tokens")
            return self.vocab.encode(toks)
        if a == "SyntacticTraceRnn":
            toks = stmt_tokens(rec.traces)
            if not toks:
                raise EmptyTrace("no executed statements")
            return self.vocab.encode(toks)
        if a == "AstRecursive":
            tree = ast_tree(parse(rec.source))
            return self._tree(tree)
        raise ValueError(f"unknown architecture {a!r}")

    def mapping(self, traces: dict) -> dict:
        view = E.VariableTraceView(traces["variable"])
        return self.canon.assign(view)

    def _slot_order(self, names: Sequence[str], mapping: dict) -> list:
        """The program's variables ordered by canonical name V1..Vn, then the rest in trace order."""
        canon_names = self.canon.names()[:-1]
        inv = {mapping[v]: v for v in names if mapping.get(v, E.OTHER) != E.OTHER}
        slots = [inv[c] for c in canon_names if c in inv]
        slots += [v for v in names if mapping.get(v, E.OTHER) == E.OTHER]
        return slots

    def _states(self, traces: dict) -> list:
        st = traces["state"]
        if not st["states"]:
            raise EmptyTrace("record has no program states")
        mapping = self.mapping(traces)
        order = self._slot_order(st["vars"], mapping)
        pos = {v: i for i, v in enumerate(st["vars"])}
        out = []
        for row in st["states"]:
            if all(t == E.SEP for t in row):
                out.append([self.vocab.lookup(E.SEP)] * len(order))
                continue
            out.append([self.vocab.lookup(row[pos[v]]) for v in order])
        return out

    def _events(self, traces: dict) -> dict:
        mapping = self.mapping(traces)
        canon_names = self.canon.names()
        group_of = {c: i for i, c in enumerate(canon_names)}
        slots: dict = {}
        toks, slot_ids, groups, deps = [], [], [], []
        for run in traces["deps"]:
            for var, tok, dvars in run:
                s = slots.setdefault(var, len(slots))
                toks.append(self.vocab.lookup(tok))
                slot_ids.append(s)
                groups.append(group_of[mapping.get(var, E.OTHER)])
                deps.append(sorted({slots[d] for d in dvars if d in slots} | {s}))
        if not toks:
            raise EmptyTrace("record has no write events")
        return {"tok": toks, "slot": slot_ids, "group": groups, "deps": deps, "slots": len(slots)}

    def _tree(self, tree) -> dict:
        """Nodes in post-order with heights, so children always precede parents."""
        labels, prods, heights, children = [], [], [], []

        def walk(t) -> int:
            kids = [walk(c) for c in t[1]]
            labels.append(self.vocab.lookup(t[0]))
            prods.append(self.prods.lookup(f"{t[0].split(':')[0]}/{arity_bucket(len(t[1]))}"))
            heights.append(1 + max((heights[k] for k in kids), default=-1))
            children.append(kids)
            return len(labels) - 1

        root = walk(tree)
        return {"labels": labels, "prods": prods, "heights": heights, "children": children, "root": root}


def corpus_for(arch: str, rec) -> list:
    if arch in DYNAMIC:
        return value_tokens(rec.traces)
    if arch == "TokenRnn":
        return source_tokens(rec.source)
    if arch == "SyntacticTraceRnn":
        return stmt_tokens(rec.traces)
    if arch == "AstRecursive":
        return tree_labels(ast_tree(parse(rec.source)))
    raise ValueError(f"unknown architecture {arch!r}")


def fit_featurizer(arch: str, records: Sequence, top_vars: int = E.DEFAULT_TOP_VARS, max_size: int = 10_000,
                   min_count: int = 2, value_vocab: Optional[E.Vocabulary] = None) -> Featurizer:
    if not records:
        raise E.EmptyCorpus("no training records")
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r}")
    prods = None
    canon = None
    if arch in DYNAMIC and value_vocab is not None:
        vocab = value_vocab
    else:
        cap = 5_000 if arch == "SyntacticTraceRnn" else max_size
        vocab = E.build_vocab([corpus_for(arch, r) for r in records], max_size=cap, min_count=min_count)
    if arch in ("StateTrace", "DependencyEnforcement"):
        views = [E.VariableTraceView(r.traces["variable"]) for r in records]
        canon = E.fit_canonicalizer(views, top_vars)
    if arch == "AstRecursive":
        prods = E.build_vocab([tree_productions(ast_tree(parse(r.source))) for r in records],
                              max_size=max_size, min_count=1)
    vh = vocab.content_hash() if arch in DYNAMIC else ""
    return Featurizer(arch, vocab, canon, prods, vh)


# ------------------------------------------------------------------ batching


@dataclass
class Batch:
    arch: str
    size: int
    arrays: dict = field(default_factory=dict)


def make_batch(arch: str, encoded: Sequence) -> Batch:
    B = len(encoded)
    if arch in ("TokenRnn", "SyntacticTraceRnn"):
        p = E.pad_sequences(encoded)
        return Batch(arch, B, {"ids": p.ids, "mask": p.mask})
    if arch == "VariableTrace":
        flat, owner = [], []
        for b, seqs in enumerate(encoded):
            for s in seqs:
                flat.append(s)
                owner.append(b)
        p = E.pad_sequences(flat)
        S = max(len(s) for s in encoded)
        gather = np.zeros((B, S), dtype=np.int64)
        gmask = np.zeros((B, S))
        k = 0
        for b, seqs in enumerate(encoded):
            for j in range(len(seqs)):
                gather[b, j] = k
                gmask[b, j] = 1.0
                k += 1
        return Batch(arch, B, {"ids": p.ids, "mask": p.mask, "gather": gather, "gmask": gmask})
    if arch == "StateTrace":
        ids, step, slot = E.pad_states(encoded)
        return Batch(arch, B, {"ids": ids, "step": step, "slot": slot})
    if arch == "DependencyEnforcement":
        T = max(len(e["tok"]) for e in encoded)
        S = max(e["slots"] for e in encoded)
        tok = np.zeros((B, T), dtype=np.int64)
        slot = np.zeros((B, T), dtype=np.int64)
        grp = np.zeros((B, T), dtype=np.int64)
        act = np.zeros((B, T), dtype=bool)
        dep = np.zeros((B, T, S), dtype=bool)
        for b, e in enumerate(encoded):
            off = T - len(e["tok"])  # right-align so every trace ends at the last step
            n = len(e["tok"])
            tok[b, off:] = e["tok"]
            slot[b, off:] = e["slot"]
            grp[b, off:] = e["group"]
            act[b, off:] = True
            for t, ds in enumerate(e["deps"]):
                dep[b, off + t, ds] = True
            assert n > 0
        return Batch(arch, B, {"tok": tok, "slot": slot, "group": grp, "active": act, "deps": dep, "S": S})
    if arch == "AstRecursive":
        labels, prods, heights, children, roots = [], [], [], [], []
        for e in encoded:
            base = len(labels)
            labels += e["labels"]
            prods += e["prods"]
            heights += e["heights"]
            children += [[base + c for c in kids] for kids in e["children"]]
            roots.append(base + e["root"])
        return Batch(arch, B, {
            "labels": np.array(labels, dtype=np.int64),
            "prods": np.array(prods, dtype=np.int64),
            "heights": np.array(heights, dtype=np.int64),
            "children": children,
            "roots": np.array(roots, dtype=np.int64),
        })
    raise ValueError(f"unknown architecture {arch!r}")


def batch_length(arch: str, enc) -> int:
    """Rough cost of one encoded example, used to bucket similar lengths together."""
    if arch == "VariableTrace":
        return max(len(s) for s in enc)
    if arch == "DependencyEnforcement":
        return len(enc["tok"])
    if arch == "AstRecursive":
        return len(enc["labels"])
    return len(enc)
