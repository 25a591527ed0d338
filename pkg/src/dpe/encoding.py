"""Trace encoding: value tokens, vocabularies, trace projections, DTW-based
variable canonicalisation and batch padding."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .lang import ast as A
from .lang.interp import BOTTOM
from .lang.lexer import escape_string

PAD, UNK, BOTTOM_TOK = "<pad>", "<unk>", "<bottom>"
SEP = "<sep>"
RESERVED = (PAD, UNK, BOTTOM_TOK)
PAD_ID, UNK_ID, BOTTOM_ID = 0, 1, 2

MAX_TRACE_EVENTS = 300
DEFAULT_TOP_VARS = 4
OTHER = "VOTHER"


class EmptyCorpus(ValueError):
    pass


class EmptySequence(ValueError):
    pass


def tokenize_value(v) -> str:
    """Canonical, injective string for a runtime value."""
    if v is BOTTOM:
        return BOTTOM_TOK
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return "-inf" if v == A.INT_MIN else str(v)
    if isinstance(v, str):
        return escape_string(v)
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(tokenize_value(x) for x in v) + "]"
    raise TypeError(f"cannot tokenize {v!r}")


# ------------------------------------------------------------------ vocabulary


@dataclass
class Vocabulary:
    index: dict
    freq: dict = field(default_factory=dict)
    min_count: int = 1
    max_size: int = 10_000

    def __len__(self) -> int:
        return len(self.index)

    def lookup(self, token: str) -> int:
        if token in RESERVED:
            return self.index[token]
        i = self.index.get(token)
        if i is None or self.freq.get(token, 0) < self.min_count:
            return UNK_ID
        return i

    def encode(self, tokens: Iterable[str]) -> list:
        return [self.lookup(t) for t in tokens]

    def to_json(self) -> str:
        return json.dumps(self.index, sort_keys=True, ensure_ascii=False)

    def effective(self) -> dict:
        """token -> index for every token that does not fall back to UNK."""
        return {t: i for t, i in self.index.items() if t in RESERVED or self.freq.get(t, 0) >= self.min_count}

    def content_hash(self) -> str:
        blob = json.dumps(self.effective(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"index": self.index, "freq": self.freq, "min_count": self.min_count, "max_size": self.max_size}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(dict(data["index"]), dict(data["freq"]), data["min_count"], data["max_size"])

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, sort_keys=True, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def build_vocab(corpus: Iterable[Sequence[str]], max_size: int = 10_000, min_count: int = 2) -> Vocabulary:
    """Rank tokens by frequency (ties lexicographic) and keep the first ``max_size``.

    Tokens that are kept but seen fewer than ``min_count`` times still map to UNK.
    """
    counts: Counter = Counter()
    seen_any = False
    for seq in corpus:
        seen_any = True
        counts.update(t for t in seq if t not in RESERVED)
    if not seen_any or not counts:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    index = {tok: i for i, tok in enumerate(RESERVED)}
    freq = {}
    for tok, c in ranked:
        index[tok] = len(index)
        freq[tok] = c
    return Vocabulary(index, freq, min_count, max_size)


# ------------------------------------------------------------------ projections


@dataclass
class VariableTraceView:
    """Per-variable value sequences, variables in order of first write."""

    traces: dict  # var -> list[str]
    seqs: dict = field(default_factory=dict)  # var -> list[int] event positions

    def names(self) -> list:
        return list(self.traces)

    def write_counts(self) -> dict:
        return {v: sum(1 for t in ts if t != SEP) for v, ts in self.traces.items()}


@dataclass
class StateTraceView:
    vars: list
    states: list  # list[tuple[str, ...]]


def truncate(trace: list, cap: int = MAX_TRACE_EVENTS) -> tuple:
    """(events, truncated flag)."""
    if len(trace) > cap:
        return list(trace[:cap]), True
    return list(trace), False


def project_variable_traces(trace: list) -> VariableTraceView:
    traces: dict = {}
    seqs: dict = {}
    for ev in trace:
        traces.setdefault(ev.var, []).append(tokenize_value(ev.value))
        seqs.setdefault(ev.var, []).append(ev.seq)
    return VariableTraceView(traces, seqs)


def merge_variable_view(view: VariableTraceView) -> list:
    """Interleave sub-traces back into one value sequence by event position."""
    pairs = []
    for v, toks in view.traces.items():
        pairs.extend(zip(view.seqs[v], toks))
    return [t for _, t in sorted(pairs)]


def tracked_variables(prog: A.Program) -> list:
    """Written parameters, then locals in first-declaration (pre-order) order."""
    names = []
    ro = prog.readonly_params()
    written = {A.written_var(s) for s in prog.statements()}
    for p in prog.params:
        if p.name not in ro and p.name in written:
            names.append(p.name)
    for s in prog.statements():
        if isinstance(s, (A.Declare, A.ForEach)) and s.name not in names:
            names.append(s.name)
    return names


def project_state_traces(trace: list, variables: Sequence[str]) -> StateTraceView:
    variables = list(variables)
    pos = {v: i for i, v in enumerate(variables)}
    cur = [BOTTOM_TOK] * len(variables)
    states = []
    for ev in trace:
        if ev.var not in pos:
            pos[ev.var] = len(variables)
            variables.append(ev.var)
            cur.append(BOTTOM_TOK)
            states = [s + (BOTTOM_TOK,) for s in states]
        cur[pos[ev.var]] = tokenize_value(ev.value)
        states.append(tuple(cur))
    return StateTraceView(variables, states)


# multi-run records: several executions of one program concatenated with SEP


def variable_view_runs(runs: Sequence[list]) -> VariableTraceView:
    views = [project_variable_traces(r) for r in runs]
    order: list = []
    for v in views:
        for name in v.traces:
            if name not in order:
                order.append(name)
    traces = {name: [] for name in order}
    for k, view in enumerate(views):
        for name in order:
            if k > 0:
                traces[name].append(SEP)
            traces[name].extend(view.traces.get(name, []))
    return VariableTraceView({n: t for n, t in traces.items() if any(x != SEP for x in t)})


def state_view_runs(runs: Sequence[list], variables: Sequence[str]) -> StateTraceView:
    names = list(variables)
    for r in runs:
        for ev in r:
            if ev.var not in names:
                names.append(ev.var)
    states: list = []
    for k, r in enumerate(runs):
        if k > 0:
            states.append(tuple([SEP] * len(names)))
        states.extend(project_state_traces(r, names).states)
    return StateTraceView(names, states)


def cap_runs(runs: Sequence[list], cap: int = MAX_TRACE_EVENTS) -> tuple:
    """Keep at most ``cap`` events across all runs, dropping the tail."""
    out, left, cut = [], cap, False
    for r in runs:
        if left <= 0:
            cut = cut or bool(r)
            out.append([])
            continue
        if len(r) > left:
            cut = True
        out.append(list(r[:left]))
        left -= len(out[-1])
    return out, cut


# ------------------------------------------------------------------ DTW


def dtw_distance(a: Sequence, b: Sequence) -> int:
    """DTW with 0/1 substitution cost and steps (1,0), (0,1), (1,1)."""
    if not a or not b:
        raise EmptySequence("dtw needs two non-empty sequences")
    inf = float("inf")
    prev = [inf] * (len(b) + 1)
    prev[0] = 0
    for x in a:
        cur = [inf] * (len(b) + 1)
        left = inf
        for j, y in enumerate(b, 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if left < best:
                best = left
            left = best + (0 if x == y else 1)
            cur[j] = left
        prev = cur
    return int(prev[-1])


def dtw_distance_np(a: Sequence, b: Sequence) -> int:
    """Same distance as ``dtw_distance``, one vectorised row at a time.

    Within a row the recurrence x_j = c_j + min(x_{j-1}, m_j) unrolls to
    x_j = C_j + min_{k<=j}(m_k - C_{k-1}) with C the prefix sums of c, which
    is a cumulative minimum.
    """
    if not a or not b:
        raise EmptySequence("dtw needs two non-empty sequences")
    codes: dict = {}
    ai = np.array([codes.setdefault(x, len(codes)) for x in a])
    bi = np.array([codes.setdefault(y, len(codes)) for y in b])
    m = len(bi)
    prev = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for x in ai:
        c = (bi != x).astype(np.float64)
        mk = np.minimum(prev[1:], prev[:-1])  # best of (i-1, j) and (i-1, j-1)
        C = np.cumsum(c)
        Cm1 = C - c
        row = C + np.minimum.accumulate(mk - Cm1)
        prev = np.concatenate(([np.inf], row))
    return int(prev[-1])


class _DTWCache:
    def __init__(self):
        self.memo: dict = {}

    def __call__(self, a: tuple, b: tuple) -> int:
        key = (a, b) if a <= b else (b, a)
        d = self.memo.get(key)
        if d is None:
            d = self.memo[key] = dtw_distance_np(a, b)
        return d


def _normalized(dist: int, a: Sequence, b: Sequence) -> float:
    return dist / max(len(a), len(b))


@dataclass
class Canonicalizer:
    """Medoid traces per usage rank, fitted on training programs."""

    medoids: list  # rank -> tuple of tokens (or None when no program has that many variables)
    n: int = DEFAULT_TOP_VARS

    def names(self) -> list:
        return [f"V{i + 1}" for i in range(self.n)] + [OTHER]

    def assign(self, view: VariableTraceView, dtw=None) -> dict:
        """original name -> canonical name for one program."""
        dtw = dtw or _DTWCache()
        counts = view.write_counts()
        seqs = {v: tuple(t for t in ts if t != SEP) or (SEP,) for v, ts in view.traces.items()}
        cands = []
        for v, seq in seqs.items():
            for r, med in enumerate(self.medoids):
                if med is None:
                    continue
                cost = _normalized(dtw(seq, med), seq, med)
                cands.append((cost, -counts[v], v, r))
        cands.sort()
        mapping: dict = {}
        used_ranks: set = set()
        for cost, _, v, r in cands:
            if v in mapping or r in used_ranks:
                continue
            mapping[v] = f"V{r + 1}"
            used_ranks.add(r)
        for v in view.traces:
            mapping.setdefault(v, OTHER)
        return mapping

    def to_dict(self) -> dict:
        return {"n": self.n, "medoids": [list(m) if m is not None else None for m in self.medoids]}

    @classmethod
    def from_dict(cls, d: dict) -> "Canonicalizer":
        return cls([tuple(m) if m is not None else None for m in d["medoids"]], d["n"])


def _rank_variables(view: VariableTraceView) -> list:
    counts = view.write_counts()
    return sorted(counts, key=lambda v: (-counts[v], v))


def fit_canonicalizer(
    views: Sequence[VariableTraceView], n: int = DEFAULT_TOP_VARS, sample: int = 40, dtw=None
) -> Canonicalizer:
    """Group traces by per-program usage rank and take each group's DTW medoid.

    The medoid is computed over at most ``sample`` distinct traces (most frequent
    first), weighting each by how many programs produced it.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    dtw = dtw or _DTWCache()
    groups: list = [Counter() for _ in range(n)]
    for view in views:
        for r, v in enumerate(_rank_variables(view)[:n]):
            seq = tuple(t for t in view.traces[v] if t != SEP) or (SEP,)
            groups[r][seq] += 1
    medoids: list = []
    for g in groups:
        if not g:
            medoids.append(None)
            continue
        pool = sorted(g.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))[:sample]
        best, best_cost = None, None
        for cand, _ in pool:
            cost = sum(w * _normalized(dtw(cand, other), cand, other) for other, w in pool)
            if best_cost is None or cost < best_cost:
                best, best_cost = cand, cost
        medoids.append(best)
    return Canonicalizer(medoids, n)


def canonicalize_variables(views: Sequence[VariableTraceView], n: int = DEFAULT_TOP_VARS) -> list:
    """Fit medoids on ``views`` and return one original->canonical mapping per program."""
    dtw = _DTWCache()
    canon = fit_canonicalizer(views, n, dtw=dtw)
    return [canon.assign(v, dtw) for v in views]


# ------------------------------------------------------------------ padding


@dataclass
class Padded:
    ids: np.ndarray
    mask: np.ndarray  # float 0/1, same leading shape as ids


def pad_sequences(seqs: Sequence[Sequence[int]], length: Optional[int] = None) -> Padded:
    if not seqs:
        raise ValueError("empty batch")
    L = max(1, length or max(len(s) for s in seqs))
    ids = np.full((len(seqs), L), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(seqs), L))
    for i, s in enumerate(seqs):
        s = list(s)[:L]
        ids[i, : len(s)] = s
        mask[i, : len(s)] = 1.0
    return Padded(ids, mask)


def pad_states(batch: Sequence[Sequence[Sequence[int]]]) -> tuple:
    """Pad a batch of state traces to [B, T, arity].

    Returns (ids, step_mask [B, T], slot_mask [B, T, arity]).
    """
    if not batch:
        raise ValueError("empty batch")
    T = max(1, max(len(s) for s in batch))
    W = max(1, max((len(st) for s in batch for st in s), default=1))
    ids = np.full((len(batch), T, W), PAD_ID, dtype=np.int64)
    step = np.zeros((len(batch), T))
    slot = np.zeros((len(batch), T, W))
    for b, states in enumerate(batch):
        for t, st in enumerate(states):
            ids[b, t, : len(st)] = st
            step[b, t] = 1.0
            slot[b, t, : len(st)] = 1.0
    return ids, step, slot


def pad_batch(examples: Sequence, kind: str = "sequence"):
    """Pad token-id sequences (``kind="sequence"``) or state traces (``kind="state"``)."""
    if kind == "sequence":
        return pad_sequences(examples)
    if kind == "state":
        return pad_states(examples)
    raise ValueError(f"unknown view kind {kind!r}")
