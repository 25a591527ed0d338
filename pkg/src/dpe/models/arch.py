"""The six program encoders and the shared softmax head."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..nn import tensor as T
from ..nn.layers import GRUStack, Params, glorot
from ..nn.tensor import ShapeMismatch, Tensor
from .features import ARCHITECTURES, Batch, EmptyTrace


@dataclass
class ModelConfig:
    architecture: str = "DependencyEnforcement"
    embedding_dim: int = 100
    hidden: int = 200
    layers: int = 2
    state_hidden: int = 100
    classes: int = 2
    truncation: int = 20
    batch_size: int = 64
    epochs: int = 30
    patience: int = 5
    lr: float = 1e-3
    clip_norm: Optional[float] = 5.0
    top_vars: int = 4
    seed: int = 0

    def validate(self) -> "ModelConfig":
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        dims = (self.embedding_dim, self.hidden, self.layers, self.state_hidden, self.batch_size)
        if min(dims) < 1:
            raise ValueError("dimensions must be positive")
        if self.truncation < 1:
            raise ValueError("truncation window K must be at least 1")
        if self.classes < 2:
            raise ValueError("need at least two classes")
        if self.epochs < 0 or self.patience < 1:
            raise ValueError("epochs must be non-negative and patience positive")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d).validate()


class Encoder:
    """Base class: ``embed(batch) -> h_P [B, width]``; parameters live in a shared Params map."""

    width: int

    def __init__(self, params: Params, cfg: ModelConfig, vocab_size: int, rng, extra: int = 0):
        self.params, self.cfg = params, cfg

    def embed(self, batch: Batch) -> Tensor:
        raise NotImplementedError


class VariableTraceEncoder(Encoder):
    """Shared GRU stack over every variable's value sequence, then element-wise max over final states."""

    def __init__(self, params, cfg, vocab_size, rng, extra=0):
        super().__init__(params, cfg, vocab_size, rng)
        self.emb = params.add("emb", rng.uniform(-0.1, 0.1, (vocab_size, cfg.embedding_dim)))
        self.rnn = GRUStack(params, "enc", cfg.embedding_dim, cfg.hidden, cfg.layers, rng)
        self.width = cfg.hidden

    def embed(self, batch):
        a = batch.arrays
        finals, _ = self.rnn.run(T.take(self.emb, a["ids"]), a["mask"])
        per_prog = T.getitem(finals[-1], a["gather"])  # [B, S, k]
        return T.max_pool(per_prog, a["gmask"])


class StateTraceEncoder(Encoder):
    """Inner GRU reads one state's values; the outer stack reads the per-state summaries."""

    def __init__(self, params, cfg, vocab_size, rng, extra=0):
        super().__init__(params, cfg, vocab_size, rng)
        self.emb = params.add("emb", rng.uniform(-0.1, 0.1, (vocab_size, cfg.embedding_dim)))
        self.inner = GRUStack(params, "inner", cfg.embedding_dim, cfg.state_hidden, 1, rng)
        self.outer = GRUStack(params, "outer", cfg.state_hidden, cfg.hidden, cfg.layers, rng)
        self.width = cfg.hidden

    def embed(self, batch):
        ids, step, slot = batch.arrays["ids"], batch.arrays["step"], batch.arrays["slot"]
        B, Tn, W = ids.shape
        rows = np.nonzero(step.reshape(-1) > 0)[0]
        if rows.size == 0:
            raise EmptyTrace("batch has no states")
        flat_ids = ids.reshape(B * Tn, W)[rows]
        flat_mask = slot.reshape(B * Tn, W)[rows]
        fin, _ = self.inner.run(T.take(self.emb, flat_ids), flat_mask)
        k1 = self.cfg.state_hidden
        # padded (b, t) positions read a zero row; the outer mask keeps them out anyway
        table = T.concat([Tensor(np.zeros((1, k1))), fin[-1]], axis=0)
        where = np.zeros(B * Tn, dtype=np.int64)
        where[rows] = np.arange(1, rows.size + 1)
        seq = T.getitem(table, where.reshape(B, Tn))
        finals, _ = self.outer.run(seq, step)
        return finals[-1]


class DependencyEncoder(Encoder):
    """One recurrent state per variable, parameters per canonical variable, product fusion of dependencies.

    Each layer of each canonical group has its own GRU weights, stacked as
    ``[G, ...]`` so a whole batch step is one grouped op.  A write event for
    variable v with dependency set D updates v's state from the element-wise
    product of the latest states of D and v itself (skipping variables that
    have not emitted yet; none left means the shared learned ``h0``).
    """

    def __init__(self, params, cfg, vocab_size, rng, extra=0):
        super().__init__(params, cfg, vocab_size, rng)
        G, d, k = extra, cfg.embedding_dim, cfg.hidden
        if G < 1:
            raise ValueError("dependency encoder needs at least one canonical group")
        self.groups = G
        self.emb = params.add("emb", rng.uniform(-0.1, 0.1, (vocab_size, d)))
        self.layers = []
        for li in range(cfg.layers):
            din = d if li == 0 else k
            W = np.stack([np.concatenate([glorot(rng, din, k) for _ in range(3)], axis=1) for _ in range(G)])
            U_zr = np.stack([np.concatenate([glorot(rng, k, k) for _ in range(2)], axis=1) for _ in range(G)])
            U_h = np.stack([glorot(rng, k, k) for _ in range(G)])
            self.layers.append({
                "W": params.add(f"dep.l{li}.W", W),
                "U_zr": params.add(f"dep.l{li}.U_zr", U_zr),
                "U_h": params.add(f"dep.l{li}.U_h", U_h),
                "b": params.add(f"dep.l{li}.b", np.zeros((G, 3 * k))),
                "h0": params.add(f"dep.l{li}.h0", rng.uniform(0.5, 1.0, k)),
            })
        self.width = k

    def initial_state(self, B: int, S: int) -> tuple:
        k = self.cfg.hidden
        return [Tensor(np.zeros((B, S, k))) for _ in self.layers], np.zeros((B, S), dtype=bool)

    def run(self, batch: Batch, start: int = 0, state: Optional[tuple] = None, track_from: Optional[int] = None):
        """Process events ``start..T-1``; steps before ``track_from`` build no graph.

        Returns (per-layer slot states, emitted mask).  ``track_from`` defaults to
        ``T - K`` so only the last K events carry gradients.
        """
        a = batch.arrays
        tok, slot, grp, act, deps = a["tok"], a["slot"], a["group"], a["active"], a["deps"]
        B, Tn = tok.shape
        if track_from is None:
            track_from = Tn - self.cfg.truncation
        Hs, emitted = state if state is not None else self.initial_state(B, a["S"])
        Hs = list(Hs)
        emitted = emitted.copy()
        rows = np.arange(B)
        for t in range(start, Tn):
            live = act[:, t]
            if not live.any():
                continue
            if t < track_from:
                with T.no_grad():
                    Hs = self._step(Hs, emitted, tok[:, t], slot[:, t], grp[:, t], live, deps[:, t])
                Hs = [h.detach() for h in Hs]
            else:
                Hs = self._step(Hs, emitted, tok[:, t], slot[:, t], grp[:, t], live, deps[:, t])
            emitted[rows[live], slot[live, t]] = True
        return Hs, emitted

    def _step(self, Hs, emitted, tok, slot, grp, live, dep):
        inp = T.take(self.emb, tok)
        fuse = dep & emitted
        out = []
        for H, L in zip(Hs, self.layers):
            prev = T.masked_prod(H, fuse, L["h0"])
            xp = T.grouped_linear(inp, L["W"], L["b"], grp)
            hn = T.gru_cell(xp, prev, L["U_zr"], L["U_h"], grp)
            out.append(T.scatter_rows(H, hn, slot, live))
            inp = hn
        return out

    def pool(self, Hs, emitted) -> Tensor:
        return T.avg_pool(Hs[-1], emitted)

    def embed(self, batch):
        Hs, emitted = self.run(batch)
        return self.pool(Hs, emitted)


class SequenceEncoder(Encoder):
    """Baseline: standard stack over a token sequence (source tokens or executed statements)."""

    def __init__(self, params, cfg, vocab_size, rng, extra=0):
        super().__init__(params, cfg, vocab_size, rng)
        self.emb = params.add("emb", rng.uniform(-0.1, 0.1, (vocab_size, cfg.embedding_dim)))
        self.rnn = GRUStack(params, "enc", cfg.embedding_dim, cfg.hidden, cfg.layers, rng)
        self.width = cfg.hidden

    def embed(self, batch):
        finals, _ = self.rnn.run(T.take(self.emb, batch.arrays["ids"]), batch.arrays["mask"])
        return finals[-1]


class AstEncoder(Encoder):
    """Baseline: bottom-up tanh(Wprod mean(children) + type embedding + bprod) over the syntax tree."""

    def __init__(self, params, cfg, vocab_size, rng, extra=0):
        super().__init__(params, cfg, vocab_size, rng)
        d = cfg.embedding_dim
        P = max(extra, 1)
        self.type_emb = params.add("ast.type", rng.uniform(-0.1, 0.1, (vocab_size, d)))
        self.Wprod = params.add("ast.Wprod", np.stack([glorot(rng, d, d) for _ in range(P)]))
        self.bprod = params.add("ast.bprod", np.zeros((P, d)))
        self.width = d

    def embed(self, batch):
        a = batch.arrays
        labels, prods, heights, children = a["labels"], a["prods"], a["heights"], a["children"]
        d = self.cfg.embedding_dim
        order = np.argsort(heights, kind="stable")
        pos = np.empty_like(order)
        pos[order] = np.arange(order.size)
        done: Optional[Tensor] = None
        for h in range(int(heights.max()) + 1):
            nodes = order[heights[order] == h]
            if h == 0:
                mean = Tensor(np.zeros((nodes.size, d)))
            else:
                width = max(len(children[n]) for n in nodes)
                idx = np.zeros((nodes.size, width), dtype=np.int64)
                mask = np.zeros((nodes.size, width))
                for r, n in enumerate(nodes):
                    kids = [pos[c] for c in children[n]]
                    idx[r, :len(kids)] = kids
                    mask[r, :len(kids)] = 1.0
                mean = T.avg_pool(T.getitem(done, idx), mask)
            pre = T.add(T.grouped_linear(mean, self.Wprod, self.bprod, prods[nodes]), T.take(self.type_emb, labels[nodes]))
            vec = T.tanh(pre)
            done = vec if done is None else T.concat([done, vec], axis=0)
        return T.getitem(done, pos[a["roots"]])


ENCODERS = {
    "VariableTrace": VariableTraceEncoder,
    "StateTrace": StateTraceEncoder,
    "DependencyEnforcement": DependencyEncoder,
    "TokenRnn": SequenceEncoder,
    "SyntacticTraceRnn": SequenceEncoder,
    "AstRecursive": AstEncoder,
}


class Classifier:
    """Encoder plus the shared head: softmax(W h_P + b)."""

    def __init__(self, cfg: ModelConfig, vocab_size: int, extra: int = 0, params: Optional[Params] = None):
        cfg.validate()
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        fresh = Params()
        self.encoder = ENCODERS[cfg.architecture](fresh, cfg, vocab_size, rng, extra)
        w = self.encoder.width
        self.W = fresh.add("head.W", glorot(rng, w, cfg.classes).T.copy())
        self.b = fresh.add("head.b", np.zeros(cfg.classes))
        if params is not None:
            _load_into(fresh, params)
        self.params = fresh

    def logits(self, batch: Batch) -> Tensor:
        h = self.encoder.embed(batch)
        return self.head(h)

    def head(self, h: Tensor) -> Tensor:
        if h.shape[-1] != self.W.shape[1]:
            raise ShapeMismatch(f"embedding width {h.shape[-1]} != head width {self.W.shape[1]}")
        return T.add(T.linear_t(h, self.W), self.b)

    def loss(self, batch: Batch, labels) -> tuple:
        return T.softmax_xent(self.logits(batch), labels)

    def predict_proba(self, batch: Batch) -> np.ndarray:
        with T.no_grad():
            return T.softmax(self.logits(batch).data)


def classify(h, W, b) -> np.ndarray:
    """softmax(W h + b) for an embedding h[k] (or a batch h[B, k])."""
    h, W, b = np.asarray(getattr(h, "data", h)), np.asarray(getattr(W, "data", W)), np.asarray(getattr(b, "data", b))
    if h.shape[-1] != W.shape[1] or W.shape[0] != b.shape[0]:
        raise ShapeMismatch(f"head {W.shape}/{b.shape} does not fit embedding {h.shape}")
    return T.softmax(h @ W.T + b)


def _load_into(dst: Params, src) -> None:
    for name, p in dst.items():
        if name not in src:
            raise ShapeMismatch(f"missing parameter {name}")
        data = src[name].data if hasattr(src[name], "data") else np.asarray(src[name])
        if data.shape != p.data.shape:
            raise ShapeMismatch(f"{name}: checkpoint {data.shape} vs model {p.data.shape}")
        p.data = np.array(data, dtype=np.float64, copy=True)
    extra = set(src) - set(dst)
    if extra:
        raise ShapeMismatch(f"unexpected parameters {sorted(extra)}")
