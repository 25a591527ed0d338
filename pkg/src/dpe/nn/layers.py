"""Parameter containers, GRU cells and stacks built on the autodiff tensors."""

from __future__ import annotations

from collections import OrderedDict
from typing import Optional

import numpy as np

from . import tensor as T
from .tensor import ShapeMismatch, Tensor


class Params(OrderedDict):
    """Ordered name -> trainable Tensor map; declaration order is the checkpoint order."""

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self:
            raise KeyError(f"duplicate parameter {name}")
        t = Tensor(data, requires_grad=True, name=name)
        self[name] = t
        return t

    def zero_grad(self) -> None:
        for p in self.values():
            p.grad = None

    def count(self) -> int:
        return int(sum(p.data.size for p in self.values()))

    def copy_data(self) -> dict:
        return {k: v.data.copy() for k, v in self.items()}


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out))


class GRULayer:
    """One GRU layer.

    z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br),
    cand = tanh(x Wh + (r * h) Uh + bh), h' = (1 - z) * h + z * cand.
    The three input matrices are stored side by side as ``W`` [d, 3k],
    the two gate recurrences as ``U_zr`` [k, 2k].
    """

    def __init__(self, params: Params, prefix: str, d: int, k: int, rng: np.random.Generator):
        self.d, self.k = d, k
        W = np.concatenate([glorot(rng, d, k) for _ in range(3)], axis=1)
        U_zr = np.concatenate([glorot(rng, k, k) for _ in range(2)], axis=1)
        U_h = glorot(rng, k, k)
        self.W = params.add(f"{prefix}.W", W)
        self.U_zr = params.add(f"{prefix}.U_zr", U_zr)
        self.U_h = params.add(f"{prefix}.U_h", U_h)
        self.b = params.add(f"{prefix}.b", np.zeros(3 * k))

    @classmethod
    def bind(cls, params: Params, prefix: str) -> "GRULayer":
        self = cls.__new__(cls)
        self.W = params[f"{prefix}.W"]
        self.U_zr = params[f"{prefix}.U_zr"]
        self.U_h = params[f"{prefix}.U_h"]
        self.b = params[f"{prefix}.b"]
        self.d, self.k = self.W.shape[0], self.U_h.shape[0]
        return self

    def project(self, x: Tensor) -> Tensor:
        """Input part of all three gates, x W + b; may be precomputed for a whole sequence."""
        if x.shape[-1] != self.d:
            raise ShapeMismatch(f"GRU input width {x.shape[-1]} != {self.d}")
        return T.add(T.matmul(x, self.W), self.b)

    def step_projected(self, h: Tensor, xp: Tensor) -> Tensor:
        return T.gru_cell(xp, h, self.U_zr, self.U_h)

    def step_composed(self, h: Tensor, xp: Tensor) -> Tensor:
        """Same update as ``step_projected`` spelled out with elementary ops."""
        k = self.k
        if h.shape[-1] != k:
            raise ShapeMismatch(f"GRU hidden width {h.shape[-1]} != {k}")
        hzr = T.matmul(h, self.U_zr)
        z = T.sigmoid(T.add(xp[..., :k], hzr[..., :k]))
        r = T.sigmoid(T.add(xp[..., k:2 * k], hzr[..., k:]))
        cand = T.tanh(T.add(xp[..., 2 * k:], T.matmul(T.mul(r, h), self.U_h)))
        return T.add(h, T.mul(z, T.sub(cand, h)))

    def step(self, h: Tensor, x: Tensor) -> Tensor:
        return self.step_projected(T.as_tensor(h), self.project(T.as_tensor(x)))


def gru_step(h_prev, x, layer: GRULayer) -> Tensor:
    return layer.step(h_prev, x)


class GRUStack:
    """Stacked GRU layers; layer i+1 reads layer i's hidden state."""

    def __init__(self, params: Params, prefix: str, d: int, k: int, layers: int, rng: np.random.Generator):
        self.layers = [GRULayer(params, f"{prefix}.l{i}", d if i == 0 else k, k, rng) for i in range(layers)]
        self.k = k

    @classmethod
    def bind(cls, params: Params, prefix: str, layers: int) -> "GRUStack":
        self = cls.__new__(cls)
        self.layers = [GRULayer.bind(params, f"{prefix}.l{i}") for i in range(layers)]
        self.k = self.layers[0].k
        return self

    def zeros(self, batch: int) -> list:
        return [Tensor(np.zeros((batch, self.k))) for _ in self.layers]

    def step(self, hs: list, x: Tensor) -> list:
        """One time step for every layer; returns the new per-layer hidden states."""
        out = []
        inp = x
        for layer, h in zip(self.layers, hs):
            h = layer.step(h, inp)
            out.append(h)
            inp = h
        return out

    def run(self, x: Tensor, mask: Optional[np.ndarray] = None, h0: Optional[list] = None) -> tuple:
        """Encode x[B, T, d]; padded steps (mask 0) carry the previous state.

        Returns (final per-layer states, top-layer states per step [B, T, k]).
        """
        B, L = x.shape[0], x.shape[1]
        hs = h0 if h0 is not None else self.zeros(B)
        inp = x
        finals = []
        tops = None
        for li, layer in enumerate(self.layers):
            xps = T.unbind(layer.project(inp), axis=1)
            h = hs[li]
            steps = []
            for t in range(L):
                hn = layer.step_projected(h, xps[t])
                if mask is not None and not mask[:, t].all():
                    hn = T.where(mask[:, t][:, None], hn, h)
                h = hn
                steps.append(h)
            finals.append(h)
            tops = T.stack(steps, axis=1)
            inp = tops
        return finals, tops
