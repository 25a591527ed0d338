"""Plain-Python reference computations shared by the model tests.

Everything here uses lists and the math module only, so it shares no code
path with the numpy-backed implementation under test.
"""

from __future__ import annotations

import math


def sig(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def scalar_gru(h, x, W, Uzr, Uh, b):
    """One GRU update, gates laid out as [z | r | candidate] along the columns."""
    k, d = len(h), len(x)
    z = [sig(sum(x[i] * W[i][j] for i in range(d)) + sum(h[i] * Uzr[i][j] for i in range(k)) + b[j]) for j in range(k)]
    r = [sig(sum(x[i] * W[i][k + j] for i in range(d)) + sum(h[i] * Uzr[i][k + j] for i in range(k)) + b[k + j])
         for j in range(k)]
    out = []
    for j in range(k):
        c = math.tanh(sum(x[i] * W[i][2 * k + j] for i in range(d)) + sum(r[i] * h[i] * Uh[i][j] for i in range(k))
                      + b[2 * k + j])
        out.append((1 - z[j]) * h[j] + z[j] * c)
    return out


def layer_weights(params, prefix):
    return tuple(params[f"{prefix}.{n}"].data.tolist() for n in ("W", "U_zr", "U_h", "b"))


def scalar_stack(xs, layers, k):
    """Run a GRU stack from zero state over input vectors ``xs``; returns the top layer's final state."""
    seq = [list(x) for x in xs]
    for W, Uzr, Uh, b in layers:
        h = [0.0] * k
        out = []
        for x in seq:
            h = scalar_gru(h, x, W, Uzr, Uh, b)
            out.append(h)
        seq = out
    return seq[-1]


def elementwise(fn, vecs):
    return [fn(col) for col in zip(*vecs)]
