"""Reverse-mode automatic differentiation over float64 numpy arrays.

Each op builds a node holding its parents and a closure that pushes the
output gradient back to them.  ``backward`` walks the graph in reverse
topological order.  Under ``no_grad()`` ops return untracked tensors and no
graph is built.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Optional, Sequence

import numpy as np

_GRAD_ENABLED = [True]


@contextlib.contextmanager
def no_grad():
    prev = _GRAD_ENABLED[0]
    _GRAD_ENABLED[0] = False
    try:
        yield
    finally:
        _GRAD_ENABLED[0] = prev


class GraphCycle(RuntimeError):
    pass


class ShapeMismatch(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward: Optional[Callable] = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __repr__(self) -> str:
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        backward(self, grad)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: Sequence[Tensor], backward_fn: Callable) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED[0] and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def backward(root: Tensor, grad: Optional[np.ndarray] = None) -> None:
    """Accumulate d(root)/d(t) into ``t.grad`` for every tracked tensor ``t``."""
    if grad is None:
        if root.data.size != 1:
            raise ValueError("backward() without a gradient needs a scalar")
        grad = np.ones_like(root.data)
    order: list = []
    state: dict = {}
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        key = id(node)
        if done:
            state[key] = 2
            order.append(node)
            continue
        s = state.get(key)
        if s == 2:
            continue
        if s == 1:
            raise GraphCycle("cycle in autodiff graph")
        state[key] = 1
        stack.append((node, True))
        for p in node._parents:
            ps = state.get(id(p))
            if ps == 1:
                raise GraphCycle("cycle in autodiff graph")
            if ps is None and p.requires_grad:
                stack.append((p, False))
    grads = {id(root): np.asarray(grad, dtype=np.float64)}
    owned: set = set()  # gradient buffers allocated here, safe to update in place
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            _accum(node, g)
            continue
        for p, pg in zip(node._parents, node._backward(g)):
            if pg is None or not p.requires_grad:
                continue
            k = id(p)
            if isinstance(pg, _SliceGrad):
                if k not in grads:
                    grads[k] = np.zeros(p.data.shape)
                    owned.add(k)
                elif k not in owned:
                    grads[k] = np.array(grads[k], dtype=np.float64, copy=True)
                    owned.add(k)
                grads[k][pg.index] += pg.value
            elif k in grads:
                grads[k] = grads[k] + pg
                owned.add(k)
            else:
                grads[k] = pg
                owned.discard(k)


class _SliceGrad:
    """Gradient that is zero outside ``index``; accumulated in place by ``backward``."""

    __slots__ = ("index", "value")

    def __init__(self, index, value):
        self.index, self.value = index, value


# ------------------------------------------------------------------ elementwise


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data - b.data, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _node(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def sigmoid(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = 0.5 * (np.tanh(0.5 * a.data) + 1.0)
    return _node(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _node(out, (a,), lambda g: (g * (1.0 - out * out),))


def where(mask: np.ndarray, a, b) -> Tensor:
    """mask * a + (1 - mask) * b for a constant 0/1 mask (broadcastable)."""
    a, b = as_tensor(a), as_tensor(b)
    m = np.asarray(mask, dtype=np.float64)
    out = m * a.data + (1.0 - m) * b.data
    return _node(out, (a, b), lambda g: (_unbroadcast(g * m, a.shape), _unbroadcast(g * (1.0 - m), b.shape)))


# ------------------------------------------------------------------ linear algebra


def matmul(a, b) -> Tensor:
    """a[..., n] @ b[n, m]."""
    a, b = as_tensor(a), as_tensor(b)
    if b.data.ndim != 2 or a.data.shape[-1] != b.data.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")

    def bw(g):
        ga = g @ b.data.T
        a2 = a.data.reshape(-1, a.data.shape[-1])
        gb = a2.T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return _node(a.data @ b.data, (a, b), bw)


# ------------------------------------------------------------------ shape ops


def reshape(a: Tensor, shape: tuple) -> Tensor:
    a = as_tensor(a)
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def getitem(a: Tensor, idx) -> Tensor:
    a = as_tensor(a)

    def bw(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        return (full,)

    return _node(a.data[idx], (a,), bw)


def take(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup: table[ids] with shape ids.shape + table.shape[1:]."""
    ids = np.asarray(ids, dtype=np.int64)

    def bw(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, *table.shape[1:]))
        return (full,)

    return _node(table.data[ids], (table,), bw)


def unbind(a: Tensor, axis: int = 1) -> list:
    """Split ``a`` into its slices along ``axis``; backward writes each slice's gradient in place."""
    a = as_tensor(a)
    out = []
    for t in range(a.shape[axis]):
        idx = (slice(None),) * axis + (t,)
        out.append(_node(a.data[idx], (a,), lambda g, idx=idx: (_SliceGrad(idx, g),)))
    return out


def concat(ts: Sequence[Tensor], axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in ts]
    sizes = [t.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]
    return _node(np.concatenate([t.data for t in ts], axis=axis), ts, lambda g: tuple(np.split(g, splits, axis=axis)))


def stack(ts: Sequence[Tensor], axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in ts]
    n = len(ts)

    def bw(g):
        return tuple(np.take(g, i, axis=axis) for i in range(n))

    return _node(np.stack([t.data for t in ts], axis=axis), ts, bw)


# ------------------------------------------------------------------ reductions


def tsum(a: Tensor, axis=None) -> Tensor:
    a = as_tensor(a)

    def bw(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(np.asarray(a.data.sum(axis=axis)), (a,), bw)


def mean(a: Tensor) -> Tensor:
    a = as_tensor(a)
    n = a.data.size
    return _node(np.asarray(a.data.mean()), (a,), lambda g: (np.broadcast_to(g / n, a.shape).copy(),))


class AllMasked(ValueError):
    pass


def max_pool(h: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Element-wise max over rows (axis -2) of h[..., n, k], ignoring masked rows.

    Ties route the gradient to the lowest row index.
    """
    h = as_tensor(h)
    if mask is None:
        mask = np.ones(h.shape[:-1])
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise AllMasked("every row is masked")
    vals = np.where(mask[..., None], h.data, -np.inf)
    arg = vals.argmax(axis=-2)  # [..., k], first max wins
    out = np.take_along_axis(h.data, arg[..., None, :], axis=-2)[..., 0, :]

    def bw(g):
        full = np.zeros_like(h.data)
        np.put_along_axis(full, arg[..., None, :], g[..., None, :], axis=-2)
        return (full,)

    return _node(out, (h,), bw)


def avg_pool(h: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """Mean over unmasked rows (axis -2) of h[..., n, k]."""
    h = as_tensor(h)
    if mask is None:
        mask = np.ones(h.shape[:-1])
    m = np.asarray(mask, dtype=np.float64)
    cnt = m.sum(axis=-1)
    if (cnt == 0).any():
        raise AllMasked("every row is masked")
    w = (m / cnt[..., None])[..., None]
    out = (h.data * w).sum(axis=-2)
    return _node(out, (h,), lambda g: (g[..., None, :] * w,))


# ------------------------------------------------------------------ loss


class LabelOutOfRange(ValueError):
    pass


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_xent(logits: Tensor, labels) -> tuple:
    """Mean cross-entropy of logits[B, C] (or [C]) against integer labels.

    Returns (loss tensor, probabilities array).
    """
    logits = as_tensor(logits)
    single = logits.data.ndim == 1
    z = logits.data[None, :] if single else logits.data
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    C = z.shape[-1]
    if C < 2:
        raise ValueError("need at least two classes")
    if (labels < 0).any() or (labels >= C).any():
        raise LabelOutOfRange(f"label outside [0, {C})")
    shifted = z - z.max(axis=-1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=-1))
    logp = shifted - logsum[:, None]
    B = z.shape[0]
    loss = -logp[np.arange(B), labels].mean()
    probs = np.exp(logp)

    def bw(g):
        d = probs.copy()
        d[np.arange(B), labels] -= 1.0
        d *= g / B
        return (d[0] if single else d,)

    return _node(np.asarray(loss), (logits,), bw), (probs[0] if single else probs)


# ------------------------------------------------------------------ fused recurrent ops
#
# These collapse a GRU step (and the bookkeeping of per-variable recurrent
# states) into single graph nodes; each has a hand-written backward that the
# test-suite checks against finite differences and against the composed ops.


def _group_rows(groups: np.ndarray):
    for g in np.unique(groups):
        yield int(g), np.nonzero(groups == g)[0]


def _gmm(x: np.ndarray, W: np.ndarray, groups) -> np.ndarray:
    """x[B, n] @ W (or W[groups[b]] per row when W is stacked [G, n, m])."""
    if groups is None:
        return x @ W
    out = np.empty(x.shape[:-1] + (W.shape[-1],))
    for g, idx in _group_rows(groups):
        out[idx] = x[idx] @ W[g]
    return out


def _gmm_wgrad(x: np.ndarray, gout: np.ndarray, W: np.ndarray, groups) -> np.ndarray:
    if groups is None:
        return x.reshape(-1, x.shape[-1]).T @ gout.reshape(-1, gout.shape[-1])
    gw = np.zeros_like(W)
    for g, idx in _group_rows(groups):
        gw[g] = x[idx].T @ gout[idx]
    return gw


def _gmm_xgrad(gout: np.ndarray, W: np.ndarray, groups) -> np.ndarray:
    if groups is None:
        return gout @ W.T
    gx = np.empty(gout.shape[:-1] + (W.shape[-2],))
    for g, idx in _group_rows(groups):
        gx[idx] = gout[idx] @ W[g].T
    return gx


def grouped_linear(x, W: Tensor, b: Tensor, groups: Optional[np.ndarray] = None) -> Tensor:
    """x W + b; with stacked W[G, n, m] / b[G, m] each row b uses group ``groups[b]``."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    groups = None if groups is None else np.asarray(groups, dtype=np.int64)
    if groups is not None and (x.data.ndim != 2 or W.data.ndim != 3):
        raise ShapeMismatch("grouped_linear expects x[B, n] and W[G, n, m]")
    bias = b.data if groups is None else b.data[groups]
    out = _gmm(x.data, W.data, groups) + bias

    def bw(g):
        gx = _gmm_xgrad(g, W.data, groups)
        gW = _gmm_wgrad(x.data, g, W.data, groups)
        if groups is None:
            gb = g.reshape(-1, g.shape[-1]).sum(axis=0)
        else:
            gb = np.zeros_like(b.data)
            np.add.at(gb, groups, g)
        return gx, gW, gb

    return _node(out, (x, W, b), bw)


def gru_cell(xp, h, U_zr: Tensor, U_h: Tensor, groups: Optional[np.ndarray] = None) -> Tensor:
    """One GRU update from pre-projected input ``xp`` = x W + b (gates z, r, candidate side by side).

    z = s(xp_z + h Uz), r = s(xp_r + h Ur), c = tanh(xp_c + (r * h) Uh), h' = h + z (c - h).
    """
    xp, h, U_zr, U_h = as_tensor(xp), as_tensor(h), as_tensor(U_zr), as_tensor(U_h)
    groups = None if groups is None else np.asarray(groups, dtype=np.int64)
    k = h.data.shape[-1]
    if xp.data.shape[-1] != 3 * k or U_h.data.shape[-1] != k:
        raise ShapeMismatch(f"GRU cell widths do not match hidden size {k}")
    hd = h.data
    hzr = _gmm(hd, U_zr.data, groups)
    z = 0.5 * (np.tanh(0.5 * (xp.data[..., :k] + hzr[..., :k])) + 1.0)
    r = 0.5 * (np.tanh(0.5 * (xp.data[..., k:2 * k] + hzr[..., k:])) + 1.0)
    a = r * hd
    c = np.tanh(xp.data[..., 2 * k:] + _gmm(a, U_h.data, groups))
    out = hd + z * (c - hd)

    def bw(g):
        dz = g * (c - hd)
        dpre_c = g * z * (1.0 - c * c)
        da = _gmm_xgrad(dpre_c, U_h.data, groups)
        dpre_z = dz * z * (1.0 - z)
        dpre_r = da * hd * r * (1.0 - r)
        dhzr = np.concatenate([dpre_z, dpre_r], axis=-1)
        dh = g * (1.0 - z) + da * r + _gmm_xgrad(dhzr, U_zr.data, groups)
        dxp = np.concatenate([dpre_z, dpre_r, dpre_c], axis=-1)
        return dxp, dh, _gmm_wgrad(hd, dhzr, U_zr.data, groups), _gmm_wgrad(a, dpre_c, U_h.data, groups)

    return _node(out, (xp, h, U_zr, U_h), bw)


def scatter_rows(H, new, slots: np.ndarray, active: np.ndarray) -> Tensor:
    """Copy of H[B, S, k] with H[b, slots[b]] = new[b] for rows where ``active`` is set."""
    H, new = as_tensor(H), as_tensor(new)
    slots = np.asarray(slots, dtype=np.int64)
    rows = np.nonzero(np.asarray(active, dtype=bool))[0]
    cols = slots[rows]
    out = H.data.copy()
    out[rows, cols] = new.data[rows]

    def bw(g):
        gH = g.copy()
        gH[rows, cols] = 0.0
        gn = np.zeros_like(new.data)
        gn[rows] = g[rows, cols]
        return gH, gn

    return _node(out, (H, new), bw)


def masked_prod(H, mask: np.ndarray, h0) -> Tensor:
    """Per row b: product over slots s with mask[b, s] of H[b, s]; rows with an empty mask take h0."""
    H, h0 = as_tensor(H), as_tensor(h0)
    m = np.asarray(mask, dtype=bool)
    B, S, k = H.data.shape
    terms = np.where(m[..., None], H.data, 1.0)
    # prefix / suffix products give leave-one-out products without division
    pre = np.ones((B, S + 1, k))
    suf = np.ones((B, S + 1, k))
    for s in range(S):
        pre[:, s + 1] = pre[:, s] * terms[:, s]
        suf[:, S - 1 - s] = suf[:, S - s] * terms[:, S - 1 - s]
    prod = pre[:, S]
    empty = ~m.any(axis=1)
    out = np.where(empty[:, None], np.broadcast_to(h0.data, (B, k)), prod)

    def bw(g):
        gH = np.where(m[..., None], g[:, None, :] * pre[:, :S] * suf[:, 1:], 0.0)
        gH[empty] = 0.0
        gh0 = _unbroadcast(np.where(empty[:, None], g, 0.0), h0.shape)
        return gH, gh0

    return _node(out, (H, h0), bw)


def linear_t(x, W: Tensor) -> Tensor:
    """x[..., n] @ W.T for W[m, n]."""
    x, W = as_tensor(x), as_tensor(W)
    if x.data.shape[-1] != W.data.shape[1]:
        raise ShapeMismatch(f"cannot apply {W.shape} to {x.shape}")

    def bw(g):
        g2 = g.reshape(-1, g.shape[-1])
        return g @ W.data, g2.T @ x.data.reshape(-1, x.data.shape[-1])

    return _node(x.data @ W.data.T, (x, W), bw)
