from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpe.nn import checkpoint
from dpe.nn import tensor as T
from dpe.nn.layers import GRULayer, GRUStack, Params, gru_step
from dpe.nn.optim import Adam, AdamState, adam_step
from dpe.nn.tensor import ShapeMismatch, Tensor
from oracles import scalar_gru

RNG = np.random.default_rng(1234)


def param(*shape, scale=1.0):
    return Tensor(RNG.normal(0, scale, shape), requires_grad=True)


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    num = np.linalg.norm(a - b)
    den = max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)
    return float(num / den)


def fd_check(loss_fn, params, h=1e-6, tol=1e-5):
    """Central finite differences of the scalar ``loss_fn()`` w.r.t. every tensor in ``params``."""
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        numeric = np.zeros_like(p.data)
        it = np.nditer(p.data, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p.data[i]
            p.data[i] = old + h
            up = float(loss_fn().data)
            p.data[i] = old - h
            down = float(loss_fn().data)
            p.data[i] = old
            numeric[i] = (up - down) / (2 * h)
        err = rel_err(analytic, numeric)
        assert err < tol, f"relative error {err:.2e} for {p.shape}"
    return loss


def weighted_sum(t: Tensor, seed: int = 0) -> Tensor:
    """Scalar projection with fixed random weights, so every output entry matters."""
    w = np.random.default_rng(seed).normal(size=t.shape)
    return T.tsum(T.mul(t, w))


# ------------------------------------------------------------------ elementary ops


@pytest.mark.parametrize("name,fn,shapes", [
    ("add", lambda a, b: T.add(a, b), [(3, 4), (4,)]),
    ("sub", lambda a, b: T.sub(a, b), [(3, 4), (3, 1)]),
    ("mul", lambda a, b: T.mul(a, b), [(3, 4), (3, 4)]),
    ("sigmoid", lambda a: T.sigmoid(a), [(3, 4)]),
    ("tanh", lambda a: T.tanh(a), [(3, 4)]),
    ("where", lambda a, b: T.where(np.array([[1], [0], [1]]), a, b), [(3, 4), (3, 4)]),
    ("matmul", lambda a, b: T.matmul(a, b), [(2, 3, 4), (4, 5)]),
    ("reshape", lambda a: T.reshape(a, (6, 2)), [(3, 4)]),
    ("getitem", lambda a: T.getitem(a, np.array([[0, 2, 2], [1, 0, 2]])), [(3, 4)]),
    ("take", lambda a: T.take(a, np.array([[0, 3], [3, 3]])), [(5, 2)]),
    ("concat", lambda a, b: T.concat([a, b], axis=0), [(2, 3), (4, 3)]),
    ("stack", lambda a, b: T.stack([a, b], axis=1), [(2, 3), (2, 3)]),
    ("tsum_axis", lambda a: T.tsum(a, axis=1), [(3, 4)]),
    ("mean", lambda a: T.reshape(T.mean(a), (1,)), [(3, 4)]),
    ("avg_pool", lambda a: T.avg_pool(a, np.array([[1, 1, 0], [1, 0, 0]])), [(2, 3, 4)]),
    ("max_pool", lambda a: T.max_pool(a, np.array([[1, 1, 0], [1, 1, 1]])), [(2, 3, 4)]),
    ("linear_t", lambda a, b: T.linear_t(a, b), [(3, 4), (5, 4)]),
])
def test_elementary_op_gradients(name, fn, shapes):
    ps = [param(*s) for s in shapes]
    fd_check(lambda: weighted_sum(fn(*ps)), ps)


def test_unbind_gradients():
    a = param(2, 4, 3)
    fd_check(lambda: T.add(weighted_sum(T.unbind(a, 1)[1], 1), weighted_sum(T.unbind(a, 1)[3], 2)), [a])
    parts = T.unbind(a, axis=1)
    assert len(parts) == 4 and np.array_equal(parts[2].data, a.data[:, 2])


def test_softmax_xent_gradient():
    z = param(4, 5)
    y = np.array([0, 3, 4, 1])
    fd_check(lambda: T.softmax_xent(z, y)[0], [z])
    a = param(5)
    fd_check(lambda: T.softmax_xent(a, 2)[0], [a])
    probs = T.softmax(a.data)
    a.grad = None
    T.softmax_xent(a, 2)[0].backward()
    onehot = np.eye(5)[2]
    assert np.allclose(a.grad, probs - onehot, atol=1e-12)


# ------------------------------------------------------------------ fused ops


def test_grouped_linear_gradients():
    x, W, b = param(6, 3), param(4, 3, 5), param(4, 5)
    g = np.array([0, 2, 2, 3, 0, 0])
    fd_check(lambda: weighted_sum(T.grouped_linear(x, W, b, g)), [x, W, b])
    W1, b1 = param(3, 5), param(5)
    fd_check(lambda: weighted_sum(T.grouped_linear(x, W1, b1)), [x, W1, b1])


def test_grouped_linear_matches_per_row_loop():
    x, W, b = param(5, 3), param(3, 3, 2), param(3, 2)
    g = np.array([2, 0, 1, 2, 2])
    out = T.grouped_linear(x, W, b, g).data
    for r in range(5):
        assert np.allclose(out[r], x.data[r] @ W.data[g[r]] + b.data[g[r]])


def test_gru_cell_gradients():
    k = 3
    xp, h, Uzr, Uh = param(4, 3 * k), param(4, k), param(k, 2 * k, scale=0.5), param(k, k, scale=0.5)
    fd_check(lambda: weighted_sum(T.gru_cell(xp, h, Uzr, Uh)), [xp, h, Uzr, Uh])
    Gzr, Gh = param(2, k, 2 * k, scale=0.5), param(2, k, k, scale=0.5)
    g = np.array([1, 0, 1, 1])
    fd_check(lambda: weighted_sum(T.gru_cell(xp, h, Gzr, Gh, g)), [xp, h, Gzr, Gh])


def test_gru_cell_matches_composed_ops():
    params = Params()
    layer = GRULayer(params, "g", 4, 3, np.random.default_rng(0))
    x, h = Tensor(RNG.normal(size=(5, 4))), Tensor(RNG.normal(size=(5, 3)))
    xp = layer.project(x)
    assert np.allclose(layer.step_projected(h, xp).data, layer.step_composed(h, xp).data, atol=1e-14)


def test_scatter_rows_gradients():
    H, new = param(3, 4, 2), param(3, 2)
    slots, active = np.array([1, 3, 0]), np.array([True, False, True])
    out = T.scatter_rows(H, new, slots, active).data
    assert np.array_equal(out[0, 1], new.data[0]) and np.array_equal(out[1], H.data[1])
    fd_check(lambda: weighted_sum(T.scatter_rows(H, new, slots, active)), [H, new])


def test_masked_prod_gradients_and_values():
    H, h0 = param(3, 4, 2), param(2)
    mask = np.array([[1, 0, 1, 1], [0, 0, 0, 0], [0, 1, 0, 0]], dtype=bool)
    out = T.masked_prod(H, mask, h0).data
    assert np.allclose(out[0], H.data[0, 0] * H.data[0, 2] * H.data[0, 3])
    assert np.allclose(out[1], h0.data) and np.allclose(out[2], H.data[2, 1])
    fd_check(lambda: weighted_sum(T.masked_prod(H, mask, h0)), [H, h0])


# ------------------------------------------------------------------ GRU contract


def zero_layer(d, k):
    params = Params()
    layer = GRULayer(params, "z", d, k, np.random.default_rng(0))
    for p in params.values():
        p.data[...] = 0.0
    return layer


def test_gru_zero_params_halves_state():
    layer = zero_layer(3, 4)
    h0 = np.array([0.4, -1.0, 2.0, 0.0])
    assert np.allclose(gru_step(h0, np.ones(3), layer).data, 0.5 * h0)
    assert np.allclose(gru_step(np.zeros(4), np.ones(3), layer).data, 0.0)


def test_gru_matches_scalar_oracle():
    params = Params()
    layer = GRULayer(params, "o", 3, 4, np.random.default_rng(5))
    layer.b.data[...] = RNG.normal(size=12)
    h, x = RNG.normal(size=4), RNG.normal(size=3)
    want = scalar_gru(list(h), list(x), layer.W.data.tolist(), layer.U_zr.data.tolist(), layer.U_h.data.tolist(),
                      layer.b.data.tolist())
    assert np.allclose(gru_step(h, x, layer).data, want, atol=1e-12)


def test_gru_chain_of_five_gradients():
    params = Params()
    layer = GRULayer(params, "c", 3, 3, np.random.default_rng(7))
    xs = [Tensor(RNG.normal(size=(2, 3))) for _ in range(5)]

    def loss():
        h = Tensor(np.zeros((2, 3)))
        for x in xs:
            h = layer.step(h, x)
        return weighted_sum(h)

    fd_check(loss, list(params.values()))


def test_gru_shape_mismatch():
    layer = zero_layer(3, 4)
    with pytest.raises(ShapeMismatch):
        layer.step(np.zeros(4), np.zeros(5))


def test_stack_masked_steps_carry_state():
    params = Params()
    stack = GRUStack(params, "s", 2, 3, 2, np.random.default_rng(3))
    x = RNG.normal(size=(2, 4, 2))
    mask = np.array([[1, 1, 0, 0], [1, 1, 1, 1]], dtype=float)
    finals, _ = stack.run(Tensor(x), mask)
    short, _ = stack.run(Tensor(x[:1, :2]))
    assert np.allclose(finals[-1].data[0], short[-1].data[0])


def test_stack_gradients():
    params = Params()
    stack = GRUStack(params, "s", 2, 3, 2, np.random.default_rng(3))
    x = Tensor(RNG.normal(size=(2, 3, 2)))
    mask = np.array([[1, 1, 0], [1, 1, 1]], dtype=float)
    fd_check(lambda: weighted_sum(stack.run(x, mask)[0][-1]), list(params.values()))


# ------------------------------------------------------------------ backward contract


def test_linear_map_gradient():
    W = param(3, 4)
    x = RNG.normal(size=4)
    T.tsum(T.matmul(W, Tensor(x[:, None]))).backward()
    assert np.allclose(W.grad, np.outer(np.ones(3), x))


def test_untracked_tensors_get_no_gradient():
    a, b = param(3), Tensor(RNG.normal(size=3))
    T.tsum(T.mul(a, b)).backward()
    assert b.grad is None and a.grad is not None


def test_no_grad_builds_no_graph():
    a = param(3)
    with T.no_grad():
        out = T.mul(a, 2.0)
    assert not out.requires_grad


def test_max_pool_routes_to_argmax():
    h = Tensor(np.array([[1.0, 5.0], [3.0, 5.0]]), requires_grad=True)
    T.tsum(T.max_pool(h)).backward()
    assert h.grad.tolist() == [[0.0, 1.0], [1.0, 0.0]]  # ties go to the lowest row


# ------------------------------------------------------------------ softmax and pooling


def test_uniform_softmax_loss():
    loss, probs = T.softmax_xent(Tensor(np.zeros(4)), 1)
    assert abs(float(loss.data) - math.log(4)) < 1e-12
    assert np.allclose(probs, 0.25)


def test_softmax_large_logit_is_stable():
    z = np.zeros(4)
    z[2] = 1000.0
    loss, probs = T.softmax_xent(Tensor(z), 2)
    assert float(loss.data) < 1e-12 and np.isfinite(probs).all()


def test_softmax_label_out_of_range():
    with pytest.raises(T.LabelOutOfRange):
        T.softmax_xent(Tensor(np.zeros(3)), 3)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=10))
def test_softmax_normalisation(z):
    p = T.softmax(np.array(z))
    assert (p >= 0).all() and abs(p.sum() - 1.0) <= 1e-12


def test_pool_examples():
    one = Tensor(np.array([[2.0, -1.0]]))
    assert np.array_equal(T.max_pool(one).data, [2.0, -1.0])
    assert np.array_equal(T.avg_pool(one).data, [2.0, -1.0])
    rows = Tensor(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.array_equal(T.max_pool(rows).data, [1.0, 1.0])
    assert np.array_equal(T.avg_pool(rows).data, [0.5, 0.5])
    with pytest.raises(T.AllMasked):
        T.max_pool(rows, np.zeros(2))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_pools_permutation_invariant(n, seed):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(n, 3))
    perm = rng.permutation(n)
    assert np.array_equal(T.max_pool(Tensor(h)).data, T.max_pool(Tensor(h[perm])).data)
    assert np.allclose(T.avg_pool(Tensor(h)).data, T.avg_pool(Tensor(h[perm])).data, rtol=0, atol=1e-15)


def test_padded_pool_equals_unpadded_loop():
    rng = np.random.default_rng(9)
    rows = [rng.normal(size=(n, 3)) for n in (1, 4, 2)]
    padded = np.zeros((3, 4, 3))
    mask = np.zeros((3, 4))
    for i, r in enumerate(rows):
        padded[i, :len(r)] = r
        padded[i, len(r):] = 99.0  # garbage in padding must not leak
        mask[i, :len(r)] = 1
    mx = T.max_pool(Tensor(padded), mask).data
    av = T.avg_pool(Tensor(padded), mask).data
    for i, r in enumerate(rows):
        assert np.array_equal(mx[i], r.max(axis=0))
        assert np.allclose(av[i], r.mean(axis=0))


# ------------------------------------------------------------------ Adam


def test_adam_first_step_closed_form():
    p = Params()
    w = p.add("w", np.zeros(5))
    w.grad = np.ones(5)
    Adam(p, lr=1e-4).step()
    assert np.allclose(w.data, -1e-4 * (1 / (1 + 1e-8)), rtol=0, atol=1e-18)


def test_adam_zero_gradient_keeps_params():
    p = Params()
    w = p.add("w", np.ones(3))
    st_ = AdamState()
    st_.m["w"] = np.full(3, 0.5)
    st_.v["w"] = np.full(3, 0.25)
    adam_step(p, {"w": np.zeros(3)}, st_)
    assert np.allclose(w.data, 1.0 - 1e-4 * (0.45 / 0.1) / (np.sqrt(0.25 * 0.999 / 0.001) + 1e-8))
    assert np.allclose(st_.m["w"], 0.45) and np.allclose(st_.v["w"], 0.25 * 0.999)
    fresh = Params()
    u = fresh.add("u", np.ones(3))
    adam_step(fresh, {"u": np.zeros(3)}, AdamState())
    assert np.array_equal(u.data, np.ones(3))


def test_adam_two_steps_scalar_oracle():
    p = Params()
    w = p.add("w", np.array([0.3]))
    st_ = AdamState(lr=0.01)
    g = 0.7
    m = v = 0.0
    x = 0.3
    for t in (1, 2):
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        x -= 0.01 * (m / (1 - 0.9 ** t)) / (math.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        adam_step(p, {"w": np.array([g])}, st_)
    assert abs(w.data[0] - x) < 1e-15 and st_.t == 2


def test_adam_shape_mismatch():
    p = Params()
    p.add("w", np.zeros(2))
    with pytest.raises(ShapeMismatch):
        adam_step(p, {"w": np.zeros(3)}, AdamState())


# ------------------------------------------------------------------ init and checkpoints


def test_seeded_init_is_identical():
    a, b = Params(), Params()
    GRUStack(a, "s", 3, 4, 2, np.random.default_rng(11))
    GRUStack(b, "s", 3, 4, 2, np.random.default_rng(11))
    assert all(np.array_equal(a[k].data, b[k].data) for k in a)
    s = math.sqrt(6 / (3 + 4))
    assert np.abs(a["s.l0.W"].data).max() <= s and not a["s.l0.b"].data.any()


def test_checkpoint_round_trip(tmp_path):
    p = Params()
    GRUStack(p, "s", 3, 4, 2, np.random.default_rng(2))
    checkpoint.save(tmp_path / "m.dpe", p, {"architecture": "x", "vocab_hash": "abc", "seed": 2})
    q, meta = checkpoint.load(tmp_path / "m.dpe")
    assert list(q) == list(p) and meta["vocab_hash"] == "abc"
    assert all(np.array_equal(p[k].data, q[k].data) for k in p)
    raw = (tmp_path / "m.dpe").read_bytes()
    assert raw[:4] == b"DPE1"
    (tmp_path / "bad.dpe").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load(tmp_path / "bad.dpe")
