"""Minimal reverse-mode numeric core for the sequence models.

Everything is 64-bit floats on numpy. Differentiation is reverse-mode over a
small set of operations, each with an explicitly written backward function
(verified against central finite differences in the test suite). There is no
broadcasting engine and no GPU path; the model graphs are tiny and fixed.
"""

from __future__ import annotations

import json
import struct
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit

Array = np.ndarray

_GRAD_ENABLED = [True]


@contextmanager
def no_grad():
    """Disable graph construction (inference / finite-difference probes)."""
    _GRAD_ENABLED.append(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.pop()


def grad_enabled() -> bool:
    return _GRAD_ENABLED[-1]


class Tensor:
    """A node in the computation graph. Leaves with no parents are parameters
    or constants; `grad` accumulates during `backward`."""

    __slots__ = ("data", "grad", "parents", "bwd")

    def __init__(self, data, parents: tuple = (), bwd: Callable[[Array], None] | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Array | None = None
        self.parents = parents
        self.bwd = bwd

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    # checkpoints and ensemble workers move bare parameter values around
    def __getstate__(self):
        return self.data

    def __setstate__(self, state):
        self.data = state
        self.grad = None
        self.parents = ()
        self.bwd = None


def param(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64))


def value(x) -> Array:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def _make(data: Array, parents: Sequence, bwd: Callable[[Array], None]) -> Tensor:
    tparents = tuple(p for p in parents if isinstance(p, Tensor))
    if not _GRAD_ENABLED[-1] or not tparents:
        return Tensor(data)
    return Tensor(data, parents=tparents, bwd=bwd)


def _acc(t, g: Array) -> None:
    if isinstance(t, Tensor):
        if t.grad is None:
            t.grad = np.array(g, dtype=np.float64)
        else:
            t.grad += g


def backward(root: Tensor) -> None:
    """Reverse accumulation from a scalar root."""
    if root.data.shape != ():
        raise ValueError("backward expects a scalar loss")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    root.grad = np.array(1.0)
    for node in reversed(order):
        if node.bwd is not None and node.grad is not None:
            node.bwd(node.grad)


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


# ---------------------------------------------------------------------------
# primitive operations


def matvec(w, x) -> Tensor:
    wd, xd = value(w), value(x)
    out = wd @ xd

    def bwd(g: Array) -> None:
        _acc(w, np.outer(g, xd))
        _acc(x, wd.T @ g)

    return _make(out, (w, x), bwd)


def matvec_t(w, x) -> Tensor:
    """y = w.T @ x without materializing the transpose."""
    wd, xd = value(w), value(x)
    out = wd.T @ xd

    def bwd(g: Array) -> None:
        _acc(w, np.outer(xd, g))
        _acc(x, wd @ g)

    return _make(out, (w, x), bwd)


def gather_sum(q, index_matrix: Array) -> Tensor:
    """out[j] = sum_f q[index_matrix[j, f]] (used to compose factored scores)."""
    qd = value(q)
    out = qd[index_matrix].sum(axis=1)

    def bwd(g: Array) -> None:
        if isinstance(q, Tensor):
            dq = np.zeros_like(qd)
            np.add.at(dq, index_matrix.ravel(),
                      np.repeat(g, index_matrix.shape[1]))
            _acc(q, dq)

    return _make(out, (q,), bwd)


def affine(w, x, b) -> Tensor:
    wd, xd, bd = value(w), value(x), value(b)
    out = wd @ xd + bd

    def bwd(g: Array) -> None:
        _acc(w, np.outer(g, xd))
        _acc(x, wd.T @ g)
        _acc(b, g)

    return _make(out, (w, x, b), bwd)


def add_n(*terms) -> Tensor:
    out = value(terms[0]).copy()
    for t in terms[1:]:
        out += value(t)

    def bwd(g: Array) -> None:
        for t in terms:
            _acc(t, g)

    return _make(out, terms, bwd)


def mul(a, b) -> Tensor:
    ad, bd = value(a), value(b)
    out = ad * bd

    def bwd(g: Array) -> None:
        _acc(a, g * bd)
        _acc(b, g * ad)

    return _make(out, (a, b), bwd)


def scale(a, s: float) -> Tensor:
    ad = value(a)

    def bwd(g: Array) -> None:
        _acc(a, g * s)

    return _make(ad * s, (a,), bwd)


def tanh_t(a) -> Tensor:
    out = np.tanh(value(a))

    def bwd(g: Array) -> None:
        _acc(a, g * (1.0 - out * out))

    return _make(out, (a,), bwd)


def sigmoid_t(a) -> Tensor:
    out = _sigmoid(value(a))

    def bwd(g: Array) -> None:
        _acc(a, g * out * (1.0 - out))

    return _make(out, (a,), bwd)


def concat(parts) -> Tensor:
    datas = [value(p) for p in parts]
    sizes = [d.shape[0] for d in datas]
    out = np.concatenate(datas)

    def bwd(g: Array) -> None:
        off = 0
        for p, n in zip(parts, sizes):
            _acc(p, g[off:off + n])
            off += n

    return _make(out, tuple(parts), bwd)


def concat_cols(parts) -> Tensor:
    datas = [value(p) for p in parts]
    widths = [d.shape[1] for d in datas]
    out = np.concatenate(datas, axis=1)

    def bwd(g: Array) -> None:
        off = 0
        for p, w in zip(parts, widths):
            _acc(p, g[:, off:off + w])
            off += w

    return _make(out, tuple(parts), bwd)


def rows(table, idx: Sequence[int]) -> Tensor:
    """Embedding lookup: stack rows `idx` of a (V, d) table into an (n, d) matrix."""
    td = value(table)
    idx = list(idx)
    out = td[idx]

    def bwd(g: Array) -> None:
        if isinstance(table, Tensor):
            dt = np.zeros_like(td)
            np.add.at(dt, idx, g)
            _acc(table, dt)

    return _make(out, (table,), bwd)


def row(table, i: int) -> Tensor:
    td = value(table)
    out = td[i].copy()

    def bwd(g: Array) -> None:
        if isinstance(table, Tensor):
            dt = np.zeros_like(td)
            dt[i] = g
            _acc(table, dt)

    return _make(out, (table,), bwd)


def stack(vectors) -> Tensor:
    datas = [value(v) for v in vectors]
    out = np.stack(datas)

    def bwd(g: Array) -> None:
        for i, v in enumerate(vectors):
            _acc(v, g[i])

    return _make(out, tuple(vectors), bwd)


def slice_rows(a, start: int, end: int) -> Tensor:
    ad = value(a)
    out = ad[start:end].copy()

    def bwd(g: Array) -> None:
        da = np.zeros_like(ad)
        da[start:end] = g
        _acc(a, da)

    return _make(out, (a,), bwd)


def part(a, i: int) -> Tensor:
    ad = value(a)
    out = ad[i].copy()

    def bwd(g: Array) -> None:
        da = np.zeros_like(ad)
        da[i] = g
        _acc(a, da)

    return _make(out, (a,), bwd)


def _sigmoid(z: Array) -> Array:
    return expit(z)


def bce_logit(score, target: float) -> Tensor:
    """Binary cross-entropy on a raw logit scalar."""
    s = float(value(score))
    # softplus(s) - target*s, stable for large |s|
    loss = max(s, 0.0) + np.log1p(np.exp(-abs(s))) - target * s

    def bwd(g: Array) -> None:
        _acc(score, g * (_sigmoid(np.array(s)) - target))

    return _make(np.asarray(loss), (score,), bwd)


# ---------------------------------------------------------------------------
# softmax cross-entropy over a masked support


def masked_log_probs(logits: Array, valid_mask: Array) -> Array:
    """Full-size log-probability vector; -inf outside the valid support."""
    if not valid_mask.any():
        raise ValueError("empty valid support")
    z = logits[valid_mask]
    m = z.max()
    lse = m + np.log(np.exp(z - m).sum())
    out = np.full(logits.shape, -np.inf)
    out[valid_mask] = z - lse
    return out


def softmax_xent(logits, valid_mask: Array, target: int) -> tuple[float, Array]:
    """Masked cross-entropy; returns (loss, gradient wrt logits).

    Masked entries receive probability zero. Raises if the target is masked out.
    """
    logits = value(logits)
    valid_mask = np.asarray(valid_mask, dtype=bool)
    if not valid_mask[target]:
        raise ValueError(f"target {target} is masked out")
    logp = masked_log_probs(logits, valid_mask)
    loss = -logp[target]
    grad = np.zeros_like(logits)
    grad[valid_mask] = np.exp(logp[valid_mask])
    grad[target] -= 1.0
    return float(loss), grad


def xent_loss(logits: Tensor, valid_mask: Array, target: int) -> Tensor:
    loss, grad = softmax_xent(value(logits), valid_mask, target)

    def bwd(g: Array) -> None:
        _acc(logits, g * grad)

    return _make(np.asarray(loss), (logits,), bwd)


# ---------------------------------------------------------------------------
# initialization


def glorot_init(shape: tuple[int, ...], rng: np.random.Generator) -> Tensor:
    """Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)); rank <= 2.

    Rank-1 shapes are treated as a single output row (fan_out = 1).
    """
    if len(shape) > 2:
        raise ValueError("glorot_init supports rank <= 2")
    if len(shape) == 2:
        fan_out, fan_in = shape
    else:
        fan_in, fan_out = shape[0], 1
    b = np.sqrt(6.0 / (fan_in + fan_out))
    return param(rng.uniform(-b, b, size=shape))


def zeros_param(shape) -> Tensor:
    return param(np.zeros(shape))


# ---------------------------------------------------------------------------
# dropout


@dataclass
class DropoutMasks:
    """Variational dropout masks: sampled once per sequence and reused at
    every timestep. Inverted scaling, so all-ones means no dropout."""

    x: Array
    h: Array
    out: Array


def ones_masks(in_dim: int, hidden_dim: int) -> DropoutMasks:
    return DropoutMasks(np.ones(in_dim), np.ones(hidden_dim), np.ones(hidden_dim))


def sample_masks(rate: float, in_dim: int, hidden_dim: int, rng: np.random.Generator) -> DropoutMasks:
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    if rate == 0.0:
        return ones_masks(in_dim, hidden_dim)
    keep = 1.0 - rate

    def draw(n: int) -> Array:
        return (rng.random(n) < keep).astype(np.float64) / keep

    return DropoutMasks(draw(in_dim), draw(hidden_dim), draw(hidden_dim))


# ---------------------------------------------------------------------------
# LSTM: one layer, coupled input/forget gates, peepholes to the cell state


@dataclass
class LstmParams:
    """Gate weights fused as W = [Wf; Wc; Wo] over the input [x, h]."""

    W: Tensor   # (3*hidden, in_dim + hidden)
    b: Tensor   # (3*hidden,)
    pf: Tensor  # (hidden,) forget-gate peephole (reads previous cell)
    po: Tensor  # (hidden,) output-gate peephole (reads new cell)
    in_dim: int
    hidden_dim: int

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.W": self.W, f"{prefix}.b": self.b,
                f"{prefix}.pf": self.pf, f"{prefix}.po": self.po}


def init_lstm(in_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmParams:
    blocks = [glorot_init((hidden_dim, in_dim + hidden_dim), rng).data for _ in range(3)]
    return LstmParams(
        W=param(np.concatenate(blocks, axis=0)),
        b=zeros_param(3 * hidden_dim),
        pf=zeros_param(hidden_dim),
        po=zeros_param(hidden_dim),
        in_dim=in_dim,
        hidden_dim=hidden_dim,
    )


def _cell_forward(W: Array, b: Array, pf: Array, po: Array, u: Array, c: Array, nh: int):
    pre = W @ u + b
    f = _sigmoid(pre[:nh] + pf * c)
    g = np.tanh(pre[nh:2 * nh])
    c2 = f * c + (1.0 - f) * g
    o = _sigmoid(pre[2 * nh:] + po * c2)
    tc = np.tanh(c2)
    h2 = o * tc
    return f, g, o, c2, tc, h2


def _cell_backward(W: Array, pf: Array, po: Array, u: Array, c: Array,
                   f: Array, g: Array, o: Array, c2: Array, tc: Array,
                   dh2: Array, dc2_in: Array):
    """Returns (dpre (3h,), dpf, dpo, du, dc_prev)."""
    do = dh2 * tc
    dc2 = dc2_in + dh2 * o * (1.0 - tc * tc)
    dao = do * o * (1.0 - o)
    dc2 = dc2 + dao * po
    df = dc2 * (c - g)
    dg = dc2 * (1.0 - f)
    dc_prev = dc2 * f
    dag = dg * (1.0 - g * g)
    daf = df * f * (1.0 - f)
    dc_prev += daf * pf
    dpre = np.concatenate([daf, dag, dao])
    du = W.T @ dpre
    return dpre, daf * c, dao * c2, du, dc_prev


def lstm_step(p: LstmParams, h, c, x, masks: DropoutMasks) -> tuple[Tensor, Tensor]:
    """One step of the coupled-gate peephole cell.

    f = sigma(Wf [x,h] + pf*c + bf); i = 1 - f
    c' = f*c + i*tanh(Wc [x,h] + bc)
    o = sigma(Wo [x,h] + po*c' + bo); h' = o*tanh(c')
    Dropout masks are applied to the x and h inputs and the h' output.
    """
    nh = p.hidden_dim
    hd, cd, xd = value(h), value(c), value(x)
    Wd, bd, pfd, pod = p.W.data, p.b.data, p.pf.data, p.po.data
    u = np.concatenate([xd * masks.x, hd * masks.h])
    f, g, o, c2, tc, h2 = _cell_forward(Wd, bd, pfd, pod, u, cd, nh)
    hc = np.stack([h2 * masks.out, c2])

    def bwd(ghc: Array) -> None:
        dh2 = ghc[0] * masks.out
        dpre, dpf, dpo, du, dc_prev = _cell_backward(
            Wd, pfd, pod, u, cd, f, g, o, c2, tc, dh2, ghc[1])
        _acc(p.W, np.outer(dpre, u))
        _acc(p.b, dpre)
        _acc(p.pf, dpf)
        _acc(p.po, dpo)
        _acc(x, du[:p.in_dim] * masks.x)
        _acc(h, du[p.in_dim:] * masks.h)
        _acc(c, dc_prev)

    node = _make(hc, (p.W, p.b, p.pf, p.po, h, c, x), bwd)
    return part(node, 0), part(node, 1)


def lstm_seq(p: LstmParams, X, masks: DropoutMasks, reverse: bool = False) -> Tensor:
    """Run the cell over the rows of X from zero initial state; returns the
    (T, hidden) matrix of masked outputs aligned with the input rows.
    With reverse=True the rows are consumed last-to-first (output stays aligned).
    """
    Xd = value(X)
    T = Xd.shape[0]
    nh = p.hidden_dim
    Wd, bd, pfd, pod = p.W.data, p.b.data, p.pf.data, p.po.data
    order = range(T - 1, -1, -1) if reverse else range(T)
    us = np.empty((T, p.in_dim + nh))
    fs = np.empty((T, nh)); gs = np.empty((T, nh)); os_ = np.empty((T, nh))
    cs = np.empty((T, nh)); tcs = np.empty((T, nh)); cprev = np.empty((T, nh))
    H = np.empty((T, nh))
    h = np.zeros(nh)
    c = np.zeros(nh)
    for t in order:
        u = np.concatenate([Xd[t] * masks.x, h * masks.h])
        f, g, o, c2, tc, h2 = _cell_forward(Wd, bd, pfd, pod, u, c, nh)
        us[t], fs[t], gs[t], os_[t], cs[t], tcs[t], cprev[t] = u, f, g, o, c2, tc, c
        H[t] = h2 * masks.out
        h, c = h2, c2

    def bwd(gH: Array) -> None:
        dW = np.zeros_like(Wd)
        db = np.zeros_like(bd)
        dpf = np.zeros_like(pfd)
        dpo = np.zeros_like(pod)
        dX = np.zeros_like(Xd) if isinstance(X, Tensor) else None
        dh_next = np.zeros(nh)
        dc_next = np.zeros(nh)
        for t in reversed(list(order)):
            dh2 = gH[t] * masks.out + dh_next
            dpre, dpf_t, dpo_t, du, dc_prev = _cell_backward(
                Wd, pfd, pod, us[t], cprev[t], fs[t], gs[t], os_[t], cs[t], tcs[t],
                dh2, dc_next)
            dW += np.outer(dpre, us[t])
            db += dpre
            dpf += dpf_t
            dpo += dpo_t
            if dX is not None:
                dX[t] = du[:p.in_dim] * masks.x
            dh_next = du[p.in_dim:] * masks.h
            dc_next = dc_prev
        _acc(p.W, dW)
        _acc(p.b, db)
        _acc(p.pf, dpf)
        _acc(p.po, dpo)
        if dX is not None:
            _acc(X, dX)

    return _make(H, (p.W, p.b, p.pf, p.po, X), bwd)


# ---------------------------------------------------------------------------
# additive attention


@dataclass
class AttentionParams:
    Wd: Tensor  # (attn_dim, query_dim)
    We: Tensor  # (attn_dim, key_dim)
    v: Tensor   # (attn_dim,)

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.Wd": self.Wd, f"{prefix}.We": self.We, f"{prefix}.v": self.v}


def init_attention(query_dim: int, key_dim: int, attn_dim: int, rng: np.random.Generator) -> AttentionParams:
    return AttentionParams(
        Wd=glorot_init((attn_dim, query_dim), rng),
        We=glorot_init((attn_dim, key_dim), rng),
        v=glorot_init((attn_dim,), rng),
    )


def attend(p: AttentionParams, query, keys) -> tuple[Tensor, Tensor]:
    """Additive attention: weights proportional to exp(v . tanh(Wd q + We k)).

    Returns (weights, context); weights sum to one, context = sum_k w_k * key_k.
    """
    qd, Kd = value(query), value(keys)
    if Kd.shape[0] == 0:
        raise ValueError("attend requires at least one key")
    Wdd, Wed, vd = p.Wd.data, p.We.data, p.v.data
    P = Wdd @ qd
    Z = np.tanh(Kd @ Wed.T + P)
    s = Z @ vd
    m = s.max()
    e = np.exp(s - m)
    alpha = e / e.sum()
    z = alpha @ Kd

    def through_scores(ds: Array):
        """Common backward path below the score vector."""
        dv = Z.T @ ds
        dZ = np.outer(ds, vd)
        dA = dZ * (1.0 - Z * Z)
        dP = dA.sum(axis=0)
        _acc(p.v, dv)
        _acc(p.Wd, np.outer(dP, qd))
        _acc(query, Wdd.T @ dP)
        _acc(p.We, dA.T @ Kd)
        if isinstance(keys, Tensor):
            _acc(keys, dA @ Wed)

    def bwd_weights(galpha: Array) -> None:
        ds = alpha * (galpha - float(alpha @ galpha))
        through_scores(ds)

    def bwd_context(gz: Array) -> None:
        dalpha = Kd @ gz
        if isinstance(keys, Tensor):
            _acc(keys, np.outer(alpha, gz))
        ds = alpha * (dalpha - float(alpha @ dalpha))
        through_scores(ds)

    parents = (p.Wd, p.We, p.v, query, keys)
    return _make(alpha, parents, bwd_weights), _make(z, parents, bwd_context)


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    m: dict[str, Array]
    v: dict[str, Array]
    t: int

    @classmethod
    def for_params(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls(m={k: np.zeros_like(p.data) for k, p in params.items()},
                   v={k: np.zeros_like(p.data) for k, p in params.items()},
                   t=0)


def adam_step(params: dict[str, Tensor], grads: dict[str, Array], state: AdamState,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """Bias-corrected Adam update, in place."""
    state.t += 1
    b1t = 1.0 - beta1 ** state.t
    b2t = 1.0 - beta2 ** state.t
    for k, p in params.items():
        g = grads.get(k)
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape mismatch for {k}")
        m, v = state.m[k], state.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data -= lr * (m / b1t) / (np.sqrt(v / b2t) + eps)


def clip_global_norm(grads: dict[str, Array], max_norm: float = 5.0) -> float:
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm and total > 0:
        s = max_norm / total
        for g in grads.values():
            g *= s
    return total


# ---------------------------------------------------------------------------
# gradient verification


def grad_check(loss_fn: Callable[[], Tensor], params: dict[str, Tensor],
               eps: float = 1e-5, rng: np.random.Generator | None = None,
               max_coords: int = 60) -> float:
    """Compare analytic gradients with central finite differences on a random
    coordinate subset; returns the max relative error. `loss_fn` must be
    deterministic (fix dropout masks outside).

    The relative-error denominator is floored at the finite-difference noise
    level (machine epsilon times the loss magnitude over eps): coordinates
    whose true gradient sits below that floor cannot be resolved by central
    differences at all and would otherwise report pure rounding noise.
    """
    rng = rng or np.random.default_rng(0)
    zero_grads(params.values())
    loss = loss_fn()
    backward(loss)
    analytic = {k: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
                for k, p in params.items()}
    noise_floor = max(1e-6, 1e4 * np.finfo(float).eps * max(1.0, abs(float(loss.data))) / eps)
    coords = []
    for k, p in params.items():
        for flat in range(p.data.size):
            coords.append((k, flat))
    if len(coords) > max_coords:
        pick = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in pick]
    worst = 0.0
    for k, flat in coords:
        p = params[k]
        orig = p.data.flat[flat]
        with no_grad():
            p.data.flat[flat] = orig + eps
            hi = float(loss_fn().data)
            p.data.flat[flat] = orig - eps
            lo = float(loss_fn().data)
        p.data.flat[flat] = orig
        numeric = (hi - lo) / (2.0 * eps)
        a = analytic[k].flat[flat]
        err = abs(a - numeric) / max(abs(a), abs(numeric), noise_floor)
        worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# checkpoint serialization

_MAGIC = b"PGMCK001"


def save_checkpoint(path, meta: dict, params: dict[str, Tensor | Array]) -> None:
    """Versioned binary checkpoint: header json (model kind, domain, dims,
    vocab) then named little-endian float64 arrays, sorted by name. Byte-stable
    for identical inputs."""
    blob = bytearray()
    blob += _MAGIC
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    blob += struct.pack("<I", len(meta_bytes))
    blob += meta_bytes
    names = sorted(params)
    blob += struct.pack("<I", len(names))
    for name in names:
        data = value(params[name])
        nb = name.encode()
        blob += struct.pack("<H", len(nb))
        blob += nb
        blob += struct.pack("<B", data.ndim)
        for d in data.shape:
            blob += struct.pack("<I", d)
        blob += np.ascontiguousarray(data, dtype="<f8").tobytes()
    with open(path, "wb") as f:
        f.write(bytes(blob))


def load_checkpoint(path) -> tuple[dict, dict[str, Array]]:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != _MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    off = 8
    (meta_len,) = struct.unpack_from("<I", blob, off); off += 4
    meta = json.loads(blob[off:off + meta_len].decode()); off += meta_len
    (n,) = struct.unpack_from("<I", blob, off); off += 4
    params: dict[str, Array] = {}
    for _ in range(n):
        (name_len,) = struct.unpack_from("<H", blob, off); off += 2
        name = blob[off:off + name_len].decode(); off += name_len
        (rank,) = struct.unpack_from("<B", blob, off); off += 1
        shape = []
        for _ in range(rank):
            (d,) = struct.unpack_from("<I", blob, off); off += 4
            shape.append(d)
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape)
        off += count * 8
        params[name] = arr.astype(np.float64)
    return meta, params
