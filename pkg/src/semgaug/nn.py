"""Minimal neural-net primitives with explicit forward caches and backprop.

Parameters live in a flat dict name -> ndarray. Every op is a pure pair
(fwd, bwd): fwd returns (output, cache); bwd consumes the cache and the
upstream gradient, accumulates parameter gradients into a dict, and
returns the input gradient. Activations are SiLU throughout so losses
stay smooth for finite-difference checks.
"""

import numpy as np

from . import backend


def _acc(grads, name, g):
    if name in grads:
        grads[name] += g
    else:
        grads[name] = g


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ------------------------------------------------------------------ linear


def linear_fwd(p, name, x):
    y = x @ p[name + ".w"].T + p[name + ".b"]
    return y, (name, x)


def linear_bwd(p, grads, cache, gy):
    name, x = cache
    _acc(grads, name + ".w", gy.T @ x)
    _acc(grads, name + ".b", gy.sum(axis=0))
    return gy @ p[name + ".w"]


# ------------------------------------------------------------------ conv1d


def conv1d_fwd(p, name, x, stride=1, pad=0):
    k = backend.kernels()
    y = k.conv1d_fwd(x, p[name + ".w"], p[name + ".b"], stride, pad)
    return y, (name, x, stride, pad)


def _conv1d_input_grad(gy, w, stride, pad, L):
    k = backend.kernels()
    B, Co, Lo = gy.shape
    _, Ci, K = w.shape
    if stride > 1:
        gd = np.zeros((B, Co, (Lo - 1) * stride + 1), dtype=gy.dtype)
        gd[:, :, ::stride] = gy
    else:
        gd = gy
    Ld = gd.shape[2]
    base = K - 1 - pad
    extra = L - (Ld + 2 * base - K + 1)
    gp = np.zeros((B, Co, Ld + 2 * base + extra), dtype=gy.dtype)
    gp[:, :, base : base + Ld] = gd
    wf = np.ascontiguousarray(w[:, :, ::-1].transpose(1, 0, 2))
    gx = k.conv1d_fwd(gp, wf, np.zeros(Ci, dtype=gy.dtype), 1, 0)
    return gx


def conv1d_bwd(p, grads, cache, gy):
    k = backend.kernels()
    name, x, stride, pad = cache
    w = p[name + ".w"]
    K = w.shape[2]
    gy = np.ascontiguousarray(gy)
    if pad:
        xp = np.zeros((x.shape[0], x.shape[1], x.shape[2] + 2 * pad), dtype=x.dtype)
        xp[:, :, pad : pad + x.shape[2]] = x
    else:
        xp = x
    _acc(grads, name + ".w", k.conv1d_grad_w(xp, gy, K, stride))
    _acc(grads, name + ".b", gy.sum(axis=(0, 2)))
    return _conv1d_input_grad(gy, w, stride, pad, x.shape[2])


# ------------------------------------------------------------- activations


def silu_fwd(x):
    s = sigmoid(x)
    return x * s, (x, s)


def silu_bwd(cache, gy):
    x, s = cache
    return gy * (s * (1.0 + x * (1.0 - s)))


# --------------------------------------------------------------- groupnorm


def groupnorm_fwd(p, name, x, groups, eps=1e-5):
    B, C, L = x.shape
    g = x.reshape(B, groups, -1)
    mu = g.mean(axis=-1, keepdims=True)
    var = g.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xn = ((g - mu) * inv).reshape(B, C, L)
    y = xn * p[name + ".g"][None, :, None] + p[name + ".b"][None, :, None]
    return y, (name, xn, inv, groups)


def groupnorm_bwd(p, grads, cache, gy):
    name, xn, inv, groups = cache
    B, C, L = gy.shape
    _acc(grads, name + ".g", (gy * xn).sum(axis=(0, 2)))
    _acc(grads, name + ".b", gy.sum(axis=(0, 2)))
    gxn = (gy * p[name + ".g"][None, :, None]).reshape(B, groups, -1)
    xng = xn.reshape(B, groups, -1)
    gx = inv * (
        gxn
        - gxn.mean(axis=-1, keepdims=True)
        - xng * (gxn * xng).mean(axis=-1, keepdims=True)
    )
    return gx.reshape(B, C, L)


# ---------------------------------------------------------------- pooling


def gap_fwd(x):
    return x.mean(axis=2), x.shape


def gap_bwd(cache, gy):
    B, C, L = cache
    return np.broadcast_to(gy[:, :, None], (B, C, L)) / L


def upsample2_fwd(x):
    return np.repeat(x, 2, axis=2), x.shape


def upsample2_bwd(cache, gy):
    B, C, L = cache
    return gy.reshape(B, C, L, 2).sum(axis=3)


# -------------------------------------------------------------- embedding


def embedding_fwd(p, name, ids):
    """Row lookup; ids < 0 map to a zero vector (the "no label" path)."""
    table = p[name]
    y = np.zeros((len(ids), table.shape[1]), dtype=table.dtype)
    ok = ids >= 0
    y[ok] = table[ids[ok]]
    return y, (name, ids, table.shape)


def embedding_bwd(p, grads, cache, gy):
    name, ids, shape = cache
    gt = np.zeros(shape, dtype=gy.dtype)
    ok = ids >= 0
    np.add.at(gt, ids[ok], gy[ok])
    _acc(grads, name, gt)


def sinusoidal_embedding(t, dim, max_period=10000.0):
    """Standard sin/cos positional features of integer timesteps, shape (B, dim)."""
    half = dim // 2
    if half > 1:
        freqs = np.exp(-np.log(max_period) * np.arange(half) / (half - 1))
    else:
        freqs = np.ones(half)
    ang = np.asarray(t, dtype=np.float64)[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


# ---------------------------------------------------------------- softmax


def softmax(z, axis=-1):
    m = z.max(axis=axis, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_bwd(y, gy, axis=-1):
    return y * (gy - (gy * y).sum(axis=axis, keepdims=True))


def cross_entropy(logits, labels):
    """Mean negative log-likelihood; returns (loss, dlogits)."""
    B = logits.shape[0]
    m = logits.max(axis=1, keepdims=True)
    s = logits - m
    logz = np.log(np.exp(s).sum(axis=1, keepdims=True))
    logp = s - logz
    loss = -logp[np.arange(B), labels].mean()
    dlogits = np.exp(logp)
    dlogits[np.arange(B), labels] -= 1.0
    return float(loss), dlogits / B


# ------------------------------------------------------------- optimizers


class SGD:
    def __init__(self, params, lr, momentum=0.0):
        self.lr = lr
        self.momentum = momentum
        self.velocity = {k: np.zeros_like(v) for k, v in params.items()} if momentum else None

    def step(self, params, grads):
        for k in params:
            g = grads[k]
            if self.velocity is not None:
                v = self.velocity[k]
                v *= self.momentum
                v += g
                g = v
            params[k] -= self.lr * g


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k in params:
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            mhat = self.m[k] / b1c
            vhat = self.v[k] / b2c
            params[k] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


# ------------------------------------------------------- parameter buffers


def glorot_uniform(rng, shape, fan_in, fan_out, dtype):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def param_manifest(params):
    return [(name, params[name].shape) for name in sorted(params)]


def flatten_params(params):
    return np.concatenate([params[name].ravel() for name in sorted(params)])


def unflatten_params(vec, manifest, dtype=None):
    params = {}
    off = 0
    for name, shape in manifest:
        size = int(np.prod(shape))
        arr = vec[off : off + size].reshape(shape)
        params[name] = arr.astype(dtype) if dtype is not None else arr.copy()
        off += size
    if off != len(vec):
        raise ValueError("parameter buffer length does not match manifest")
    return params
