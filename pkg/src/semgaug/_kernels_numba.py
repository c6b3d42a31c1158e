"""Numba-jitted kernel implementations (default backend).

Loop bodies mirror `_kernels_numpy` semantics exactly; all kernels are
single-threaded so results are bit-reproducible for a fixed input.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def conv1d_fwd(x, w, b, stride, pad):
    B, Ci, L = x.shape
    Co, _, K = w.shape
    Lp = L + 2 * pad
    Lo = (Lp - K) // stride + 1
    xp = np.zeros((B, Ci, Lp), dtype=x.dtype)
    xp[:, :, pad : pad + L] = x
    out = np.empty((B, Co, Lo), dtype=x.dtype)
    for bi in range(B):
        for o in range(Co):
            for lo in range(Lo):
                out[bi, o, lo] = b[o]
        for o in range(Co):
            for ci in range(Ci):
                for kk in range(K):
                    wv = w[o, ci, kk]
                    for lo in range(Lo):
                        out[bi, o, lo] += wv * xp[bi, ci, lo * stride + kk]
    return out


@njit(cache=True)
def conv1d_grad_w(xp, go, K, stride):
    B, Co, Lo = go.shape
    Ci = xp.shape[1]
    gw = np.zeros((Co, Ci, K), dtype=go.dtype)
    for bi in range(B):
        for o in range(Co):
            for ci in range(Ci):
                for kk in range(K):
                    acc = 0.0
                    for lo in range(Lo):
                        acc += go[bi, o, lo] * xp[bi, ci, lo * stride + kk]
                    gw[o, ci, kk] += acc
    return gw


@njit(cache=True)
def pairwise_dist(a, b):
    n, d = a.shape
    m = b.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            s = 0.0
            for c in range(d):
                diff = a[i, c] - b[j, c]
                s += diff * diff
            out[i, j] = math.sqrt(s)
    return out


@njit(cache=True)
def knn_radii(x, k):
    n = x.shape[0]
    d = pairwise_dist(x, x)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        d[i, i] = np.inf
        row = np.sort(d[i])
        out[i] = row[k - 1]
    return out


@njit(cache=True)
def rarity_scores(cand, ref, radii):
    n = cand.shape[0]
    d = pairwise_dist(cand, ref)
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        for j in range(ref.shape[0]):
            if d[i, j] <= radii[j] and radii[j] < best:
                best = radii[j]
        out[i] = best if best < np.inf else 0.0
    return out


@njit(cache=True)
def avg_knn(x, k):
    n = x.shape[0]
    d = pairwise_dist(x, x)
    total = 0.0
    for i in range(n):
        d[i, i] = np.inf
        row = np.sort(d[i])
        s = 0.0
        for j in range(k):
            s += row[j]
        total += s / k
    return total / n


@njit(cache=True)
def lof(x, k, cap=1e12):
    n = x.shape[0]
    d = pairwise_dist(x, x)
    for i in range(n):
        d[i, i] = np.inf
    kdist = np.empty(n, dtype=np.float64)
    for i in range(n):
        row = np.sort(d[i])
        kdist[i] = row[k - 1]
    lrd = np.empty(n, dtype=np.float64)
    for i in range(n):
        s = 0.0
        cnt = 0
        for j in range(n):
            if d[i, j] <= kdist[i]:
                r = d[i, j] if d[i, j] > kdist[j] else kdist[j]
                s += r
                cnt += 1
        mean_reach = s / cnt
        lrd[i] = 1.0 / mean_reach if mean_reach > 0.0 else cap
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        s = 0.0
        cnt = 0
        for j in range(n):
            if d[i, j] <= kdist[i]:
                s += lrd[j]
                cnt += 1
        out[i] = s / cnt / lrd[i]
    return out


@njit(cache=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@njit(cache=True)
def sparsity_potential(cand, ref, eps):
    B, dim = cand.shape
    R = ref.shape[0]
    counts = np.zeros(B, dtype=np.float64)
    s = np.empty((B, R), dtype=np.float64)
    d = pairwise_dist(cand, ref)
    for i in range(B):
        for j in range(R):
            s[i, j] = _sigmoid(eps - d[i, j])
            counts[i] += s[i, j]
    phi = 0.0
    for i in range(B):
        phi += counts[i] * counts[i]
    phi /= B
    grad = np.zeros((B, dim), dtype=np.float64)
    for i in range(B):
        scale = 2.0 / B * counts[i]
        for j in range(R):
            if d[i, j] > 0.0:
                coef = scale * s[i, j] * (1.0 - s[i, j]) / d[i, j]
                for c in range(dim):
                    grad[i, c] -= coef * (cand[i, c] - ref[j, c])
    return phi, grad, counts


@njit(cache=True)
def diversity_potential(cand, eps):
    B, dim = cand.shape
    counts = np.zeros(B, dtype=np.float64)
    d = pairwise_dist(cand, cand)
    s = np.zeros((B, B), dtype=np.float64)
    for i in range(B):
        for j in range(B):
            if i != j:
                s[i, j] = _sigmoid(eps - d[i, j])
                counts[i] += s[i, j]
    phi = 0.0
    for i in range(B):
        phi += counts[i] * counts[i]
    phi /= B
    grad = np.zeros((B, dim), dtype=np.float64)
    for i in range(B):
        for j in range(B):
            if i != j and d[i, j] > 0.0:
                coef = 2.0 / B * (counts[i] + counts[j]) * s[i, j] * (1.0 - s[i, j]) / d[i, j]
                for c in range(dim):
                    grad[i, c] -= coef * (cand[i, c] - cand[j, c])
    return phi, grad, counts
