"""Pure-numpy kernel implementations (fallback backend).

Same call signatures as `_kernels_numba`; distances are Euclidean
throughout. The convolution uses an im2col view plus a BLAS matmul.
"""

import numpy as np


# ---------------------------------------------------------------- conv1d


def _im2col(xp, K, stride, Lo):
    # xp: (B, Ci, Lp) padded input -> view (B, Ci, K, Lo), no copy
    B, Ci, Lp = xp.shape
    sb, sc, sl = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp, shape=(B, Ci, K, Lo), strides=(sb, sc, sl, sl * stride), writeable=False
    )


def conv1d_fwd(x, w, b, stride, pad):
    """x (B,Ci,L), w (Co,Ci,K), b (Co,) -> (B,Co,Lo)."""
    B, Ci, L = x.shape
    Co, _, K = w.shape
    if pad:
        xp = np.zeros((B, Ci, L + 2 * pad), dtype=x.dtype)
        xp[:, :, pad : pad + L] = x
    else:
        xp = x
    Lo = (L + 2 * pad - K) // stride + 1
    cols = _im2col(xp, K, stride, Lo).reshape(B, Ci * K, Lo)
    out = np.einsum("oj,bjl->bol", w.reshape(Co, Ci * K), cols, optimize=True)
    out += b[None, :, None]
    return np.ascontiguousarray(out)


def conv1d_grad_w(xp, go, K, stride):
    """xp (B,Ci,Lp) padded input, go (B,Co,Lo) -> grad w (Co,Ci,K)."""
    B, Co, Lo = go.shape
    Ci = xp.shape[1]
    cols = _im2col(xp, K, stride, Lo).reshape(B, Ci * K, Lo)
    gw = np.einsum("bol,bjl->oj", go, cols, optimize=True)
    return np.ascontiguousarray(gw.reshape(Co, Ci, K))


# ------------------------------------------------------------- distances


def pairwise_dist(a, b):
    """a (n,d), b (m,d) -> (n,m) Euclidean distances."""
    # direct differences, not the gram expansion: the latter loses ~1e-7
    # to cancellation and these distances feed exact-agreement checks
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("nmd,nmd->nm", diff, diff))


def knn_radii(x, k):
    """Distance from each point to its k-th nearest neighbor, self excluded."""
    d = pairwise_dist(x, x)
    np.fill_diagonal(d, np.inf)
    return np.sort(d, axis=1)[:, k - 1]


def rarity_scores(cand, ref, radii):
    """Min radius over reference spheres containing each candidate; 0 if none."""
    d = pairwise_dist(cand, ref)
    inside = d <= radii[None, :]
    masked = np.where(inside, radii[None, :], np.inf)
    score = masked.min(axis=1)
    return np.where(np.isfinite(score), score, 0.0)


def avg_knn(x, k):
    """Mean over points of the mean distance to their k nearest neighbors."""
    d = pairwise_dist(x, x)
    np.fill_diagonal(d, np.inf)
    knn = np.sort(d, axis=1)[:, :k]
    return float(knn.mean())


def lof(x, k, cap=1e12):
    """Local outlier factor per point; k-neighborhoods include ties."""
    n = x.shape[0]
    d = pairwise_dist(x, x)
    np.fill_diagonal(d, np.inf)
    kdist = np.sort(d, axis=1)[:, k - 1]
    neigh = d <= kdist[:, None]  # (i,j): j in N_k(i)
    reach = np.maximum(d, kdist[None, :])  # reach_k(i, j)
    counts = neigh.sum(axis=1)
    mean_reach = (reach * neigh).sum(axis=1) / counts
    lrd = np.where(mean_reach > 0.0, 1.0 / np.where(mean_reach > 0.0, mean_reach, 1.0), cap)
    vals = (lrd[None, :] * neigh).sum(axis=1) / counts / lrd
    return vals


# ------------------------------------------------------------ potentials


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sparsity_potential(cand, ref, eps):
    """Smoothed candidate-to-reference crowding: value, gradient, per-point counts."""
    B = cand.shape[0]
    d = pairwise_dist(cand, ref)  # (B, R)
    s = _sigmoid(eps - d)
    counts = s.sum(axis=1)
    phi = float((counts**2).sum() / B)
    sp = s * (1.0 - s)
    # d == 0 -> undefined direction; use zero subgradient for that pair
    safe = np.where(d > 0.0, d, 1.0)
    coef = np.where(d > 0.0, sp / safe, 0.0)
    diff = cand[:, None, :] - ref[None, :, :]  # (B, R, d)
    grad = -(2.0 / B) * counts[:, None] * np.einsum("br,brd->bd", coef, diff)
    return phi, grad, counts


def diversity_potential(cand, eps):
    """Smoothed candidate-to-candidate crowding: value, gradient, per-point counts."""
    B = cand.shape[0]
    d = pairwise_dist(cand, cand)
    off = ~np.eye(B, dtype=bool)
    s = np.where(off, _sigmoid(eps - d), 0.0)
    counts = s.sum(axis=1)
    phi = float((counts**2).sum() / B)
    sp = s * (1.0 - s)
    safe = np.where(d > 0.0, d, 1.0)
    coef = np.where(off & (d > 0.0), sp / safe, 0.0)
    pair = (counts[:, None] + counts[None, :]) * coef  # (M_i + M_j) sigma'
    diff = cand[:, None, :] - cand[None, :, :]
    grad = -(2.0 / B) * np.einsum("bj,bjd->bd", pair, diff)
    return phi, grad, counts
