"""Pure numpy versions of the compiled energy kernels."""

from __future__ import annotations

import numpy as np

BLOCK = 512


def bond_energy(x, bi, bj, l0, k):
    d = np.linalg.norm(x[bi] - x[bj], axis=1) - l0
    return float(k * np.sum(d * d))


def angle_energy(x, ai, aj, ak, theta0, k):
    u = x[ai] - x[aj]
    v = x[ak] - x[aj]
    c = np.sum(u * v, axis=1) / np.sqrt(np.sum(u * u, axis=1) * np.sum(v * v, axis=1))
    th = np.arccos(np.clip(c, -1.0, 1.0)) - theta0
    return float(k * np.sum(th * th))


def _near_pairs(n, indptr, indices, min_sep):
    """Pairs ``(i, j)``, ``i < j``, closer than ``min_sep`` bonds."""
    rows, cols = [], []
    for i in range(n):
        seen = {i: 0}
        frontier = [i]
        for depth in range(1, min_sep):
            nxt = []
            for a in frontier:
                for j in indices[indptr[a] : indptr[a + 1]]:
                    j = int(j)
                    if j not in seen:
                        seen[j] = depth
                        nxt.append(j)
            frontier = nxt
        for j in seen:
            if j > i:
                rows.append(i)
                cols.append(j)
    return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64)


def lj_energy(x, indptr, indices, eps, sigma, min_sep):
    n = len(x)
    ex_i, ex_j = _near_pairs(n, indptr, indices, min_sep)
    s2 = sigma * sigma
    total = 0.0
    for i0 in range(0, n, BLOCK):
        i1 = min(i0 + BLOCK, n)
        d = x[i0:i1, None, :] - x[None, :, :]
        r2 = np.sum(d * d, axis=2)
        keep = np.arange(n)[None, :] > np.arange(i0, i1)[:, None]
        sel = (ex_i >= i0) & (ex_i < i1)
        keep[ex_i[sel] - i0, ex_j[sel]] = False
        sr6 = (s2 / r2[keep]) ** 3
        total += float(np.sum(4.0 * eps * (sr6 * sr6 - sr6)))
    return total
