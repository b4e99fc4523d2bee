"""Pure-NumPy kernels, bit-compatible with the compiled extension.

Sort-based group-by replaces the open-addressed table on this path, but the
hash constants, floor/divide/sqrt expressions and tie rules are identical,
so both backends produce exactly the same tables, counts, and selections.
The ``threads`` arguments are accepted for signature parity; NumPy decides
its own parallelism here.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_K1 = np.uint64(0x9E3779B97F4A7C15)
_K2 = np.uint64(0xC2B2AE3D27D4EB4F)
_K3 = np.uint64(0x165667B19E3779F9)
_F1 = np.uint64(0xFF51AFD7ED558CCD)
_F2 = np.uint64(0xC4CEB9FE1A85EC53)
_S33 = np.uint64(33)

_COORD_LIMIT = 4.6e18


def mix_coords(coords):
    """64-bit spatial hash per (u, v, w) row: odd multipliers, XOR, avalanche."""
    c = np.ascontiguousarray(np.asarray(coords, dtype=np.int64).reshape(-1, 3))
    u = c.view(np.uint64)
    h = u[:, 0] * _K1 ^ u[:, 1] * _K2 ^ u[:, 2] * _K3
    h ^= h >> _S33
    h *= _F1
    h ^= h >> _S33
    h *= _F2
    h ^= h >> _S33
    return h


def voxel_coords(pts, voxel, threads=1):
    """Integer voxel coordinate (componentwise floor of p / voxel) per point."""
    q = np.floor(pts / np.asarray(voxel, dtype=np.float64))
    if q.size and np.abs(q).max() > _COORD_LIMIT:
        raise ValueError("voxel size too small for the coordinate magnitude")
    return q.astype(np.int64)


def _canonical_order(g):
    # (w, then v, then u): np.lexsort treats its last key as primary
    return np.lexsort((g[:, 0], g[:, 1], g[:, 2]))


def count_nonempty(pts, voxel, threads=1):
    """Number of distinct voxel coordinates over all points."""
    if len(pts) == 0:
        return 0
    g = voxel_coords(pts, voxel)
    gs = g[_canonical_order(g)]
    return int(1 + (gs[1:] != gs[:-1]).any(axis=1).sum())


def center_dists(pts, g, voxel):
    d = pts - (g + 0.5) * np.asarray(voxel, dtype=np.float64)
    return np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])


def build_min_table(pts, voxel, threads=1):
    """Per-voxel winner (closest to the voxel center), same contract as the
    compiled table: min distance, ties to lexicographically smaller (x, y, z),
    then smaller index."""
    n = len(pts)
    if n == 0:
        return (np.empty((0, 3), dtype=np.int64),
                np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.float64))
    g = voxel_coords(pts, voxel)
    d = center_dists(pts, g, voxel)
    # group by voxel, then order members by the tie rule; lexsort is stable,
    # so bit-identical coordinates fall back to the smaller index
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0], d,
                        g[:, 0], g[:, 1], g[:, 2]))
    gs = g[order]
    first = np.empty(n, dtype=bool)
    first[0] = True
    first[1:] = (gs[1:] != gs[:-1]).any(axis=1)
    win = order[first]
    return g[win], win.astype(np.int64), d[win]


def fps(pts, m, start, threads=1):
    """Farthest point sampling; see the compiled twin for the contract."""
    n = len(pts)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    sel = np.empty(m, dtype=np.int64)
    seld = np.empty(m, dtype=np.float64)
    d2 = np.full(n, np.inf)
    sel[0] = start
    seld[0] = np.inf
    cur = start
    for t in range(1, m + 1):
        dx = x - x[cur]
        nd = dx * dx
        dy = y - y[cur]
        nd += dy * dy
        dz = z - z[cur]
        nd += dz * dz
        np.minimum(d2, nd, out=d2)
        d2[cur] = -np.inf  # selected points never win the argmax
        if t == m:
            break
        j = int(np.argmax(d2))
        bd = d2[j]
        if np.count_nonzero(d2 == bd) > 1:
            cand = np.flatnonzero(d2 == bd)
            sub = pts[cand]
            j = int(cand[np.lexsort((sub[:, 2], sub[:, 1], sub[:, 0]))[0]])
        sel[t] = j
        seld[t] = np.sqrt(bd)
        cur = j
    dts = np.sqrt(np.maximum(d2, 0.0))
    dts[sel] = 0.0
    return sel, seld, dts
