"""Sparse voxelization via an open-addressed hash table.

Keys are integer voxel coordinates (componentwise floor of p / voxel_size,
flooring toward -inf).  Each occupied slot keeps the (point index, distance
to voxel center) pair with the minimal distance; ties prefer the point with
lexicographically smaller (x, y, z) coordinates, and bit-identical
coordinates prefer the smaller index.  That min-merge is commutative, so the
final table content is independent of insertion order — the property that
makes parallel builds and permutation invariance work.

``VoxelTable`` is the slot-accurate reference implementation (pure Python);
the array-level entry points ``count_nonempty`` and ``voxelize_min`` dispatch
to the active kernel backend and are what the samplers use.
"""

from __future__ import annotations

import numpy as np

from . import _backend
from .core import PointCloud, SampleError, as_points

_MASK64 = (1 << 64) - 1
HASH_K1 = 0x9E3779B97F4A7C15
HASH_K2 = 0xC2B2AE3D27D4EB4F
HASH_K3 = 0x165667B19E3779F9


def next_pow2(x: int) -> int:
    """Smallest power of two >= max(x, 2)."""
    cap = 2
    while cap < x:
        cap <<= 1
    return cap


def mix64(u: int, v: int, w: int) -> int:
    """Scalar spatial hash: three odd multipliers, XOR combine, avalanche."""
    h = ((u & _MASK64) * HASH_K1 ^ (v & _MASK64) * HASH_K2
         ^ (w & _MASK64) * HASH_K3) & _MASK64
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & _MASK64
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & _MASK64
    h ^= h >> 33
    return h


def mix_coords(coords) -> np.ndarray:
    """Vectorized 64-bit hash for an array of (u, v, w) rows."""
    return _backend.kernels.mix_coords(coords)


def hash_slot(g, capacity: int) -> int:
    """Home slot of a voxel coordinate in a power-of-two table."""
    if capacity & (capacity - 1):
        raise SampleError(f"table capacity must be a power of two, got {capacity}")
    u, v, w = (int(c) for c in g)
    return mix64(u, v, w) & (capacity - 1)


def _points_of(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else as_points(cloud)


def _check_voxel(voxel) -> np.ndarray:
    v = np.asarray(voxel, dtype=np.float64)
    if v.ndim == 0:
        v = np.full(3, float(v))
    if v.shape != (3,) or not (v > 0).all() or not np.isfinite(v).all():
        raise SampleError(f"voxel size needs three positive components, got {voxel}")
    return v


def voxel_coord(p, voxel) -> tuple[int, int, int]:
    """Voxel coordinate of a single point (floors toward -inf)."""
    v = _check_voxel(voxel)
    q = np.floor(np.asarray(p, dtype=np.float64) / v)
    return int(q[0]), int(q[1]), int(q[2])


def voxel_coords(points, voxel, threads: int = 1) -> np.ndarray:
    """Voxel coordinates for every point, shape (n, 3) int64."""
    return _backend.kernels.voxel_coords(_points_of(points), _check_voxel(voxel), threads)


def center_distance(p, g, voxel) -> float:
    """Euclidean distance from a point to its voxel's geometric center."""
    v = _check_voxel(voxel)
    p = np.asarray(p, dtype=np.float64)
    c = v * (np.asarray(g, dtype=np.float64) + 0.5)
    dx, dy, dz = p[0] - c[0], p[1] - c[1], p[2] - c[2]
    return float(np.sqrt(dx * dx + dy * dy + dz * dz))


def center_distances(points, coords, voxel) -> np.ndarray:
    """Vectorized center distances; same expression as the kernels."""
    pts = _points_of(points)
    v = _check_voxel(voxel)
    d = pts - (np.asarray(coords, dtype=np.int64) + 0.5) * v
    return np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2])


def count_nonempty(cloud, voxel, threads: int = 1) -> int:
    """Number of non-empty voxels at the given size."""
    return _backend.kernels.count_nonempty(_points_of(cloud), _check_voxel(voxel), threads)


def voxelize_min(cloud, voxel, threads: int = 1):
    """Per-voxel center-closest winners in canonical voxel order.

    Returns (coords, indices, dists): one row per non-empty voxel, sorted
    lexicographically by (w, then v, then u) so the output is independent of
    the hash layout and of the backend.
    """
    pts = _points_of(cloud)
    coords, idx, dists = _backend.kernels.build_min_table(pts, _check_voxel(voxel), threads)
    order = np.lexsort((coords[:, 0], coords[:, 1], coords[:, 2]))
    return coords[order], idx[order], dists[order]


class VoxelTable:
    """Reference open-addressed table: linear probing, min-merge slots.

    Capacity is the smallest power of two >= 2n, keeping the load factor at
    or below one half.  This pure-Python implementation is the oracle for the
    compiled kernels and is also useful for slot-level inspection (probe
    lengths, layout) that the array entry points do not expose.
    """

    def __init__(self, points, capacity: int | None = None):
        self.points = _points_of(points)
        n = len(self.points)
        self.capacity = next_pow2(2 * n) if capacity is None else int(capacity)
        if self.capacity & (self.capacity - 1):
            raise SampleError(f"capacity must be a power of two, got {self.capacity}")
        self._keys = np.zeros((self.capacity, 3), dtype=np.int64)
        self._used = np.zeros(self.capacity, dtype=bool)
        self._idx = np.zeros(self.capacity, dtype=np.int64)
        self._dist = np.zeros(self.capacity, dtype=np.float64)
        self.occupied = 0

    @classmethod
    def build(cls, points, voxel) -> "VoxelTable":
        """Insert every point at its voxel coordinate and center distance."""
        table = cls(points)
        v = _check_voxel(voxel)
        g = voxel_coords(table.points, v)
        d = center_distances(table.points, g, v)
        for i in range(len(table.points)):
            table.insert_min((g[i, 0], g[i, 1], g[i, 2]), i, d[i])
        return table

    def _probe(self, g) -> tuple[int, bool, int]:
        """Find the slot for key g: (slot, key_present, probe_length)."""
        u, v, w = (int(c) for c in g)
        mask = self.capacity - 1
        h = mix64(u, v, w) & mask
        steps = 0
        while self._used[h]:
            if self._keys[h, 0] == u and self._keys[h, 1] == v and self._keys[h, 2] == w:
                return h, True, steps
            h = (h + 1) & mask
            steps += 1
            if steps > self.capacity:
                raise RuntimeError("voxel table full: capacity sizing bug")
        return h, False, steps

    def insert_min(self, g, i: int, d: float) -> None:
        """Merge (i, d) into the slot for g, keeping the minimal entry."""
        h, present, _ = self._probe(g)
        if not present:
            if 2 * (self.occupied + 1) > self.capacity:
                raise RuntimeError(
                    "voxel table full: load factor would exceed 1/2 "
                    f"(occupied={self.occupied}, capacity={self.capacity})"
                )
            self._used[h] = True
            self._keys[h] = g
            self._idx[h] = i
            self._dist[h] = d
            self.occupied += 1
            return
        if d < self._dist[h]:
            self._idx[h] = i
            self._dist[h] = d
        elif d == self._dist[h]:
            j = self._idx[h]
            a, b = self.points[i], self.points[j]
            if tuple(a) < tuple(b) or (tuple(a) == tuple(b) and i < j):
                self._idx[h] = i

    def lookup(self, g):
        """(index, dist) stored for g, or None."""
        h, present, _ = self._probe(g)
        return (int(self._idx[h]), float(self._dist[h])) if present else None

    def extract(self):
        """All occupied entries in canonical (w, then v, then u) order."""
        coords = self._keys[self._used]
        idx = self._idx[self._used]
        dist = self._dist[self._used]
        order = np.lexsort((coords[:, 0], coords[:, 1], coords[:, 2]))
        return coords[order], idx[order], dist[order]

    def max_probe_length(self) -> int:
        """Longest displacement of any occupied slot from its home slot."""
        worst = 0
        mask = self.capacity - 1
        for h in np.flatnonzero(self._used):
            home = mix64(*(int(c) for c in self._keys[h])) & mask
            worst = max(worst, (int(h) - home) & mask)
        return worst

    @property
    def load_factor(self) -> float:
        return self.occupied / self.capacity
