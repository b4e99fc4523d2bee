# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: open-addressed voxel table, voxel counting, and FPS.

Must stay bit-compatible with ``_kernels_py``: same hash constants, same
floor/divide/sqrt expressions, same tie rules.  Compiled with IEEE float
semantics (no -ffast-math, contraction off) so both backends agree exactly.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport floor, sqrt
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

BACKEND = "compiled"

cdef uint64_t K1 = 0x9E3779B97F4A7C15
cdef uint64_t K2 = 0xC2B2AE3D27D4EB4F
cdef uint64_t K3 = 0x165667B19E3779F9
cdef uint64_t F1 = 0xFF51AFD7ED558CCD
cdef uint64_t F2 = 0xC4CEB9FE1A85EC53

# voxel indices beyond this magnitude risk int64 trouble; callers keep voxel
# sizes large enough that this never trips on valid input
cdef double COORD_LIMIT = 4.6e18


cdef inline uint64_t _fmix64(uint64_t h) nogil:
    h ^= h >> 33
    h *= F1
    h ^= h >> 33
    h *= F2
    h ^= h >> 33
    return h


cdef inline uint64_t _mix(int64_t u, int64_t v, int64_t w) nogil:
    return _fmix64((<uint64_t>u) * K1 ^ (<uint64_t>v) * K2 ^ (<uint64_t>w) * K3)


cdef inline int _lex_less(double ax, double ay, double az,
                          double bx, double by, double bz) nogil:
    if ax != bx:
        return ax < bx
    if ay != by:
        return ay < by
    return az < bz


cdef inline uint64_t _capacity_for(Py_ssize_t n) nogil:
    cdef uint64_t cap = 2
    while cap < <uint64_t>(2 * n):
        cap <<= 1
    return cap


def mix_coords(coords):
    """64-bit spatial hash per (u, v, w) row; identical to the NumPy backend."""
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] c = np.ascontiguousarray(
        np.asarray(coords, dtype=np.int64).reshape(-1, 3))
    cdef Py_ssize_t i, k = c.shape[0]
    out = np.empty(k, dtype=np.uint64)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1, mode="c"] o = out
    for i in range(k):
        o[i] = _mix(c[i, 0], c[i, 1], c[i, 2])
    return out


def voxel_coords(pts_in, voxel, int threads=1):
    """Integer voxel coordinate (componentwise floor of p / voxel) per point."""
    cdef const double[:, ::1] pts = pts_in
    cdef double vx = voxel[0], vy = voxel[1], vz = voxel[2]
    cdef Py_ssize_t i, n = pts.shape[0]
    out = np.empty((n, 3), dtype=np.int64)
    cdef int64_t[:, ::1] g = out
    cdef double qx, qy, qz
    cdef int bad = 0
    if threads > 1:
        for i in prange(n, nogil=True, num_threads=threads):
            qx = floor(pts[i, 0] / vx)
            qy = floor(pts[i, 1] / vy)
            qz = floor(pts[i, 2] / vz)
            if qx > COORD_LIMIT or qx < -COORD_LIMIT or qy > COORD_LIMIT \
                    or qy < -COORD_LIMIT or qz > COORD_LIMIT or qz < -COORD_LIMIT:
                bad += 1
            else:
                g[i, 0] = <int64_t>qx
                g[i, 1] = <int64_t>qy
                g[i, 2] = <int64_t>qz
    else:
        for i in range(n):
            qx = floor(pts[i, 0] / vx)
            qy = floor(pts[i, 1] / vy)
            qz = floor(pts[i, 2] / vz)
            if qx > COORD_LIMIT or qx < -COORD_LIMIT or qy > COORD_LIMIT \
                    or qy < -COORD_LIMIT or qz > COORD_LIMIT or qz < -COORD_LIMIT:
                bad += 1
            else:
                g[i, 0] = <int64_t>qx
                g[i, 1] = <int64_t>qy
                g[i, 2] = <int64_t>qz
    if bad:
        raise ValueError("voxel size too small for the coordinate magnitude")
    return out


def count_nonempty(pts_in, voxel, int threads=1):
    """Number of distinct voxel coordinates over all points."""
    cdef const double[:, ::1] pts = pts_in
    cdef Py_ssize_t n = pts.shape[0]
    if n == 0:
        return 0
    cdef double vx = voxel[0], vy = voxel[1], vz = voxel[2]
    cdef uint64_t cap = _capacity_for(n)
    cdef uint64_t mask = cap - 1
    keys_arr = np.empty((cap, 3), dtype=np.int64)
    used_arr = np.zeros(cap, dtype=np.uint8)
    cdef int64_t[:, ::1] keys = keys_arr
    cdef unsigned char[::1] used = used_arr
    cdef int64_t[:, ::1] g
    cdef Py_ssize_t i
    cdef int64_t u, v, w, occ = 0
    cdef uint64_t h
    cdef double qx, qy, qz
    if threads > 1:
        g = voxel_coords(pts_in, voxel, threads)
        for i in range(n):
            u = g[i, 0]; v = g[i, 1]; w = g[i, 2]
            h = _mix(u, v, w) & mask
            while True:
                if used[h] == 0:
                    used[h] = 1
                    keys[h, 0] = u; keys[h, 1] = v; keys[h, 2] = w
                    occ += 1
                    break
                if keys[h, 0] == u and keys[h, 1] == v and keys[h, 2] == w:
                    break
                h = (h + 1) & mask
    else:
        for i in range(n):
            qx = floor(pts[i, 0] / vx)
            qy = floor(pts[i, 1] / vy)
            qz = floor(pts[i, 2] / vz)
            if qx > COORD_LIMIT or qx < -COORD_LIMIT or qy > COORD_LIMIT \
                    or qy < -COORD_LIMIT or qz > COORD_LIMIT or qz < -COORD_LIMIT:
                raise ValueError("voxel size too small for the coordinate magnitude")
            u = <int64_t>qx; v = <int64_t>qy; w = <int64_t>qz
            h = _mix(u, v, w) & mask
            while True:
                if used[h] == 0:
                    used[h] = 1
                    keys[h, 0] = u; keys[h, 1] = v; keys[h, 2] = w
                    occ += 1
                    break
                if keys[h, 0] == u and keys[h, 1] == v and keys[h, 2] == w:
                    break
                h = (h + 1) & mask
    return int(occ)


def build_min_table(pts_in, voxel, int threads=1):
    """Per-voxel winner: the member closest to the voxel center.

    Ties on exact distance prefer the point with lexicographically smaller
    (x, y, z); bit-identical coordinates prefer the smaller index, so the
    result is independent of insertion order.  Returns (coords, index, dist)
    in table order; callers canonicalize.
    """
    cdef const double[:, ::1] pts = pts_in
    cdef Py_ssize_t n = pts.shape[0]
    empty = (np.empty((0, 3), dtype=np.int64),
             np.empty(0, dtype=np.int64),
             np.empty(0, dtype=np.float64))
    if n == 0:
        return empty
    cdef double vx = voxel[0], vy = voxel[1], vz = voxel[2]
    cdef uint64_t cap = _capacity_for(n)
    cdef uint64_t mask = cap - 1
    keys_arr = np.empty((cap, 3), dtype=np.int64)
    used_arr = np.zeros(cap, dtype=np.uint8)
    idx_arr = np.empty(cap, dtype=np.int64)
    dist_arr = np.empty(cap, dtype=np.float64)
    cdef int64_t[:, ::1] keys = keys_arr
    cdef unsigned char[::1] used = used_arr
    cdef int64_t[::1] tidx = idx_arr
    cdef double[::1] tdist = dist_arr
    cdef Py_ssize_t i, j
    cdef int64_t u, v, w, occ = 0, inc
    cdef uint64_t h
    cdef double qx, qy, qz, dx, dy, dz, d
    for i in range(n):
        qx = floor(pts[i, 0] / vx)
        qy = floor(pts[i, 1] / vy)
        qz = floor(pts[i, 2] / vz)
        if qx > COORD_LIMIT or qx < -COORD_LIMIT or qy > COORD_LIMIT \
                or qy < -COORD_LIMIT or qz > COORD_LIMIT or qz < -COORD_LIMIT:
            raise ValueError("voxel size too small for the coordinate magnitude")
        u = <int64_t>qx; v = <int64_t>qy; w = <int64_t>qz
        dx = pts[i, 0] - vx * (qx + 0.5)
        dy = pts[i, 1] - vy * (qy + 0.5)
        dz = pts[i, 2] - vz * (qz + 0.5)
        d = sqrt(dx * dx + dy * dy + dz * dz)
        h = _mix(u, v, w) & mask
        while True:
            if used[h] == 0:
                used[h] = 1
                keys[h, 0] = u; keys[h, 1] = v; keys[h, 2] = w
                tidx[h] = i
                tdist[h] = d
                occ += 1
                break
            if keys[h, 0] == u and keys[h, 1] == v and keys[h, 2] == w:
                if d < tdist[h]:
                    tidx[h] = i
                    tdist[h] = d
                elif d == tdist[h]:
                    inc = tidx[h]
                    if _lex_less(pts[i, 0], pts[i, 1], pts[i, 2],
                                 pts[inc, 0], pts[inc, 1], pts[inc, 2]):
                        tidx[h] = i
                    # bit-identical coordinates: keep the smaller index,
                    # which is already stored since i grows
                break
            h = (h + 1) & mask
    out_coords = np.empty((occ, 3), dtype=np.int64)
    out_idx = np.empty(occ, dtype=np.int64)
    out_dist = np.empty(occ, dtype=np.float64)
    cdef int64_t[:, ::1] oc = out_coords
    cdef int64_t[::1] oi = out_idx
    cdef double[::1] od = out_dist
    j = 0
    for i in range(<Py_ssize_t>cap):
        if used[i]:
            oc[j, 0] = keys[i, 0]; oc[j, 1] = keys[i, 1]; oc[j, 2] = keys[i, 2]
            oi[j] = tidx[i]
            od[j] = tdist[i]
            j += 1
    return out_coords, out_idx, out_dist


def fps(pts_in, Py_ssize_t m, Py_ssize_t start, int threads=1):
    """Farthest point sampling.

    Returns (selected indices, selection distances, final distance-to-set).
    The selection distance of the seed point is +inf; distance-to-set is 0
    for selected points.  Argmax ties prefer lexicographically smaller
    coordinates.  Squared distances internally; square roots on output.
    """
    cdef const double[:, ::1] pts = pts_in
    cdef Py_ssize_t n = pts.shape[0]
    sel_arr = np.empty(m, dtype=np.int64)
    seld_arr = np.empty(m, dtype=np.float64)
    d2_arr = np.full(n, np.inf, dtype=np.float64)
    taken_arr = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] sel = sel_arr
    cdef double[::1] seld = seld_arr
    cdef double[::1] d2 = d2_arr
    cdef unsigned char[::1] taken = taken_arr
    cdef Py_ssize_t t, j, cur, best_j
    cdef double px, py, pz, dx, dy, dz, nd, best_d
    sel[0] = start
    seld[0] = np.inf
    taken[start] = 1
    cur = start
    for t in range(1, m + 1):
        # update pass: fold the latest selection into the point-to-set distance
        px = pts[cur, 0]; py = pts[cur, 1]; pz = pts[cur, 2]
        if threads > 1:
            for j in prange(n, nogil=True, num_threads=threads):
                dx = pts[j, 0] - px
                dy = pts[j, 1] - py
                dz = pts[j, 2] - pz
                nd = dx * dx + dy * dy + dz * dz
                if nd < d2[j]:
                    d2[j] = nd
        else:
            for j in range(n):
                dx = pts[j, 0] - px
                dy = pts[j, 1] - py
                dz = pts[j, 2] - pz
                nd = dx * dx + dy * dy + dz * dz
                if nd < d2[j]:
                    d2[j] = nd
        if t == m:
            break
        # selection pass: farthest unselected point, lex tie rule
        best_j = -1
        best_d = -1.0
        for j in range(n):
            if taken[j]:
                continue
            nd = d2[j]
            if nd > best_d:
                best_d = nd
                best_j = j
            elif nd == best_d and _lex_less(pts[j, 0], pts[j, 1], pts[j, 2],
                                            pts[best_j, 0], pts[best_j, 1],
                                            pts[best_j, 2]):
                best_j = j
        sel[t] = best_j
        seld[t] = sqrt(best_d)
        taken[best_j] = 1
        cur = best_j
    dts = np.sqrt(d2_arr)
    dts[sel_arr] = 0.0
    return sel_arr, seld_arr, dts
