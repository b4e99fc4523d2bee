"""The five samplers behind one dispatch front door.

``havs`` is the main act: per layer, an adaptive search picks a voxel scale
whose non-empty voxel count lands in [m, (1+sigma)m], then one representative
per voxel is selected (center-closest by default) and masked out before the
next, finer layer runs.  ``fps``, ``rps``, ``rvs`` and ``ids`` are the
reference baselines.

Determinism contract: every sampler is a pure function of (cloud, arguments,
seed), for every thread count.  With the default center-closest strategy the
selected coordinate set is also invariant under input permutation for clouds
without duplicate points.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _backend
from .core import (
    AvsLayerLog,
    PointCloud,
    SampleError,
    SampleOutput,
    SampleSpec,
    as_points,
    plan_layers,
)
from .voxelhash import center_distances, count_nonempty, voxel_coords, voxelize_min

DEFAULT_SIGMA = 0.05
DEFAULT_T_MAX = 20
DEFAULT_K_NN = 16


@dataclass(frozen=True)
class FpsState:
    """Farthest point sampling trace.

    ``dist_to_set[j]`` is the final min distance from point j to the selected
    set (0 for selected points); ``selection_dists[t]`` is that distance for
    the t-th pick at the moment it was chosen (+inf for the seed point).
    """

    selected: np.ndarray
    dist_to_set: np.ndarray
    selection_dists: np.ndarray


@dataclass(frozen=True)
class AvsResult:
    """Outcome of the adaptive voxel-size search."""

    voxel: np.ndarray
    count: int
    iterations: int
    converged: bool


def _points_and_n(cloud):
    pts = cloud.points if isinstance(cloud, PointCloud) else as_points(cloud)
    return pts, len(pts)


def _check_m(m, n):
    if not 1 <= m <= n:
        raise SampleError(f"need 1 <= m <= n, got m={m} with n={n}")


def _single_layer_output(points, indices, count, avs_log=None):
    return SampleOutput(
        points=points,
        indices=indices,
        layer_of=np.ones(count, dtype=np.int64),
        avs_log=avs_log or [],
    )


# ---------------------------------------------------------------------------
# baselines


def fps_state(cloud, m, start=0, seed=None, threads=1) -> FpsState:
    """Run farthest point sampling and return the full state."""
    pts, n = _points_and_n(cloud)
    _check_m(m, n)
    if start == "random":
        start = int(np.random.default_rng(seed).integers(n))
    start = int(start)
    if not 0 <= start < n:
        raise SampleError(f"start index {start} out of range for n={n}")
    sel, seld, dts = _backend.kernels.fps(pts, int(m), start, threads)
    return FpsState(selected=sel, dist_to_set=dts, selection_dists=seld)


def fps(cloud, m, start=0, seed=None, threads=1) -> SampleOutput:
    """Farthest point sampling: repeatedly take the point with the largest
    distance to the already-selected set.  Deterministic with the default
    start index 0; pass start="random" for a seeded random start."""
    pts, _ = _points_and_n(cloud)
    state = fps_state(cloud, m, start=start, seed=seed, threads=threads)
    return _single_layer_output(pts[state.selected], state.selected, m)


def rps(cloud, m, seed=0) -> SampleOutput:
    """Uniform random sampling of m distinct indices."""
    pts, n = _points_and_n(cloud)
    _check_m(m, n)
    rng = np.random.default_rng(seed)
    idx = np.asarray(rng.choice(n, size=m, replace=False), dtype=np.int64)
    return _single_layer_output(pts[idx], idx, m)


def ids(cloud, m, k_nn=DEFAULT_K_NN, mode="deterministic", seed=0) -> SampleOutput:
    """Inverse density sampling: favor points whose k-NN neighborhood is wide.

    Density is 1 / (mean distance to the k_nn nearest neighbors).  The
    deterministic mode takes the m lowest densities (ties broken by
    lexicographic coordinates); the probabilistic mode samples without
    replacement with probability proportional to 1/density.
    """
    pts, n = _points_and_n(cloud)
    _check_m(m, n)
    if not 1 <= k_nn < n:
        raise SampleError(f"need 1 <= k_nn < n, got k_nn={k_nn} with n={n}")
    if mode not in ("deterministic", "probabilistic"):
        raise SampleError(f"unknown ids mode {mode!r}")
    tree = cKDTree(pts)
    _, nbr = tree.query(pts, k=k_nn + 1)
    # recompute distances with the kernel expression and average over sorted
    # values, so the result does not depend on the tree's internal tie order
    diff = pts[nbr] - pts[:, None, :]
    d = np.sqrt(diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2 + diff[:, :, 2] ** 2)
    self_col = nbr == np.arange(n)[:, None]
    has_self = self_col.any(axis=1)
    first_self = np.where(has_self, self_col.argmax(axis=1), 0)
    d[np.arange(n), first_self] = np.inf  # drop self (or one duplicate of it)
    d.sort(axis=1)
    mean_d = d[:, :k_nn].sum(axis=1) / k_nn
    if mode == "deterministic":
        order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0], -mean_d))
        idx = np.asarray(order[:m], dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        with np.errstate(divide="ignore"):
            keys = rng.standard_exponential(n) / mean_d  # weight 0 -> key inf
        idx = np.asarray(np.argsort(keys, kind="stable")[:m], dtype=np.int64)
    return _single_layer_output(pts[idx], idx, m)


# ---------------------------------------------------------------------------
# voxel machinery shared by rvs and the hierarchical sampler


def _canonical_groups(pts, voxel):
    """Sort points into canonical voxel order; returns (order, starts, coords)."""
    g = voxel_coords(pts, voxel)
    order = np.lexsort((g[:, 0], g[:, 1], g[:, 2]))
    gs = g[order]
    first = np.empty(len(pts), dtype=bool)
    first[0] = True
    first[1:] = (gs[1:] != gs[:-1]).any(axis=1)
    starts = np.flatnonzero(first)
    return order, starts, gs[starts]


def _representatives(pts, voxel, strategy, rng=None, threads=1):
    """One representative per non-empty voxel, canonical voxel order.

    Returns (coords, rep_points, rep_indices, rep_dists, consumed):
    rep_indices is None for the synthesized strategies (average, center);
    rep_dists is each representative's distance to its voxel center, which is
    what truncation ranks; ``consumed`` holds one source index per voxel (the
    member treated as used when the hierarchy masks points).
    """
    voxel = np.asarray(voxel, dtype=np.float64)
    if strategy == "center_closest":
        coords, idx, dists = voxelize_min(pts, voxel, threads)
        return coords, pts[idx], idx, dists, idx
    order, starts, coords = _canonical_groups(pts, voxel)
    if strategy == "random":
        sizes = np.diff(np.append(starts, len(pts)))
        pick = starts + rng.integers(0, sizes)
        ridx = order[pick].astype(np.int64)
        dists = center_distances(pts[ridx], coords, voxel)
        return coords, pts[ridx], ridx, dists, ridx
    # synthesized representatives still consume the center-closest member
    _, consumed, _ = voxelize_min(pts, voxel, threads)
    if strategy == "center":
        centers = (coords + 0.5) * voxel
        return coords, centers, None, np.zeros(len(coords)), consumed
    if strategy == "average":
        sums = np.add.reduceat(pts[order], starts, axis=0)
        sizes = np.diff(np.append(starts, len(pts)))
        cents = sums / sizes[:, None]
        dists = center_distances(cents, coords, voxel)
        return coords, cents, None, dists, consumed
    raise SampleError(f"unknown representative strategy {strategy!r}")


def _truncate_positions(rep_pts, rep_dists, keep):
    """Positions of the ``keep`` most center-faithful representatives,
    returned in canonical order.  Drops the largest center distances; ties
    prefer lexicographically smaller representative coordinates."""
    order = np.lexsort((rep_pts[:, 2], rep_pts[:, 1], rep_pts[:, 0], rep_dists))
    return np.sort(order[:keep])


def _pad_indices(pts, exclude, need, rng):
    """Seeded uniform draw of ``need`` extra source indices.

    Candidates are ordered by coordinates before the draw, so the chosen
    coordinate set does not depend on the input ordering.
    """
    avail = np.ones(len(pts), dtype=bool)
    avail[exclude] = False
    cand = np.flatnonzero(avail)
    if len(cand) < need:
        raise SampleError(
            f"cannot pad: need {need} more points but only {len(cand)} remain"
        )
    sub = pts[cand]
    cand = cand[np.lexsort((sub[:, 2], sub[:, 1], sub[:, 0]))]
    pick = rng.choice(len(cand), size=need, replace=False)
    return cand[pick].astype(np.int64)


def rvs(cloud, m, voxel, representative="average", seed=0, threads=1) -> SampleOutput:
    """Fixed-grid voxel sampling: one representative per non-empty voxel.

    If there are more voxels than m, a seeded random subset of m voxels is
    kept; if fewer, the output is padded with a seeded uniform draw from the
    unconsumed points.  The average/center strategies synthesize points and
    leave ``indices`` empty.
    """
    pts, n = _points_and_n(cloud)
    _check_m(m, n)
    voxel = np.asarray(voxel, dtype=np.float64)
    if voxel.shape != (3,) or not (voxel > 0).all():
        raise SampleError(f"voxel size needs three positive components, got {voxel}")
    rng_rep = np.random.default_rng([seed, 11, 1])
    coords, rep_pts, rep_idx, rep_dists, consumed = _representatives(
        pts, voxel, representative, rng=rng_rep, threads=threads
    )
    k = len(rep_pts)
    synthesized = rep_idx is None
    if k > m:
        keep = np.sort(np.random.default_rng([seed, 13]).choice(k, size=m, replace=False))
        rep_pts = rep_pts[keep]
        consumed = consumed[keep]
        if not synthesized:
            rep_idx = rep_idx[keep]
    elif k < m:
        pad = _pad_indices(pts, consumed, m - k, np.random.default_rng([seed, 7, 1]))
        rep_pts = np.concatenate([rep_pts, pts[pad]])
        if not synthesized:
            rep_idx = np.concatenate([rep_idx, pad])
    indices = np.empty(0, dtype=np.int64) if synthesized else rep_idx.astype(np.int64)
    return _single_layer_output(np.ascontiguousarray(rep_pts, dtype=np.float64), indices, m)


# ---------------------------------------------------------------------------
# adaptive voxel search


def _propose_scale(s_lo, s_hi, probes, m, hi_m, it):
    """Next probe inside the bracket [s_lo, s_hi].

    Even steps fit a local power law count ~ A * s**-p through the last two
    probes and solve for the window midpoint; odd steps (and any step where
    the model is unusable or lands outside the bracket interior) fall back to
    geometric bisection, which guarantees the bracket keeps shrinking.
    """
    gmid = math.sqrt(s_lo * s_hi)
    if it % 2 or len(probes) < 2:
        return gmid
    (s_a, c_a), (s_b, c_b) = probes[-2], probes[-1]
    if s_a == s_b or c_a == c_b or c_a < 1 or c_b < 1:
        return gmid
    p = math.log(c_a / c_b) / math.log(s_b / s_a)
    if p <= 0:  # locally non-monotone counts: no usable model
        return gmid
    s_star = s_b * (c_b / math.sqrt(m * hi_m)) ** (1.0 / p)
    width = s_hi / s_lo
    if not s_lo * width**0.02 <= s_star <= s_lo * width**0.98:
        return gmid
    return s_star


def _avs_search(pts, m, sigma=DEFAULT_SIGMA, t_max=DEFAULT_T_MAX,
                aspect=(1.0, 1.0, 1.0), threads=1) -> AvsResult:
    """Search a scalar s with voxel = s * aspect until the non-empty voxel
    count lands in [m, ceil((1+sigma) m)] or the iteration budget runs out.

    The bracket keeps count(s_lo) >= m and count(s_hi) <= the window top.  On
    timeout the probe with the smallest count >= m is returned (converged
    False), so the caller can truncate the small overshoot.
    """
    n = len(pts)
    _check_m(m, n)
    if not sigma > 0:
        raise SampleError(f"sigma must be positive, got {sigma}")
    if t_max < 1:
        raise SampleError(f"t_max must be at least 1, got {t_max}")
    aspect = np.asarray(aspect, dtype=np.float64)
    if aspect.shape != (3,) or not (aspect > 0).all():
        raise SampleError(f"aspect needs three positive components, got {aspect}")

    hi_m = math.ceil((1.0 + sigma) * m)
    mins = pts.min(axis=0)
    maxs = pts.max(axis=0)
    s_hi = float(((maxs - mins) / aspect).max())
    if s_hi <= 0.0:
        s_hi = 1.0  # degenerate cloud: one voxel at any scale
    # halving floor: keep |p| / voxel comfortably inside int64
    coord_mag = max(float(np.abs(mins).max()), float(np.abs(maxs).max()), 1.0)
    s_floor = coord_mag / float(aspect.min()) * 2.0**-60

    best_s = None
    best_c = 0
    probes: list[tuple[float, int]] = []

    def cnt(s):
        c = count_nonempty(pts, s * aspect, threads)
        probes.append((s, c))
        return c

    def consider(s, c):
        nonlocal best_s, best_c
        if c >= m and (best_s is None or c < best_c):
            best_s, best_c = s, c

    def done(s, c, it):
        return AvsResult(voxel=s * aspect, count=c, iterations=it, converged=True)

    c_hi = cnt(s_hi)
    consider(s_hi, c_hi)
    if m <= c_hi <= hi_m:
        return done(s_hi, c_hi, 0)
    growths = 0
    while c_hi > hi_m and growths < 8:
        s_hi *= 2.0
        c_hi = cnt(s_hi)
        consider(s_hi, c_hi)
        growths += 1
        if m <= c_hi <= hi_m:
            return done(s_hi, c_hi, 0)

    s_lo = s_hi / 1024.0
    c_lo = cnt(s_lo)
    consider(s_lo, c_lo)
    if m <= c_lo <= hi_m:
        return done(s_lo, c_lo, 0)
    while c_lo < m:
        s_hi, c_hi = s_lo, c_lo  # still too coarse: reuse as the upper end
        if s_lo / 2.0 <= s_floor:
            distinct = len(np.unique(pts, axis=0))
            if m > distinct:
                raise SampleError(
                    f"target m={m} exceeds the number of distinct points ({distinct})"
                )
            raise SampleError(
                f"voxel search cannot separate {m} voxels: points closer than "
                "the resolvable scale"
            )
        s_lo /= 2.0
        c_lo = cnt(s_lo)
        consider(s_lo, c_lo)
        if m <= c_lo <= hi_m:
            return done(s_lo, c_lo, 0)

    it = 0
    while it < t_max:
        s_mid = _propose_scale(s_lo, s_hi, probes, m, hi_m, it)
        c_mid = cnt(s_mid)
        it += 1
        consider(s_mid, c_mid)
        if m <= c_mid <= hi_m:
            return done(s_mid, c_mid, it)
        if c_mid > hi_m:
            s_lo, c_lo = s_mid, c_mid
        else:
            s_hi, c_hi = s_mid, c_mid
    return AvsResult(voxel=best_s * aspect, count=best_c, iterations=t_max,
                     converged=False)


def avs(cloud, m, sigma=DEFAULT_SIGMA, t_max=DEFAULT_T_MAX,
        aspect=(1.0, 1.0, 1.0), threads=1) -> AvsResult:
    """Adaptive voxel search over a whole cloud; see ``_avs_search``."""
    pts, _ = _points_and_n(cloud)
    return _avs_search(pts, m, sigma=sigma, t_max=t_max, aspect=aspect, threads=threads)


# ---------------------------------------------------------------------------
# hierarchical voxel-guided sampling


@dataclass
class _LayerSelection:
    points: np.ndarray
    indices: np.ndarray | None  # local (active-subset) indices, None if synthesized
    consumed: np.ndarray  # local indices masked for the next layer
    log: AvsLayerLog


def _layer_select(pts, m_l, spec: SampleSpec, layer: int, threads=1) -> _LayerSelection:
    """Select m_l representatives from the active points of one layer."""
    if spec.fixed_voxel is not None:
        voxel = np.asarray(spec.fixed_voxel, dtype=np.float64)
        iterations = 0  # search bypassed; converged records window membership
        converged = None
    else:
        res = _avs_search(pts, m_l, sigma=spec.sigma, t_max=spec.t_max,
                          aspect=spec.aspect, threads=threads)
        voxel = res.voxel
        iterations, converged = res.iterations, res.converged
    rng_rep = np.random.default_rng([spec.seed, 11, layer])
    coords, rep_pts, rep_idx, rep_dists, consumed = _representatives(
        pts, voxel, spec.representative, rng=rng_rep, threads=threads
    )
    k = len(rep_pts)
    if converged is None:
        converged = m_l <= k <= math.ceil((1.0 + spec.sigma) * m_l)
    synthesized = rep_idx is None
    adjustment = "none"
    if k > m_l:
        adjustment = "truncated"
        keep = _truncate_positions(rep_pts, rep_dists, m_l)
        rep_pts = rep_pts[keep]
        consumed = consumed[keep]
        if not synthesized:
            rep_idx = rep_idx[keep]
    elif k < m_l:
        adjustment = "padded"
        pad = _pad_indices(pts, consumed, m_l - k,
                           np.random.default_rng([spec.seed, 7, layer]))
        rep_pts = np.concatenate([rep_pts, pts[pad]])
        consumed = np.concatenate([consumed, pad])
        if not synthesized:
            rep_idx = np.concatenate([rep_idx, pad])
    log = AvsLayerLog(
        layer=layer,
        voxel=tuple(float(v) for v in voxel),
        count=k,
        iterations=iterations,
        converged=converged,
        adjustment=adjustment,
    )
    return _LayerSelection(
        points=np.ascontiguousarray(rep_pts, dtype=np.float64),
        indices=None if synthesized else rep_idx.astype(np.int64),
        consumed=consumed.astype(np.int64),
        log=log,
    )


def havs_layer(cloud, active_mask, m_l, spec: SampleSpec, layer: int = 1,
               threads=1) -> SampleOutput:
    """One hierarchy layer on the active (unmasked) points."""
    pts, n = _points_and_n(cloud)
    active_mask = np.asarray(active_mask, dtype=bool)
    if active_mask.shape != (n,):
        raise SampleError(f"active mask must have shape ({n},)")
    act = np.flatnonzero(active_mask)
    if len(act) < m_l:
        raise SampleError(f"layer needs {m_l} active points, only {len(act)} remain")
    sel = _layer_select(pts[act], m_l, spec, layer, threads)
    indices = (np.empty(0, dtype=np.int64) if sel.indices is None
               else act[sel.indices])
    return SampleOutput(
        points=sel.points,
        indices=indices,
        layer_of=np.full(m_l, layer, dtype=np.int64),
        avs_log=[sel.log],
    )


def havs(cloud, spec: SampleSpec, threads=1) -> SampleOutput:
    """Hierarchical adaptive voxel-guided sampling.

    The target count is split 4x coarse-to-fine over ``spec.layers`` layers;
    each layer selects on the points not consumed by previous layers, and the
    per-layer outputs are gathered in layer order (canonical voxel order
    within a layer).
    """
    pts, n = _points_and_n(cloud)
    _check_m(spec.m, n)
    plan = plan_layers(spec.m, spec.layers)
    active = np.ones(n, dtype=bool)
    synthesized = spec.representative in ("average", "center")
    all_points, all_indices, all_layers, logs = [], [], [], []
    for layer, m_l in enumerate(plan.counts, start=1):
        act = np.flatnonzero(active)
        sel = _layer_select(pts[act], m_l, spec, layer, threads)
        active[act[sel.consumed]] = False
        all_points.append(sel.points)
        if not synthesized:
            all_indices.append(act[sel.indices])
        all_layers.append(np.full(m_l, layer, dtype=np.int64))
        logs.append(sel.log)
    indices = (np.empty(0, dtype=np.int64) if synthesized
               else np.concatenate(all_indices))
    return SampleOutput(
        points=np.concatenate(all_points),
        indices=indices,
        layer_of=np.concatenate(all_layers),
        avs_log=logs,
    )


# ---------------------------------------------------------------------------
# dispatch


def sample(cloud, spec: SampleSpec, threads=1) -> SampleOutput:
    """Run the sampler named by ``spec.method`` and attach wall-clock timing."""
    pts, n = _points_and_n(cloud)
    _check_m(spec.m, n)
    t0 = time.perf_counter()
    try:
        if spec.method == "fps":
            out = fps(cloud, spec.m, threads=threads)
        elif spec.method == "rps":
            out = rps(cloud, spec.m, seed=spec.seed)
        elif spec.method == "ids":
            out = ids(cloud, spec.m, seed=spec.seed)
        elif spec.method == "rvs":
            if spec.fixed_voxel is None:
                raise SampleError("rvs requires a fixed voxel size")
            out = rvs(cloud, spec.m, spec.fixed_voxel,
                      representative=spec.representative, seed=spec.seed,
                      threads=threads)
        elif spec.method == "havs":
            out = havs(cloud, spec, threads=threads)
        else:  # unreachable: SampleSpec validates the method
            raise SampleError(f"unknown method {spec.method!r}")
    except SampleError:
        raise
    except ValueError as exc:
        raise SampleError(str(exc)) from exc
    out.method = spec.method
    out.timing_ms = (time.perf_counter() - t0) * 1e3
    return out
