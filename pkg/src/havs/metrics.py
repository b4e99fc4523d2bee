"""Diagnostics: subset spacing, point/instance recall, and voxel-count
deviation under fixed versus adaptive sizing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud, SampleError, SampleOutput, as_points
from .samplers import _avs_search
from .voxelhash import count_nonempty

# exact pairwise nearest neighbors below this size; KD-tree above
_BRUTE_LIMIT = 2048


@dataclass
class SpacingStats:
    """Per-point nearest-neighbor distances within a subset."""

    nn_dists: np.ndarray
    min: float
    mean: float
    max: float
    hist_edges: np.ndarray
    hist_counts: np.ndarray


@dataclass
class RecallReport:
    point_recall: float
    instance_recall: float
    per_instance_counts: dict[int, int]


@dataclass
class AvsRateReport:
    """Per-scene sampling-count deviation (count - m) / m."""

    fixed_count: np.ndarray
    fixed_dev: np.ndarray
    avs_count: np.ndarray
    avs_dev: np.ndarray
    avs_iterations: np.ndarray
    avs_converged: np.ndarray

    @property
    def fixed_iqr(self) -> float:
        q75, q25 = np.percentile(self.fixed_dev, [75, 25])
        return float(q75 - q25)

    @property
    def avs_iqr(self) -> float:
        q75, q25 = np.percentile(self.avs_dev, [75, 25])
        return float(q75 - q25)

    @property
    def convergence_rate(self) -> float:
        return float(self.avs_converged.mean())


def _subset_points(subset) -> np.ndarray:
    if isinstance(subset, SampleOutput):
        return subset.points
    if isinstance(subset, PointCloud):
        return subset.points
    return as_points(subset)


def _nn_brute(pts: np.ndarray) -> np.ndarray:
    # same per-pair expression as the samplers, so cross-module equality
    # checks against FPS selection distances hold bit-exactly
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2 + diff[:, :, 2] ** 2
    np.fill_diagonal(d2, np.inf)
    return np.sqrt(d2.min(axis=1))


def spacing_stats(subset, bins: int = 64) -> SpacingStats:
    """Nearest-neighbor distance of every subset point to the rest of the
    subset, with summary stats and a fixed-width histogram over
    [0, max distance]."""
    pts = _subset_points(subset)
    if len(pts) < 2:
        raise SampleError(f"spacing needs at least 2 points, got {len(pts)}")
    if bins < 1:
        raise SampleError(f"bins must be positive, got {bins}")
    if len(pts) <= _BRUTE_LIMIT:
        nn = _nn_brute(pts)
    else:
        tree = cKDTree(pts)
        d, _ = tree.query(pts, k=2)
        nn = d[:, 1]
    top = float(nn.max())
    counts, edges = np.histogram(nn, bins=bins, range=(0.0, top if top > 0 else 1.0))
    return SpacingStats(
        nn_dists=nn,
        min=float(nn.min()),
        mean=float(nn.mean()),
        max=top,
        hist_edges=edges,
        hist_counts=counts,
    )


def recall(cloud: PointCloud, selected_indices, min_points: int = 1) -> RecallReport:
    """Fraction of foreground points and of instances surviving a selection.

    An instance counts as recalled when at least ``min_points`` of its points
    survive.  Labels: -1 background, >= 0 instance ids.
    """
    if cloud.instance_label is None:
        raise SampleError("recall needs instance labels on the source cloud")
    idx = np.asarray(selected_indices, dtype=np.int64)
    n = len(cloud)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise SampleError("selected indices out of range")
    labels = cloud.instance_label
    fg = labels >= 0
    total_fg = int(fg.sum())
    sel_labels = labels[idx]
    sel_fg = int((sel_labels >= 0).sum())
    instance_ids = np.unique(labels[fg])
    per_instance = {
        int(i): int((sel_labels == i).sum()) for i in instance_ids
    }
    if total_fg == 0:
        return RecallReport(1.0, 1.0, per_instance)
    point_recall = sel_fg / total_fg
    recalled = sum(1 for c in per_instance.values() if c >= min_points)
    instance_recall = recalled / len(instance_ids)
    return RecallReport(float(point_recall), float(instance_recall), per_instance)


def avs_sampling_rate(scenes, m: int, fixed_voxel, sigma: float = 0.05,
                      t_max: int = 20, aspect=(1.0, 1.0, 1.0),
                      threads: int = 1) -> AvsRateReport:
    """Relative voxel-count deviation per scene under one shared fixed voxel
    versus per-scene adaptive sizing."""
    if not scenes:
        raise SampleError("need at least one scene")
    fixed_voxel = np.asarray(fixed_voxel, dtype=np.float64)
    fixed_count, fixed_dev = [], []
    avs_count, avs_dev, avs_it, avs_conv = [], [], [], []
    for scene in scenes:
        pts = scene.points if isinstance(scene, PointCloud) else as_points(scene)
        c_fixed = count_nonempty(pts, fixed_voxel, threads)
        fixed_count.append(c_fixed)
        fixed_dev.append((c_fixed - m) / m)
        res = _avs_search(pts, m, sigma=sigma, t_max=t_max, aspect=aspect,
                          threads=threads)
        avs_count.append(res.count)
        avs_dev.append((res.count - m) / m)
        avs_it.append(res.iterations)
        avs_conv.append(res.converged)
    return AvsRateReport(
        fixed_count=np.asarray(fixed_count, dtype=np.int64),
        fixed_dev=np.asarray(fixed_dev),
        avs_count=np.asarray(avs_count, dtype=np.int64),
        avs_dev=np.asarray(avs_dev),
        avs_iterations=np.asarray(avs_it, dtype=np.int64),
        avs_converged=np.asarray(avs_conv, dtype=bool),
    )
