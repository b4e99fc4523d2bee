"""Shared domain types and the layer-count arithmetic of the hierarchical sampler.

All types are immutable after construction and safe to share across threads;
coordinates are validated once here so the hot loops can assume finite input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

METHODS = ("fps", "rps", "rvs", "ids", "havs")
REPRESENTATIVES = ("average", "center", "random", "center_closest")

#: Layer counts grow by this factor from coarse to fine.
LAYER_GROWTH = 4


class SampleError(ValueError):
    """Invalid sampling request: bad spec values, counts out of range, etc."""


def as_points(points) -> np.ndarray:
    """Coerce to a C-contiguous (n, 3) float64 array."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise SampleError(f"points must have shape (n, 3), got {pts.shape}")
    return pts


@dataclass(frozen=True)
class PointCloud:
    """A flat array of 3D points with optional per-point attributes.

    Attributes:
        points: (n, 3) float64 coordinates in meters.
        intensity: optional (n,) float64 per-point intensity.
        instance_label: optional (n,) int64 labels; -1 is background,
            values >= 0 identify foreground instances.
    """

    points: np.ndarray
    intensity: np.ndarray | None = None
    instance_label: np.ndarray | None = None

    def __post_init__(self):
        pts = as_points(self.points)
        if pts.size and not np.isfinite(pts).all():
            raise SampleError("point coordinates must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        n = len(pts)
        if self.intensity is not None:
            inten = np.ascontiguousarray(self.intensity, dtype=np.float64)
            if inten.shape != (n,):
                raise SampleError(
                    f"intensity length {inten.shape} does not match {n} points"
                )
            inten.flags.writeable = False
            object.__setattr__(self, "intensity", inten)
        if self.instance_label is not None:
            lab = np.ascontiguousarray(self.instance_label, dtype=np.int64)
            if lab.shape != (n,):
                raise SampleError(
                    f"instance_label length {lab.shape} does not match {n} points"
                )
            lab.flags.writeable = False
            object.__setattr__(self, "instance_label", lab)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SampleSpec:
    """Everything a sampling run needs besides the cloud itself.

    ``fixed_voxel`` switches the voxel methods to a preset grid size:
    required for rvs, and for havs it disables the adaptive voxel search
    (the "fixed voxel" ablation).  ``aspect`` shapes adaptive voxels as
    ``scale * aspect``.
    """

    m: int
    method: str = "havs"
    representative: str = "center_closest"
    layers: int = 2
    sigma: float = 0.05
    t_max: int = 20
    aspect: tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 0
    fixed_voxel: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise SampleError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.representative not in REPRESENTATIVES:
            raise SampleError(
                f"unknown representative {self.representative!r}, expected one of {REPRESENTATIVES}"
            )
        if self.m < 1:
            raise SampleError(f"target count must be positive, got {self.m}")
        if self.layers < 1:
            raise SampleError(f"layer count must be positive, got {self.layers}")
        if not self.sigma > 0:
            raise SampleError(f"sigma must be positive, got {self.sigma}")
        if self.t_max < 1:
            raise SampleError(f"t_max must be at least 1, got {self.t_max}")
        aspect = tuple(float(a) for a in self.aspect)
        if len(aspect) != 3 or not all(a > 0 for a in aspect):
            raise SampleError(f"aspect needs three positive components, got {self.aspect}")
        object.__setattr__(self, "aspect", aspect)
        if self.fixed_voxel is not None:
            voxel = tuple(float(v) for v in self.fixed_voxel)
            if len(voxel) != 3 or not all(v > 0 for v in voxel):
                raise SampleError(
                    f"fixed_voxel needs three positive components, got {self.fixed_voxel}"
                )
            object.__setattr__(self, "fixed_voxel", voxel)


@dataclass(frozen=True)
class LayerPlan:
    """Per-layer target counts, coarse to fine; sums exactly to the request."""

    counts: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass
class AvsLayerLog:
    """Convergence record of one layer's voxel-size selection."""

    layer: int
    voxel: tuple[float, float, float]
    count: int
    iterations: int
    converged: bool
    adjustment: str  # "none" | "truncated" | "padded"


@dataclass
class SampleOutput:
    """Result of a sampling run.

    ``indices`` is empty when points were synthesized (average/center
    representatives); otherwise it holds unique source indices and
    ``points[j]`` equals the source point at ``indices[j]`` bit-exactly.
    ``layer_of`` maps each output element to its 1-based layer.
    """

    points: np.ndarray
    indices: np.ndarray
    layer_of: np.ndarray
    avs_log: list[AvsLayerLog] = field(default_factory=list)
    method: str = ""
    timing_ms: float | None = None

    def __len__(self) -> int:
        return len(self.points)


def plan_layers(m: int, k: int) -> LayerPlan:
    """Split a target count into k per-layer counts growing 4x coarse-to-fine.

    Counts follow the geometric series m * 4^(l-1) * 3 / (4^k - 1), floored,
    with every layer bumped to at least one point and the remainder assigned
    to the last (finest) layer.

    Raises:
        SampleError: if m < k, which cannot give every layer a point.
    """
    if k < 1:
        raise SampleError(f"layer count must be positive, got {k}")
    if m < 1:
        raise SampleError(f"target count must be positive, got {m}")
    if m < k:
        raise SampleError(f"cannot split m={m} over {k} layers with >= 1 point each")
    denom = LAYER_GROWTH**k - 1
    counts = [max(1, (m * 3 * LAYER_GROWTH**i) // denom) for i in range(k - 1)]
    counts.append(m - sum(counts))
    if counts[-1] < 1 or any(b < a for a, b in zip(counts, counts[1:])):
        raise SampleError(f"degenerate layer split for m={m}, k={k}: {counts}")
    return LayerPlan(counts=tuple(counts))


def bounding_box(cloud) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise (min, max) corners of the cloud; degenerate axes allowed."""
    pts = cloud.points if isinstance(cloud, PointCloud) else as_points(cloud)
    if len(pts) == 0:
        raise SampleError("bounding box of an empty cloud is undefined")
    return pts.min(axis=0), pts.max(axis=0)
