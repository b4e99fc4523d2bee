"""Voxel-guided point-cloud subsampling.

A linear-time hierarchical sampler built on sparse voxel hashing (adaptive
voxel sizing, center-closest representatives, coarse-to-fine layers), the
classic baselines (farthest-point, random, fixed-voxel, inverse-density),
the diagnostics to compare them, and file I/O plus a synthetic scene
generator to drive it all.

Hot kernels run in a compiled extension when available; a NumPy fallback
with identical results is selected automatically otherwise (see
``backend_name``).
"""

from ._backend import available_backends, backend_name, get_kernels
from .core import (
    METHODS,
    REPRESENTATIVES,
    AvsLayerLog,
    LayerPlan,
    PointCloud,
    SampleError,
    SampleOutput,
    SampleSpec,
    bounding_box,
    plan_layers,
)
from .io import (
    FormatError,
    SceneConfig,
    generate_scene,
    read_bin,
    read_xyz,
    write_bin,
    write_output,
    write_xyz,
)
from .metrics import (
    AvsRateReport,
    RecallReport,
    SpacingStats,
    avs_sampling_rate,
    recall,
    spacing_stats,
)
from .samplers import (
    AvsResult,
    FpsState,
    avs,
    fps,
    fps_state,
    havs,
    havs_layer,
    ids,
    rps,
    rvs,
    sample,
)
from .voxelhash import (
    VoxelTable,
    center_distance,
    center_distances,
    count_nonempty,
    hash_slot,
    mix64,
    mix_coords,
    next_pow2,
    voxel_coord,
    voxel_coords,
    voxelize_min,
)

__version__ = "0.1.0"

__all__ = [
    "AvsLayerLog",
    "AvsRateReport",
    "AvsResult",
    "FormatError",
    "FpsState",
    "LayerPlan",
    "METHODS",
    "PointCloud",
    "REPRESENTATIVES",
    "RecallReport",
    "SampleError",
    "SampleOutput",
    "SampleSpec",
    "SceneConfig",
    "SpacingStats",
    "VoxelTable",
    "available_backends",
    "avs",
    "avs_sampling_rate",
    "backend_name",
    "bounding_box",
    "center_distance",
    "center_distances",
    "count_nonempty",
    "fps",
    "fps_state",
    "generate_scene",
    "get_kernels",
    "hash_slot",
    "havs",
    "havs_layer",
    "ids",
    "mix64",
    "mix_coords",
    "next_pow2",
    "plan_layers",
    "read_bin",
    "read_xyz",
    "recall",
    "rps",
    "rvs",
    "sample",
    "spacing_stats",
    "voxel_coord",
    "voxel_coords",
    "voxelize_min",
    "write_bin",
    "write_output",
    "write_xyz",
]
