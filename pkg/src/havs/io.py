"""Point-cloud file I/O and the synthetic labeled-scene generator.

Formats:
  * xyz  — whitespace-separated ASCII, one point per line, 3 or 4 floats
           (x y z [intensity]); '#' lines are comments; written with 6
           significant digits.
  * bin  — little-endian float32 quadruples (x, y, z, intensity);
           bit-exact round trip.
  * json — sampling output with indices, layer provenance and search log.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import PointCloud, SampleOutput

_BIN_DTYPE = np.dtype("<f4")
_BIN_RECORD = 16  # 4 little-endian float32 per point


class FormatError(ValueError):
    """Malformed input file; the message carries the path and position."""


@dataclass(frozen=True)
class SceneConfig:
    """Knobs of the synthetic LiDAR-like scene generator.

    Background points fall off radially like 1 / r**density_falloff around
    the origin (the sensor), optionally concentrated on a ground plane.
    Instances are Gaussian clusters labeled 0..n_instances-1 whose point
    counts shrink with distance, so distant instances are sparse.
    """

    seed: int = 0
    extent: tuple[float, float, float] = (50.0, 50.0, 4.0)
    n_background: int = 15000
    n_instances: int = 10
    instance_size_range: tuple[float, float] = (0.5, 3.0)
    density_falloff: float = 2.0
    ground_plane: bool = True

    def __post_init__(self):
        if self.n_background < 0 or self.n_instances < 0:
            raise ValueError("counts must be non-negative")
        if not all(e > 0 for e in self.extent):
            raise ValueError(f"extent must be positive, got {self.extent}")
        if self.density_falloff < 0:
            raise ValueError(f"density falloff must be >= 0, got {self.density_falloff}")
        lo, hi = self.instance_size_range
        if not 0 < lo <= hi:
            raise ValueError(f"bad instance size range {self.instance_size_range}")


def read_xyz(path) -> PointCloud:
    """Read ASCII points; rejects non-finite values and mixed arity."""
    points, intensity = [], []
    arity = None
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if arity is None:
                if len(tokens) not in (3, 4):
                    raise FormatError(
                        f"{path}:{lineno}: expected 3 or 4 columns, got {len(tokens)}"
                    )
                arity = len(tokens)
            elif len(tokens) != arity:
                raise FormatError(
                    f"{path}:{lineno}: mixed arity, expected {arity} columns, "
                    f"got {len(tokens)}"
                )
            values = []
            for col, tok in enumerate(tokens, start=1):
                try:
                    val = float(tok)
                except ValueError:
                    raise FormatError(
                        f"{path}:{lineno}: column {col}: cannot parse {tok!r}"
                    ) from None
                if not math.isfinite(val):
                    raise FormatError(
                        f"{path}:{lineno}: column {col}: non-finite value {tok!r}"
                    )
                values.append(val)
            points.append(values[:3])
            if arity == 4:
                intensity.append(values[3])
    if not points:
        raise FormatError(f"{path}: no data lines")
    return PointCloud(
        points=np.asarray(points, dtype=np.float64),
        intensity=np.asarray(intensity, dtype=np.float64) if intensity else None,
    )


def write_xyz(points, path, intensity=None) -> None:
    """Write ASCII points with 6 significant digits."""
    pts = np.asarray(points, dtype=np.float64)
    if intensity is not None:
        pts = np.column_stack([pts, np.asarray(intensity, dtype=np.float64)])
    np.savetxt(path, pts, fmt="%.6g")


def read_bin(path) -> PointCloud:
    """Read little-endian float32 (x, y, z, intensity) records."""
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size % _BIN_RECORD:
        raise FormatError(
            f"{path}: size {raw.size} is not a multiple of {_BIN_RECORD} bytes"
        )
    quads = raw.view(_BIN_DTYPE).reshape(-1, 4)
    if quads.size and not np.isfinite(quads).all():
        bad = int(np.flatnonzero(~np.isfinite(quads).all(axis=1))[0])
        raise FormatError(f"{path}: non-finite value in record {bad}")
    return PointCloud(
        points=quads[:, :3].astype(np.float64),
        intensity=quads[:, 3].astype(np.float64),
    )


def write_bin(points, path, intensity=None) -> None:
    """Write little-endian float32 (x, y, z, intensity) records."""
    pts = np.asarray(points, dtype=np.float64)
    quads = np.zeros((len(pts), 4), dtype=_BIN_DTYPE)
    quads[:, :3] = pts
    if intensity is not None:
        quads[:, 3] = np.asarray(intensity, dtype=np.float64)
    quads.tofile(path)


def to_json_dict(output: SampleOutput) -> dict:
    """JSON-ready form of a sampling output."""
    return {
        "method": output.method,
        "m": int(len(output.points)),
        "indices": [int(i) for i in output.indices],
        "points": [[float(c) for c in p] for p in output.points],
        "layer_of": [int(l) for l in output.layer_of],
        "avs_log": [
            {
                "layer": log.layer,
                "voxel": list(log.voxel),
                "count": log.count,
                "iterations": log.iterations,
                "converged": log.converged,
                "adjustment": log.adjustment,
            }
            for log in output.avs_log
        ],
        "timing_ms": output.timing_ms,
    }


def write_output(output: SampleOutput, fmt: str, path) -> None:
    """Write a sampling result as xyz, bin, or json."""
    if fmt == "xyz":
        write_xyz(output.points, path)
    elif fmt == "bin":
        write_bin(output.points, path)
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump(to_json_dict(output), fh)
            fh.write("\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def _powerlaw_radii(rng, n, alpha, r_min, r_max):
    """Radii with density proportional to r**-alpha on [r_min, r_max]."""
    u = rng.random(n)
    if abs(alpha - 1.0) < 1e-12:
        return r_min * (r_max / r_min) ** u
    e = 1.0 - alpha
    return (r_min**e + u * (r_max**e - r_min**e)) ** (1.0 / e)


def generate_scene(config: SceneConfig) -> PointCloud:
    """Deterministic synthetic scene with labeled instances.

    Independent child generators drive the background and the instances, so
    changing one count does not perturb the other part of the scene.
    """
    bg_rng = np.random.default_rng([config.seed, 0])
    inst_rng = np.random.default_rng([config.seed, 1])
    ex, ey, ez = config.extent
    r_max = min(ex, ey) / 2.0
    r_min = min(1.0, r_max / 2.0)
    alpha = config.density_falloff

    chunks, labels = [], []
    if config.n_background:
        n_bg = config.n_background
        r = _powerlaw_radii(bg_rng, n_bg, alpha, r_min, r_max)
        theta = bg_rng.uniform(0.0, 2.0 * np.pi, n_bg)
        x = r * np.cos(theta)
        y = r * np.sin(theta)
        if config.ground_plane:
            n_plane = int(0.65 * n_bg)
            z = np.empty(n_bg)
            z[:n_plane] = np.abs(bg_rng.normal(0.0, 0.04, n_plane))
            z[n_plane:] = bg_rng.uniform(0.1, ez, n_bg - n_plane)
        else:
            z = bg_rng.uniform(0.0, ez, n_bg)
        chunks.append(np.column_stack([x, y, z]))
        labels.append(np.full(n_bg, -1, dtype=np.int64))

    lo, hi = config.instance_size_range
    for i in range(config.n_instances):
        # stratified radii: instances spread from near to far
        frac = (i + inst_rng.random()) / max(config.n_instances, 1)
        r_c = 0.15 * r_max + frac * 0.75 * r_max
        theta_c = inst_rng.uniform(0.0, 2.0 * np.pi)
        center = np.array([
            r_c * np.cos(theta_c),
            r_c * np.sin(theta_c),
            inst_rng.uniform(0.2, max(0.4, min(2.0, ez))),
        ])
        size = inst_rng.uniform(lo, hi)
        count = max(4, int(round(2500.0 / max(r_c, 1.0) ** 2)))
        pts = center + inst_rng.normal(0.0, size / 3.0, (count, 3))
        pts[:, 2] = np.clip(pts[:, 2], 0.02, None)
        chunks.append(pts)
        labels.append(np.full(count, i, dtype=np.int64))

    if not chunks:
        return PointCloud(points=np.empty((0, 3)),
                          instance_label=np.empty(0, dtype=np.int64))
    return PointCloud(
        points=np.concatenate(chunks),
        instance_label=np.concatenate(labels),
    )
