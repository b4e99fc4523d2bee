"""Command-line front end: sample files, benchmark latency across input
scales, and emit diagnostic reports as plot-ready CSV plus a JSON summary.

Exit codes: 0 success, 1 I/O errors, 2 invalid arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import statistics
import sys
from dataclasses import dataclass

import numpy as np

from . import io as pcio
from ._backend import backend_name
from .core import PointCloud, SampleError, SampleSpec
from .metrics import avs_sampling_rate, recall, spacing_stats
from .samplers import _avs_search, sample

BENCH_HEADER = ["method", "n", "m", "trials", "threads", "min_ms", "median_ms", "mean_ms"]
RECALL_HEADER = ["method", "seed", "point_recall", "instance_recall"]
SPACING_HEADER = ["method", "seed", "n", "m", "min", "mean", "max"]
AVSRATE_HEADER = ["seed", "extent", "n", "m", "fixed_count", "fixed_dev",
                  "avs_count", "avs_dev", "avs_iterations", "avs_converged"]

DEFAULT_FPS_CUTOFF = 2**17


@dataclass
class BenchRecord:
    method: str
    n: int
    m: int
    trials: int
    threads: int
    wall_ms: list[float]

    def row(self):
        return [self.method, self.n, self.m, self.trials, self.threads,
                f"{min(self.wall_ms):.3f}",
                f"{statistics.median(self.wall_ms):.3f}",
                f"{statistics.mean(self.wall_ms):.3f}"]


def _parse_size(text: str) -> int:
    text = text.strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return int(base) ** int(exp)
    return int(text)


def _parse_voxel(text: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise SampleError(f"--voxel needs 1 or 3 comma-separated values, got {text!r}")
    return tuple(parts)


def _default_threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("HAVS_THREADS", "").strip()
    return int(env) if env else 1


def _read_cloud(path) -> PointCloud:
    if str(path).endswith(".bin"):
        return pcio.read_bin(path)
    return pcio.read_xyz(path)


def _infer_format(args) -> str:
    if args.format:
        return args.format
    out = str(args.output)
    if out.endswith(".bin"):
        return "bin"
    if out.endswith(".json"):
        return "json"
    return "xyz"


def _scene(seed: int, n: int, extent: float = 50.0) -> PointCloud:
    cfg = pcio.SceneConfig(
        seed=seed,
        extent=(extent, extent, max(2.0, 0.08 * extent)),
        n_background=n,
        n_instances=10,
    )
    return pcio.generate_scene(cfg)


# ---------------------------------------------------------------------------
# subcommands


def cmd_sample(args) -> int:
    cloud = _read_cloud(args.input)
    representative = args.representative
    if representative is None:
        representative = "average" if args.method == "rvs" else "center_closest"
    spec = SampleSpec(
        m=args.num,
        method=args.method,
        representative=representative,
        layers=args.layers,
        sigma=args.sigma,
        t_max=args.tmax,
        seed=args.seed,
        fixed_voxel=_parse_voxel(args.voxel) if args.voxel else None,
    )
    out = sample(cloud, spec, threads=_default_threads(args))
    pcio.write_output(out, _infer_format(args), args.output)
    print(f"{spec.method} n={len(cloud)} m={len(out)} elapsed_ms={out.timing_ms:.3f}")
    return 0


def _time_method(cloud, spec, threads, trials):
    times = []
    for trial in range(trials + 1):  # extra warmup trial, excluded
        out = sample(cloud, spec, threads=threads)
        if trial:
            times.append(out.timing_ms)
    return times


def cmd_bench(args) -> int:
    sizes = [_parse_size(s) for s in args.sizes.split(",")]
    methods = [m.strip() for m in args.methods.split(",")]
    threads = _default_threads(args)
    voxel = _parse_voxel(args.voxel)
    rows = []
    for si, n in enumerate(sorted(sizes)):
        cloud = _scene(seed=args.seed + si, n=n)
        m = max(1, int(len(cloud) * args.ratio))
        for method in sorted(methods):
            if method == "fps" and len(cloud) > args.fps_cutoff:
                rows.append([method, len(cloud), m, 0, threads,
                             "skipped", "skipped", "skipped"])
                continue
            spec = SampleSpec(
                m=m,
                method=method,
                representative="average" if method == "rvs" else "center_closest",
                seed=args.seed,
                fixed_voxel=voxel if method == "rvs" else None,
            )
            times = _time_method(cloud, spec, threads, args.trials)
            rows.append(BenchRecord(method, len(cloud), m, args.trials,
                                    threads, times).row())
    rows.sort(key=lambda r: (r[0], int(r[1])))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_HEADER)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out} (backend: {backend_name()})")
    return 0


def _analyze_scenes(args):
    for i in range(args.scenes):
        yield args.seed + i, _scene(seed=args.seed + i, n=args.n)


def _write_report(args, header, rows, summary):
    csv_path = f"{args.out}.csv"
    json_path = f"{args.out}.json"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote {csv_path} and {json_path}")


def cmd_analyze(args) -> int:
    threads = _default_threads(args)
    methods = sorted(m.strip() for m in args.methods.split(","))
    if args.report == "spacing":
        rows, pooled = [], {meth: [] for meth in methods}
        for seed, cloud in _analyze_scenes(args):
            m = max(2, int(len(cloud) * args.ratio))
            for method in methods:
                spec = SampleSpec(m=m, method=method, seed=seed,
                                  fixed_voxel=_parse_voxel(args.voxel)
                                  if method == "rvs" else None)
                out = sample(cloud, spec, threads=threads)
                st = spacing_stats(out, bins=args.bins)
                rows.append([method, seed, len(cloud), m,
                             f"{st.min:.6g}", f"{st.mean:.6g}", f"{st.max:.6g}"])
                pooled[method].append(st.nn_dists)
        rows.sort(key=lambda r: (r[0], int(r[2]), int(r[1])))
        summary = {}
        for method in methods:
            nn = np.concatenate(pooled[method])
            counts, edges = np.histogram(nn, bins=args.bins, range=(0.0, float(nn.max())))
            summary[method] = {
                "mean_nn": float(nn.mean()),
                "min_nn": float(nn.min()),
                "max_nn": float(nn.max()),
                "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
            }
        _write_report(args, SPACING_HEADER, rows, summary)
        return 0

    if args.report == "recall":
        rows = []
        sums = {meth: [0.0, 0.0] for meth in methods}
        for seed, cloud in _analyze_scenes(args):
            m = max(1, int(len(cloud) * args.ratio))
            for method in methods:
                spec = SampleSpec(m=m, method=method, seed=seed,
                                  fixed_voxel=_parse_voxel(args.voxel)
                                  if method == "rvs" else None)
                out = sample(cloud, spec, threads=threads)
                if not len(out.indices):
                    raise SampleError(
                        f"recall needs selected indices; {method} synthesized points"
                    )
                rep = recall(cloud, out.indices)
                rows.append([method, seed,
                             f"{rep.point_recall:.6g}", f"{rep.instance_recall:.6g}"])
                sums[method][0] += rep.point_recall
                sums[method][1] += rep.instance_recall
        rows.sort(key=lambda r: (r[0], int(r[1])))
        summary = {
            method: {
                "point_recall_mean": sums[method][0] / args.scenes,
                "instance_recall_mean": sums[method][1] / args.scenes,
            }
            for method in methods
        }
        _write_report(args, RECALL_HEADER, rows, summary)
        return 0

    if args.report == "avsrate":
        scenes, extents, seeds = [], [], []
        for i in range(args.scenes):
            frac = i / max(args.scenes - 1, 1)
            extent = args.extent * args.extent_span**frac
            seeds.append(args.seed + i)
            extents.append(extent)
            scenes.append(_scene(seed=args.seed + i, n=args.n, extent=extent))
        m = max(1, int(args.n * args.ratio))
        # the shared fixed voxel is the mean of the per-scene adaptive sizes
        per_scene = [
            _avs_search(sc.points, m, threads=threads).voxel for sc in scenes
        ]
        fixed_voxel = np.mean(per_scene, axis=0)
        report = avs_sampling_rate(scenes, m, fixed_voxel, threads=threads)
        rows = []
        for i, scene in enumerate(scenes):
            rows.append([seeds[i], f"{extents[i]:.6g}", len(scene), m,
                         int(report.fixed_count[i]), f"{report.fixed_dev[i]:.6g}",
                         int(report.avs_count[i]), f"{report.avs_dev[i]:.6g}",
                         int(report.avs_iterations[i]), bool(report.avs_converged[i])])
        rows.sort(key=lambda r: int(r[0]))
        iters = report.avs_iterations

        def dev_hist(devs):
            counts, edges = np.histogram(devs, bins=16)
            return {"edges": edges.tolist(), "counts": counts.tolist()}

        summary = {
            "fixed_voxel": [float(v) for v in fixed_voxel],
            "fixed": {"iqr": report.fixed_iqr,
                      "histogram": dev_hist(report.fixed_dev)},
            "avs": {
                "iqr": report.avs_iqr,
                "histogram": dev_hist(report.avs_dev),
                "convergence_rate": report.convergence_rate,
                "iterations": {
                    "mean": float(iters.mean()),
                    "max": int(iters.max()),
                    "log2_inv_sigma_bound": math.ceil(math.log2(1.0 / 0.05)),
                },
            },
        }
        _write_report(args, AVSRATE_HEADER, rows, summary)
        return 0

    raise SampleError(f"unknown report {args.report!r}")


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="havs", description="Point-cloud subsampling toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="subsample a point-cloud file")
    p.add_argument("--input", required=True)
    p.add_argument("--method", required=True,
                   choices=["fps", "rps", "rvs", "ids", "havs"])
    p.add_argument("--num", required=True, type=int)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--tmax", type=int, default=20)
    p.add_argument("--voxel", default=None, help="X,Y,Z meters (rvs, fixed-voxel havs)")
    p.add_argument("--representative", default=None,
                   choices=["average", "center", "random", "center_closest"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--format", default=None, choices=["xyz", "bin", "json"])
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bench", help="latency benchmark over input scales")
    p.add_argument("--sizes", default="2^14,2^16,2^18",
                   help="comma list; accepts 2^k notation")
    p.add_argument("--methods", default="rps,rvs,havs,fps")
    p.add_argument("--ratio", type=float, default=0.25, help="m = n * ratio")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--voxel", default="0.3", help="fixed voxel for rvs")
    p.add_argument("--fps-cutoff", type=int, default=DEFAULT_FPS_CUTOFF,
                   help="skip fps above this input size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="spacing / recall / voxel-rate reports")
    p.add_argument("--report", required=True, choices=["spacing", "recall", "avsrate"])
    p.add_argument("--scenes", type=int, default=50)
    p.add_argument("--n", type=_parse_size, default=2**14)
    p.add_argument("--ratio", type=float, default=0.25)
    p.add_argument("--methods", default="havs,fps,rps")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--voxel", default="0.3", help="fixed voxel for rvs")
    p.add_argument("--extent", type=float, default=5.0,
                   help="smallest scene extent (avsrate)")
    p.add_argument("--extent-span", type=float, default=10.0,
                   help="largest/smallest extent ratio (avsrate)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True, help="output prefix (.csv/.json)")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (pcio.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SampleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
