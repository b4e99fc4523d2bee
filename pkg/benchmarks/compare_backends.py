"""Compare the compiled kernels against the NumPy fallback.

Times the three hot kernels (voxel counting, min-table build, FPS) and a
full hierarchical sampling run on each available backend, verifies both
produce identical results, and prints the speedups.

    python benchmarks/compare_backends.py [--sizes 2^14,2^16] [--trials 3]
"""

import argparse
import statistics
import time

import numpy as np

from havs import PointCloud, SampleSpec, available_backends, get_kernels
from havs._backend import use as backend_use
from havs.io import SceneConfig, generate_scene
from havs.samplers import havs


def parse_size(text):
    if "^" in text:
        base, exp = text.split("^", 1)
        return int(base) ** int(exp)
    return int(text)


def timeit(fn, trials):
    times = []
    fn()  # warmup
    for _ in range(trials):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times)


def canonical(table):
    coords, idx, dist = table
    order = np.lexsort((coords[:, 0], coords[:, 1], coords[:, 2]))
    return coords[order], idx[order], dist[order]


def bench_kernels(n, trials, fps_cap):
    scene = generate_scene(SceneConfig(seed=1, n_background=n, n_instances=10))
    pts = scene.points
    voxel = np.asarray((0.4, 0.4, 0.4))
    m_fps = min(len(pts) // 4, fps_cap)
    rows = []
    results = {}
    for name in available_backends():
        k = get_kernels(name)
        count = k.count_nonempty(pts, voxel)
        table = canonical(k.build_min_table(pts, voxel))
        fps_out = k.fps(pts, m_fps, 0, 1)
        results[name] = (count, table, fps_out)
        rows.append((name, "count_nonempty",
                     timeit(lambda: k.count_nonempty(pts, voxel), trials)))
        rows.append((name, "build_min_table",
                     timeit(lambda: k.build_min_table(pts, voxel), trials)))
        rows.append((name, f"fps (m={m_fps})",
                     timeit(lambda: k.fps(pts, m_fps, 0, 1), trials)))

    cloud = PointCloud(points=pts)
    spec = SampleSpec(m=len(pts) // 4, method="havs", seed=0)
    for name in available_backends():
        with backend_use(name):
            rows.append((name, "havs (m=n/4)",
                         timeit(lambda: havs(cloud, spec), trials)))

    if len(results) == 2:
        a, b = results["compiled"], results["python"]
        assert a[0] == b[0], "count mismatch between backends"
        for x, y in zip(a[1], b[1]):
            assert (x == y).all(), "table mismatch between backends"
        for x, y in zip(a[2], b[2]):
            assert (x == y).all(), "fps mismatch between backends"
    return len(pts), rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="2^14,2^16")
    parser.add_argument("--trials", type=int, default=3)
    parser.add_argument("--fps-cap", type=int, default=4096,
                        help="cap on fps sample count to keep runs short")
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    if len(backends) < 2:
        print("compiled extension not built: timing the python backend only")

    for size_text in args.sizes.split(","):
        n, rows = bench_kernels(parse_size(size_text), args.trials, args.fps_cap)
        print(f"\nn = {n}")
        print(f"  {'kernel':<18} " + " ".join(f"{b:>12}" for b in backends)
              + ("      speedup" if len(backends) == 2 else ""))
        kernels_seen = []
        for _, kernel, _ in rows:
            if kernel not in kernels_seen:
                kernels_seen.append(kernel)
        table = {(b, k): ms for b, k, ms in rows}
        for kernel in kernels_seen:
            cells = [table[(b, kernel)] for b in backends]
            line = f"  {kernel:<18} " + " ".join(f"{c:>9.2f} ms" for c in cells)
            if len(cells) == 2:
                line += f"  {cells[1] / cells[0]:>9.1f}x"
            print(line)
        if len(backends) == 2:
            print("  (results verified identical across backends)")


if __name__ == "__main__":
    main()
