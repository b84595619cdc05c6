"""Compare the numba and pure-numpy kernel backends.

Two views: per-kernel timings on representative inputs (both variants called
in-process), and the end-to-end ``graspctx bench`` latency with each backend
selected through GRASPCTX_BACKEND in a fresh interpreter.

    python3 benchmarks/bench_backends.py [--frames 100] [--repeat 20]
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

from graspctx import kernels
from graspctx.cloud import CameraIntrinsics, deproject, filter_invalid
from graspctx.planes import planes_from_triples
from graspctx.scenegen import (NoiseModel, apply_noise, camera_center, cluttered_scene,
                               render_depth)


def best_of(fn, repeat):
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return 1e3 * min(times)


def kernel_table(repeat):
    scene = cluttered_scene()
    pose = scene.labels.camera
    k = CameraIntrinsics()
    frame = apply_noise(render_depth(scene, pose, k), NoiseModel(seed=0))
    cloud = deproject(filter_invalid(frame))
    rng = np.random.default_rng(0)
    planes = planes_from_triples(cloud, rng.integers(0, len(cloud), (200, 3)))
    uv = np.unique(cloud[:, :2], axis=0)  # sorted, no duplicates, as the chain expects
    sub = cloud[rng.permutation(len(cloud))[:4000]]
    dirs = k.pixel_rays() @ pose.rotation
    origin = camera_center(pose)
    prims = scene.packed()

    cases = {
        "count_inliers (200 planes)": (lambda: kernels.count_inliers_numba(cloud, planes, 0.015),
                                       lambda: kernels.count_inliers_numpy(cloud, planes, 0.015)),
        "cluster_roots (4000 pts)": (lambda: kernels.cluster_roots_numba(sub, 0.02),
                                     lambda: kernels.cluster_roots_numpy(sub, 0.02)),
        "convex hull": (lambda: kernels.monotone_chain_numba(uv),
                        lambda: kernels.monotone_chain_numpy(uv)),
        "raycast 160x120": (lambda: kernels.raycast_numba(origin, dirs, prims),
                            lambda: kernels.raycast_numpy(origin, dirs, prims)),
    }
    print(f"{'kernel':<28}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, (fast, slow) in cases.items():
        a, b = best_of(fast, repeat), best_of(slow, repeat)
        print(f"{name:<28}{a:>10.3f}{b:>10.3f}{b / a:>8.1f}x")


def end_to_end(frames):
    print(f"\nend-to-end detect latency, {frames} frames")
    for backend in ("numba", "numpy"):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, "bench.json")
            env = dict(os.environ, GRASPCTX_BACKEND=backend)
            subprocess.run([sys.executable, "-m", "graspctx.cli", "bench", "--frames", str(frames),
                            "--output", out], check=True, env=env, stderr=subprocess.DEVNULL)
            with open(out) as fh:
                report = json.load(fh)
        agg = report["aggregates"]
        print(f"  {report['backend']:<6} median {agg['median_ms']:7.2f} ms   "
              f"p95 {agg['p95_ms']:7.2f} ms   {agg['fps_median']:6.1f} fps")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not kernels.USE_NUMBA:
        sys.exit("numba is unavailable or disabled; nothing to compare")
    kernel_table(args.repeat)
    end_to_end(args.frames)


if __name__ == "__main__":
    main()
