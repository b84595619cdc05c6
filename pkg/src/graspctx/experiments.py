"""Seeded synthetic experiments: mode accuracy, grasp accuracy over an
approach, stacked-plane separability, occlusion robustness, throughput.

Each experiment returns a JSON-ready report with the configuration echo,
one row per trial and aggregate statistics.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from ._backend import BACKEND
from .cloud import deproject, filter_invalid
from .config import HarnessConfig
from .modes import Mode, detect_mode
from .orientation import GravityEstimate, estimate_gravity
from .planes import extract_planes, fit_plane_ransac
from .scenegen import (WORLD_UP, CameraPose, SceneKind, SceneSpec, apply_noise, cluttered_scene,
                       eraser_scene, make_approach, occluded_table_scene, render_depth,
                       standard_scenes, stacked_scene, synth_imu, world_plane_to_camera)

EXPERIMENTS = ("mode-accuracy", "grasp-accuracy", "plane-separability", "occlusion", "throughput")
REPORT_VERSION = 1
DEFAULT_GAPS = (0.005, 0.0075, 0.010, 0.015, 0.019, 0.020, 0.025, 0.030, 0.040)


def trial_seed(*keys: int) -> int:
    """Stable 32-bit seed derived from a tuple of integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True)
class Observation:
    cloud: np.ndarray
    gravity: GravityEstimate
    labels: np.ndarray  # primitive index per cloud point


def observe(scene: SceneSpec, pose: CameraPose, cfg: HarnessConfig, noise_seed: int) -> Observation:
    """Render, add noise, filter and deproject one frame; gravity comes from a
    synthetic accelerometer reading through the configured IMU mount."""
    frame, lab = render_depth(scene, pose, cfg.intrinsics, return_labels=True)
    frame = filter_invalid(apply_noise(frame, cfg.noise.with_seed(noise_seed)))
    imu = synth_imu(pose, scene.gravity, cfg.imu_to_camera)
    gravity = estimate_gravity([imu], cfg.imu_to_camera)
    return Observation(deproject(frame), gravity, lab[frame.valid])


def _report(name: str, cfg: HarnessConfig, seed: int, trials: int, rows: list, aggregates: dict,
            **extra) -> dict:
    return {"experiment": name, "version": REPORT_VERSION, "backend": BACKEND, "seed": seed,
            "trials": trials, "config": cfg.to_dict(), **extra, "rows": rows,
            "aggregates": aggregates}


# ---------------------------------------------------------------------------
# mode accuracy


def mode_accuracy(cfg: HarnessConfig, seed: int = 0, trials: int = 200,
                  kinds=tuple(SceneKind)) -> dict:
    """Per-frame mode classification over ``trials`` standard scenes per kind."""
    rows = []
    t0 = time.perf_counter()
    for kind in kinds:
        kind = SceneKind(kind)
        for t in range(trials):
            scene_seed = seed + t
            scene = standard_scenes(kind, scene_seed)
            obs = observe(scene, scene.labels.camera, cfg, trial_seed(scene_seed, 7))
            dec = detect_mode(obs.cloud, obs.gravity, cfg.detection)
            rows.append({"kind": kind.value, "trial": t, "scene_seed": scene_seed,
                         "points": int(len(obs.cloud)), "mode": dec.mode.value,
                         "correct": dec.mode.value == kind.value,
                         "confidence": round(dec.confidence, 6), "objects": len(dec.objects)})
    accuracy, confusion = {}, {}
    for kind in kinds:
        kind = SceneKind(kind)
        sub = [r for r in rows if r["kind"] == kind.value]
        accuracy[kind.value] = sum(r["correct"] for r in sub) / len(sub)
        confusion[kind.value] = {m.value: sum(r["mode"] == m.value for r in sub) for m in Mode}
    return _report("mode-accuracy", cfg, seed, trials, rows,
                   {"accuracy": accuracy, "confusion": confusion,
                    "elapsed_s": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# grasp accuracy


def _pair_error(est_a, est_b, true_a, true_b) -> float:
    """Mean point distance under the better of the two pairings."""
    direct = np.linalg.norm(est_a - true_a) + np.linalg.norm(est_b - true_b)
    swapped = np.linalg.norm(est_a - true_b) + np.linalg.norm(est_b - true_a)
    return 0.5 * float(min(direct, swapped))


def grasp_accuracy(cfg: HarnessConfig, seed: int = 0, trials: int = 50, start: float = 0.80,
                   end: float = 0.30, steps: int = 11) -> dict:
    """Top-down approach toward an eraser-sized box.

    ``width_error`` compares the distance between the two estimated grasp
    points with the true opposing-face distance, like a caliper check;
    ``point_error`` is the mean 3D distance of each estimated point to the
    matching true mid-side point.
    """
    rows = []
    for t in range(trials):
        scene_seed = seed + t
        scene = eraser_scene(scene_seed)
        truth = scene.labels.objects[0]
        true_width = float(np.linalg.norm(truth.grasp_a - truth.grasp_b))
        top = truth.center + truth.extents[2] * WORLD_UP
        for step, tp in enumerate(make_approach(start, end, steps, top)):
            obs = observe(scene, tp.pose, cfg, trial_seed(scene_seed, step, 11))
            dec = detect_mode(obs.cloud, obs.gravity, cfg.detection)
            row = {"trial": t, "scene_seed": scene_seed, "range_m": round(tp.range, 6),
                   "mode": dec.mode.value, "detected": False, "width_m": None,
                   "width_error_m": None, "point_error_m": None}
            center_c = tp.pose.apply(truth.center)
            if dec.mode is Mode.TABLETOP and dec.objects:
                obj = min(dec.objects, key=lambda o: np.linalg.norm(o.box.center - center_c))
                g = obj.grasp
                row.update(detected=True, width_m=g.width,
                           width_error_m=abs(g.width - true_width),
                           point_error_m=_pair_error(g.point_a, g.point_b,
                                                    tp.pose.apply(truth.grasp_a),
                                                    tp.pose.apply(truth.grasp_b)))
            rows.append(row)
    return _report("grasp-accuracy", cfg, seed, trials, rows, grasp_aggregates(rows))


def grasp_aggregates(rows: list) -> dict:
    ranges = sorted({r["range_m"] for r in rows}, reverse=True)
    table = []
    for rng in ranges:
        sub = [r for r in rows if r["range_m"] == rng]
        hit = [r for r in sub if r["detected"]]
        table.append({
            "range_m": rng,
            "detection_rate": len(hit) / len(sub),
            "mean_width_error_m": float(np.mean([r["width_error_m"] for r in hit])) if hit else None,
            "mean_point_error_m": float(np.mean([r["point_error_m"] for r in hit])) if hit else None,
        })
    usable = [e for e in table if e["mean_width_error_m"] is not None]
    x = np.array([e["range_m"] for e in usable])
    near = [r for r in rows if r["detected"] and r["range_m"] == min(ranges)]
    half = 0.5 * (min(ranges) + max(ranges))
    hits = [r for r in rows if r["detected"]]
    out = {"by_range": table, "detection_rate": len(hits) / len(rows), "near_range_m": min(ranges)}
    for metric in ("width", "point"):
        key = f"{metric}_error_m"
        y = np.array([e[f"mean_{key}"] for e in usable])
        out[f"mean_{key}"] = float(np.mean([r[key] for r in hits]))
        out[f"near_mean_{key}"] = float(np.mean([r[key] for r in near]))
        out[f"near_half_mean_{key}"] = float(np.mean([r[key] for r in hits if r["range_m"] < half]))
        out[f"far_half_mean_{key}"] = float(np.mean([r[key] for r in hits if r["range_m"] > half]))
        out[f"slope_{metric}_error_per_m"] = float(np.polyfit(x, y, 1)[0]) if len(x) >= 2 else None
    return out


# ---------------------------------------------------------------------------
# plane separability


def two_planes_found(obs: Observation, cfg: HarnessConfig, max_planes: int = 3,
                     coverage: float = 0.5) -> bool:
    """True when two different extracted planes each claim at least
    ``coverage`` of the table's and the book's visible points."""
    models = extract_planes(obs.cloud, cfg.detection.ransac, max_planes)
    owner = np.full(len(obs.cloud), -1)
    for k, m in enumerate(models):
        owner[m.inlier_indices] = k

    def majority(label):
        idx = obs.labels == label
        if not np.any(idx):
            return None
        counts = np.bincount(owner[idx] + 1, minlength=len(models) + 1)[1:]
        if not len(counts) or counts.max() < coverage * np.count_nonzero(idx):
            return None
        return int(np.argmax(counts))

    table, book = majority(0), majority(1)
    return table is not None and book is not None and table != book


def plane_separability(cfg: HarnessConfig, seed: int = 0, trials: int = 100,
                       gaps=DEFAULT_GAPS) -> dict:
    rows = []
    for gap in gaps:
        for t in range(trials):
            scene_seed = seed + t
            scene = stacked_scene(gap, scene_seed)
            obs = observe(scene, scene.labels.camera, cfg,
                          trial_seed(scene_seed, round(gap * 1e5), 13))
            rows.append({"gap_m": gap, "trial": t, "scene_seed": scene_seed,
                         "two_planes": two_planes_found(obs, cfg)})
    rate = {}
    for gap in gaps:
        sub = [r["two_planes"] for r in rows if r["gap_m"] == gap]
        rate[f"{gap:.4f}"] = sum(sub) / len(sub)
    min_gap = None
    for gap in sorted(gaps, reverse=True):
        if rate[f"{gap:.4f}"] >= 0.95:
            min_gap = gap
        else:
            break
    return _report("plane-separability", cfg, seed, trials, rows,
                   {"two_plane_rate": rate, "min_distinguishable_gap_m": min_gap})


# ---------------------------------------------------------------------------
# occlusion


def ransac_iterations(inlier_fraction: float, confidence: float = 0.999) -> int:
    """Hypotheses needed to draw one all-inlier triple with ``confidence``."""
    return math.ceil(math.log(1 - confidence) / math.log(1 - inlier_fraction ** 3))


# a table 80% hidden keeps at most ~20% of the points; size for 15%
OCCLUSION_ITERATIONS = ransac_iterations(0.15)


def occlusion(cfg: HarnessConfig, seed: int = 0, trials: int = 100, coverage: float = 0.80,
              max_normal_error_deg: float = 2.0,
              max_iterations: int | None = OCCLUSION_ITERATIONS) -> dict:
    """Table mostly hidden behind clutter; is the table plane still found?

    A trial succeeds when the returned plane is the table (most of its
    inliers are table points) and its normal is within
    ``max_normal_error_deg`` of the truth. The configured iteration budget is
    replaced by ``max_iterations`` (if given), and the success rate under the
    configured budget is reported alongside.
    """
    base = cfg.detection.ransac
    params = replace(base, max_iterations=max_iterations) if max_iterations else base
    rows = []
    for t in range(trials):
        scene_seed = seed + t
        scene = occluded_table_scene(scene_seed, coverage, cfg.intrinsics)
        pose = scene.labels.camera
        obs = observe(scene, pose, cfg, trial_seed(scene_seed, 17))
        n_true, d_true = world_plane_to_camera(*scene.labels.planes[0], pose)
        row = {"trial": t, "scene_seed": scene_seed, "clutter_boxes": len(scene.primitives) - 1,
               "table_fraction": float(np.mean(obs.labels == 0))}
        for tag, p in (("", params), ("configured_", base)):
            plane = fit_plane_ransac(obs.cloud, p)
            res = {"detected": plane is not None, "normal_error_deg": None,
                   "offset_error_m": None, "table_inlier_fraction": None, "success": False}
            if plane is not None:
                dot = float(plane.normal @ n_true)
                err = math.degrees(math.acos(min(abs(dot), 1.0)))
                on_table = float(np.mean(obs.labels[plane.inlier_indices] == 0))
                res.update(normal_error_deg=err,
                           offset_error_m=abs(plane.d - math.copysign(1.0, dot) * d_true),
                           table_inlier_fraction=on_table,
                           success=on_table > 0.5 and err <= max_normal_error_deg)
            row.update({tag + k: v for k, v in res.items()})
        rows.append(row)
    ok = [r for r in rows if r["success"]]
    return _report("occlusion", cfg, seed, trials, rows, {
        "success_rate": len(ok) / len(rows),
        "configured_success_rate": sum(r["configured_success"] for r in rows) / len(rows),
        "max_normal_error_deg": max((r["normal_error_deg"] for r in ok), default=None),
        "median_offset_error_m": float(np.median([r["offset_error_m"] for r in ok])) if ok else None,
        "mean_table_fraction": float(np.mean([r["table_fraction"] for r in rows])),
    }, coverage=coverage, max_iterations=params.max_iterations)


# ---------------------------------------------------------------------------
# throughput


def throughput(cfg: HarnessConfig, frames: int = 300, warmup: int = 3) -> dict:
    """Time the per-frame pipeline (filter, deproject, gravity, detect) on one
    rendered cluttered scene. Rendering is outside the timed region."""
    if frames < 10:
        raise ValueError("frames must be >= 10")
    scene = cluttered_scene()
    pose = scene.labels.camera
    frame = apply_noise(render_depth(scene, pose, cfg.intrinsics), cfg.noise.with_seed(cfg.seed))
    imu = [synth_imu(pose, scene.gravity, cfg.imu_to_camera)]

    def run(timings):
        t0 = time.perf_counter()
        cloud = deproject(filter_invalid(frame))
        gravity = estimate_gravity(imu, cfg.imu_to_camera)
        timings["deproject"] = (time.perf_counter() - t0) * 1e3
        dec = detect_mode(cloud, gravity, cfg.detection, timings)
        timings["total"] = (time.perf_counter() - t0) * 1e3
        return dec

    for _ in range(warmup):
        run({})
    rows = []
    for i in range(frames):
        timings = {}
        dec = run(timings)
        rows.append({"frame": i, "mode": dec.mode.value, "objects": len(dec.objects),
                     "timings_ms": timings})
    total = np.array([r["timings_ms"]["total"] for r in rows])
    stages = sorted({k for r in rows for k in r["timings_ms"]} - {"total"})
    stage_mean = {s: float(np.mean([r["timings_ms"].get(s, 0.0) for r in rows])) for s in stages}
    agg = {
        "frames": frames,
        "mean_ms": float(total.mean()),
        "median_ms": float(np.median(total)),
        "p95_ms": float(np.percentile(total, 95)),
        "fps": float(1e3 / total.mean()),
        "fps_median": float(1e3 / np.median(total)),
        "stage_mean_ms": stage_mean,
        "modes": sorted({r["mode"] for r in rows}),
    }
    return _report("throughput", cfg, cfg.seed, frames, rows, agg,
                   image_size=[cfg.intrinsics.width, cfg.intrinsics.height])


def run_experiment(name: str, cfg: HarnessConfig, seed: int = 0, trials: int | None = None) -> dict:
    if name == "mode-accuracy":
        return mode_accuracy(cfg, seed, trials or 200)
    if name == "grasp-accuracy":
        return grasp_accuracy(cfg, seed, trials or 50)
    if name == "plane-separability":
        return plane_separability(cfg, seed, trials or 100)
    if name == "occlusion":
        return occlusion(cfg, seed, trials or 100)
    if name == "throughput":
        return throughput(cfg.with_seed(seed), trials or 300)
    raise ValueError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
