"""Command-line harness: ``graspctx {detect,experiment,bench,gen}``.

Exit codes: 0 success, 1 usage or invalid configuration, 2 input/output or
parse failure, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from contextlib import contextmanager

from . import __version__
from .cloud import deproject, filter_invalid, load_frame, store_frame
from .config import HarnessConfig, load_config
from .errors import CloudIOError, ConfigError, FormatError, GravityEstimationError
from .experiments import EXPERIMENTS, run_experiment, throughput, trial_seed
from .modes import detect_mode
from .orientation import estimate_gravity, load_imu, store_imu
from .records import check_timings, decision_record, dumps, error_record
from .scenegen import SceneKind, apply_noise, render_depth, standard_scenes, store_scene, synth_imu

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for I/O here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--output", help="output path (default: standard output)")

    parser = _Parser(prog="graspctx", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", parents=[common], help="classify depth frames (JSON lines)")
    p.add_argument("frames", nargs="*", help="depth frame files, processed in order")
    p.add_argument("--imu", required=True, help="accelerometer samples shared by all frames")

    p = sub.add_parser("experiment", parents=[common], help="run a seeded synthetic experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--trials", type=_positive_int, help="trials (per kind / gap where relevant)")

    p = sub.add_parser("bench", parents=[common], help="time detection on the cluttered scene")
    p.add_argument("--trials", "--frames", dest="trials", type=int, default=300,
                   help="timed frames, at least 10 (default 300)")

    p = sub.add_parser("gen", parents=[common], help="write standard scene frames to a directory")
    p.add_argument("--kind", choices=[k.value for k in SceneKind] + ["all"], default="all")
    p.add_argument("--trials", type=_positive_int, default=1, help="scenes per kind")
    p.add_argument("--no-noise", action="store_true", help="write noiseless frames")
    return parser


def _config(args) -> HarnessConfig:
    cfg = load_config(args.config) if args.config else HarnessConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


@contextmanager
def _open_output(path):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8") as fh:
        yield fh


def _write_json(doc: dict, path) -> None:
    with _open_output(path) as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")


def process_frame(path: str, imu, cfg: HarnessConfig, frame_id: str | None = None) -> dict:
    """Detection record for one frame file; load and parse failures become
    error records."""
    frame_id = frame_id or os.path.basename(path)
    t0 = time.perf_counter()
    try:
        frame = load_frame(path, cfg.intrinsics.min_range, cfg.intrinsics.max_range)
    except CloudIOError as exc:
        return error_record(frame_id, "io", str(exc))
    except FormatError as exc:
        return error_record(frame_id, "format", str(exc))
    t1 = time.perf_counter()
    cloud = deproject(filter_invalid(frame))
    try:
        gravity = estimate_gravity(imu, cfg.imu_to_camera)
    except GravityEstimationError as exc:
        return error_record(frame_id, "gravity", str(exc))
    timings = {"load": (t1 - t0) * 1e3, "deproject": (time.perf_counter() - t1) * 1e3}
    decision = detect_mode(cloud, gravity, cfg.detection, timings)
    timings["total"] = (time.perf_counter() - t0) * 1e3
    record = decision_record(frame_id, decision, gravity, len(cloud), timings)
    check_timings(record)
    return record


def cmd_detect(args) -> int:
    cfg = _config(args)
    imu = load_imu(args.imu)
    status = EXIT_OK
    with _open_output(args.output) as out:
        for path in args.frames:
            record = process_frame(path, imu, cfg)
            if record["status"] != "ok":
                status = EXIT_IO
                print(f"graspctx: {path}: {record['error']['message']}", file=sys.stderr)
            out.write(dumps(record) + "\n")
            out.flush()
    return status


def cmd_experiment(args) -> int:
    cfg = _config(args)
    seed = args.seed if args.seed is not None else cfg.seed
    _write_json(run_experiment(args.name, cfg, seed, args.trials), args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.trials < 10:
        raise UsageError("bench needs at least 10 frames")
    report = throughput(_config(args), args.trials)
    agg = report["aggregates"]
    stage_sum = sum(agg["stage_mean_ms"].values())
    # stage timers nest inside the total, so their sum cannot exceed it
    if stage_sum > agg["mean_ms"] * 1.001 + 1e-3:
        raise AssertionError(f"stage means {stage_sum:.3f} ms exceed total {agg['mean_ms']:.3f} ms")
    _write_json(report, args.output)
    print(f"graspctx bench: median {agg['median_ms']:.2f} ms, {agg['fps_median']:.1f} fps "
          f"({report['backend']} kernels)", file=sys.stderr)
    return EXIT_OK


def cmd_gen(args) -> int:
    if not args.output:
        raise UsageError("gen needs --output DIR")
    cfg = _config(args)
    base = args.seed if args.seed is not None else cfg.seed
    os.makedirs(args.output, exist_ok=True)
    kinds = list(SceneKind) if args.kind == "all" else [SceneKind(args.kind)]
    for kind in kinds:
        for t in range(args.trials):
            seed = base + t
            scene = standard_scenes(kind, seed)
            pose = scene.labels.camera
            frame = render_depth(scene, pose, cfg.intrinsics)
            if not args.no_noise:
                frame = apply_noise(frame, cfg.noise.with_seed(trial_seed(seed, 7)))
            stem = os.path.join(args.output, f"{kind.value}_{seed:04d}")
            store_frame(frame, stem + ".frame")
            store_imu([synth_imu(pose, scene.gravity, cfg.imu_to_camera)], stem + ".imu")
            store_scene(scene, stem + ".scene")
            print(stem + ".frame")
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "experiment": cmd_experiment, "bench": cmd_bench,
            "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"graspctx: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"graspctx: {exc}", file=sys.stderr)
        return EXIT_IO
    except AssertionError as exc:
        print(f"graspctx: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
