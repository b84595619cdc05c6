"""Flat ``key = value`` configuration for the command-line harness.

Blank lines and ``#`` comments are ignored. Every key is optional; unknown
keys and values that break a module invariant raise :class:`ConfigError`
naming the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .cloud import CameraIntrinsics, PathLike
from .errors import CloudIOError, ConfigError
from .modes import DetectionParams
from .orientation import RigidTransform
from .planes import RansacParams
from .scenegen import NoiseModel

# key -> (parser, description)
KEYS = {
    "distance_threshold_m": (float, "RANSAC inlier distance"),
    "max_iterations": (int, "RANSAC hypotheses per fit"),
    "min_inliers": (int, "smallest acceptable plane"),
    "prominence_threshold": (float, "outlier/inlier ratio at or below which a plane is prominent"),
    "seed": (int, "RANSAC and noise seed"),
    "orientation_tol_deg": (float, "horizontal/vertical tolerance"),
    "extrusion_height_m": (float, "height of the object search volume"),
    "cluster_tol_m": (float, "Euclidean clustering link distance"),
    "min_cluster_size": (int, "smallest kept cluster"),
    "pot_min_height_m": (float, "handle clearance above the surface"),
    "pot_max_minor_m": (float, "largest handle minor half-extent"),
    "noise_sigma_near_m": (float, "noise sigma at noise_range_near_m"),
    "noise_sigma_far_m": (float, "noise sigma at noise_range_far_m"),
    "noise_range_near_m": (float, "near noise anchor"),
    "noise_range_far_m": (float, "far noise anchor"),
    "width": (int, "image width in pixels"),
    "height": (int, "image height in pixels"),
    "fx": (float, "focal length x in pixels"),
    "fy": (float, "focal length y in pixels"),
    "cx": (float, "principal point x"),
    "cy": (float, "principal point y"),
    "min_range_m": (float, "nearest trusted depth"),
    "max_range_m": (float, "farthest trusted depth"),
    "imu_to_camera": (None, "12 numbers: row-major rotation then translation"),
}


@dataclass(frozen=True)
class HarnessConfig:
    detection: DetectionParams = field(default_factory=DetectionParams)
    noise: NoiseModel = field(default_factory=NoiseModel)
    intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    imu_to_camera: RigidTransform = field(default_factory=RigidTransform)

    @property
    def seed(self) -> int:
        return self.detection.ransac.rng_seed

    def with_seed(self, seed: int) -> HarnessConfig:
        ransac = replace(self.detection.ransac, rng_seed=int(seed))
        return replace(self, detection=replace(self.detection, ransac=ransac),
                       noise=self.noise.with_seed(int(seed)))

    def to_dict(self) -> dict:
        """Flat view using the file's key names."""
        p, r, n, k = self.detection, self.detection.ransac, self.noise, self.intrinsics
        return {
            "distance_threshold_m": r.distance_threshold,
            "max_iterations": r.max_iterations,
            "min_inliers": r.min_inliers,
            "prominence_threshold": r.prominence_threshold,
            "seed": r.rng_seed,
            "orientation_tol_deg": p.orientation_tol_deg,
            "extrusion_height_m": p.extrusion_height,
            "cluster_tol_m": p.cluster_tol,
            "min_cluster_size": p.min_cluster_size,
            "pot_min_height_m": p.pot_min_height,
            "pot_max_minor_m": p.pot_max_minor,
            "noise_sigma_near_m": n.sigma_near,
            "noise_sigma_far_m": n.sigma_far,
            "noise_range_near_m": n.range_near,
            "noise_range_far_m": n.range_far,
            "width": k.width,
            "height": k.height,
            "fx": k.fx,
            "fy": k.fy,
            "cx": k.cx,
            "cy": k.cy,
            "min_range_m": k.min_range,
            "max_range_m": k.max_range,
            "imu_to_camera": self.imu_to_camera.to_values(),
        }


def _parse_value(key: str, raw: str):
    parser = KEYS[key][0]
    try:
        if parser is None:
            return [float(v) for v in raw.replace(",", " ").split()]
        if parser is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return float(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None


def _build(kind, key_of: dict, values: dict, **kwargs):
    """Construct ``kind``; map a constructor ValueError back to a config key."""
    try:
        return kind(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        given = [k for k in key_of.values() if k in values]
        named = [k for attr, k in key_of.items() if attr in msg and k in values]
        raise ConfigError((named or given or [next(iter(key_of.values()))])[0], msg) from None


def config_from_dict(values: dict) -> HarnessConfig:
    """Build a validated config from flat key/value pairs (already parsed)."""
    for key in values:
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
    d = HarnessConfig().to_dict()
    d.update(values)

    ransac_keys = {"distance_threshold": "distance_threshold_m", "max_iterations": "max_iterations",
                   "min_inliers": "min_inliers", "prominence_threshold": "prominence_threshold",
                   "rng_seed": "seed"}
    ransac = _build(RansacParams, ransac_keys, values,
                    **{attr: d[key] for attr, key in ransac_keys.items()})
    det_keys = {"orientation_tol_deg": "orientation_tol_deg",
                "extrusion_height": "extrusion_height_m", "cluster_tol": "cluster_tol_m",
                "min_cluster_size": "min_cluster_size", "pot_min_height": "pot_min_height_m",
                "pot_max_minor": "pot_max_minor_m"}
    detection = _build(DetectionParams, det_keys, values, ransac=ransac,
                       **{attr: d[key] for attr, key in det_keys.items()})
    noise_keys = {"sigma_near": "noise_sigma_near_m", "sigma_far": "noise_sigma_far_m",
                  "range_near": "noise_range_near_m", "range_far": "noise_range_far_m"}
    noise = _build(NoiseModel, noise_keys, values, seed=d["seed"],
                   **{attr: d[key] for attr, key in noise_keys.items()})
    intr_keys = {"width": "width", "height": "height", "fx": "fx", "fy": "fy", "cx": "cx",
                 "cy": "cy", "min_range": "min_range_m", "max_range": "max_range_m"}
    intrinsics = _build(CameraIntrinsics, intr_keys, values,
                        **{attr: d[key] for attr, key in intr_keys.items()})
    try:
        imu = RigidTransform.from_values(d["imu_to_camera"])
    except ValueError as exc:
        raise ConfigError("imu_to_camera", str(exc)) from None
    return HarnessConfig(detection, noise, intrinsics, imu)


def parse_config(text: str) -> HarnessConfig:
    values = {}
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, raw = (s.strip() for s in line.split("=", 1))
        else:
            parts = line.split(None, 1)
            key, raw = parts[0], parts[1].strip() if len(parts) > 1 else ""
        if key not in KEYS:
            raise ConfigError(key, f"unknown key (line {no})")
        if key in values:
            raise ConfigError(key, f"given twice (line {no})")
        if not raw:
            raise ConfigError(key, f"missing value (line {no})")
        values[key] = _parse_value(key, raw)
    return config_from_dict(values)


def load_config(path: PathLike) -> HarnessConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CloudIOError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def format_config(cfg: HarnessConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, list):
            value = " ".join(f"{v:.17g}" for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
