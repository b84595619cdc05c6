"""Scene mode decision: prominent plane, its orientation, pot-handle fallback."""

from __future__ import annotations

import enum
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .orientation import GravityEstimate, PlaneOrientation, classify_plane_orientation
from .planes import PlaneModel, RansacParams, convex_hull, extrude_hull, fit_plane_ransac
from .segmentation import (Cluster, GraspEstimate, ObjectBox, cluster_in_volume,
                           detect_pot_handle, grasp_points, pca_box)


class Mode(str, enum.Enum):
    TABLETOP = "tabletop"
    DOORKNOB = "doorknob"
    POT_HANDLE = "pot_handle"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class DetectedObject:
    cluster: Cluster
    box: ObjectBox
    grasp: GraspEstimate


@dataclass(frozen=True)
class DetectionParams:
    ransac: RansacParams = field(default_factory=RansacParams)
    orientation_tol_deg: float = 15.0
    extrusion_height: float = 0.40
    cluster_tol: float = 0.02
    min_cluster_size: int = 30
    pot_min_height: float = 0.05
    pot_max_minor: float = 0.025

    def __post_init__(self):
        if not 0 < self.orientation_tol_deg < 45:
            raise ValueError("orientation_tol_deg must be in (0, 45)")
        if not self.extrusion_height > 0:
            raise ValueError("extrusion_height must be > 0")
        if not self.cluster_tol > 0:
            raise ValueError("cluster_tol must be > 0")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")
        if not self.pot_min_height > 0:
            raise ValueError("pot_min_height must be > 0")
        if not self.pot_max_minor > 0:
            raise ValueError("pot_max_minor must be > 0")


@dataclass(frozen=True)
class ModeDecision:
    mode: Mode
    confidence: float
    plane: PlaneModel | None = None
    objects: tuple[DetectedObject, ...] = ()
    plane_orientation: PlaneOrientation | None = None


def plane_confidence(prominence: float, threshold: float) -> float:
    """``clamp(1 - prominence / threshold, 0, 1)``."""
    if threshold <= 0:
        return 1.0 if prominence <= 0 else 0.0
    return float(min(max(1.0 - prominence / threshold, 0.0), 1.0))


def supported_objects(cloud: np.ndarray, plane: PlaneModel,
                      params: DetectionParams) -> tuple[DetectedObject, ...]:
    """Objects standing on ``plane``: hull, extrude, cluster, box, grasp."""
    base = convex_hull(plane, cloud)
    prism = extrude_hull(base, params.extrusion_height, plane.distance_threshold)
    found = []
    for cluster in cluster_in_volume(cloud, prism, params.cluster_tol, params.min_cluster_size):
        try:
            box = pca_box(cluster, cloud, plane)
            grasp = grasp_points(box, cluster, cloud, plane)
        except GeometryError:
            continue
        found.append(DetectedObject(cluster, box, grasp))
    return tuple(found)


@contextmanager
def _timed(timings: dict | None, stage: str):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        if timings is not None:
            timings[stage] = timings.get(stage, 0.0) + (time.perf_counter() - t0) * 1e3


def detect_mode(cloud: np.ndarray, gravity: GravityEstimate,
                params: DetectionParams = DetectionParams(),
                timings: dict | None = None) -> ModeDecision:
    """Classify a scene and localise its graspable objects.

    A plane counts as prominent when its outlier/inlier ratio is at most the
    configured threshold. Prominent horizontal planes give tabletop mode,
    prominent vertical planes doorknob mode, oblique ones unknown. Without a
    prominent plane the pot-handle detector runs on the whole cloud.

    Per-stage wall times in milliseconds are added to ``timings`` when given.
    """
    cloud = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    if len(cloud) < 3:
        return ModeDecision(Mode.UNKNOWN, 0.0)
    try:
        with _timed(timings, "plane"):
            plane = fit_plane_ransac(cloud, params.ransac)
        thr = params.ransac.prominence_threshold
        orientation = None
        if plane is not None:
            with _timed(timings, "orientation"):
                orientation = classify_plane_orientation(
                    plane.normal, gravity, params.orientation_tol_deg).orientation
        if plane is not None and plane.prominence <= thr:
            if orientation is PlaneOrientation.OBLIQUE:
                return ModeDecision(Mode.UNKNOWN, 0.0, plane, (), orientation)
            with _timed(timings, "objects"):
                objects = supported_objects(cloud, plane, params)
            mode = Mode.TABLETOP if orientation is PlaneOrientation.HORIZONTAL else Mode.DOORKNOB
            return ModeDecision(mode, plane_confidence(plane.prominence, thr), plane, objects,
                                orientation)

        with _timed(timings, "pot_handle"):
            # a non-prominent plane is often the pot lid or wall, so heights
            # are measured from the floor of the cloud instead
            hit = detect_pot_handle(
                cloud, None, params.pot_min_height, params.pot_max_minor,
                params.cluster_tol, params.min_cluster_size, up=-gravity.direction)
        if hit is None:
            return ModeDecision(Mode.UNKNOWN, 0.0, plane, (), orientation)
        off_plane = len(cloud) - (plane.inlier_count if plane is not None else 0)
        confidence = min(hit.cluster.size / max(off_plane, 1), 1.0)
        return ModeDecision(Mode.POT_HANDLE, float(confidence), plane,
                            (DetectedObject(hit.cluster, hit.box, hit.grasp),), orientation)
    except GeometryError:
        return ModeDecision(Mode.UNKNOWN, 0.0)

