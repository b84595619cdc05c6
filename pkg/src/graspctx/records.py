"""JSON detection records, one per processed frame."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .modes import ModeDecision
from .orientation import GravityEstimate

SCHEMA_ID = "graspctx/detection-record/1"
SCHEMA_FILE = "detection_record.v1.json"


def load_schema() -> dict:
    return json.loads(resources.files("graspctx").joinpath("schema", SCHEMA_FILE).read_text())


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v).ravel()]


def decision_record(frame_id: str, decision: ModeDecision, gravity: GravityEstimate,
                    point_count: int, timings_ms: dict) -> dict:
    plane = None
    if decision.plane is not None:
        p = decision.plane
        plane = {"normal": _vec(p.normal), "d": float(p.d), "prominence": float(p.prominence),
                 "inlier_count": int(p.inlier_count),
                 "orientation": None if decision.plane_orientation is None
                 else decision.plane_orientation.value}
    objects = []
    for obj in decision.objects:
        g = obj.grasp
        objects.append({
            "cluster_size": int(obj.cluster.size),
            "centroid": _vec(obj.cluster.centroid),
            "box": {"center": _vec(obj.box.center), "axes": [_vec(a) for a in obj.box.axes],
                    "extents": _vec(obj.box.extents)},
            "grasp": {"point_a": _vec(g.point_a), "point_b": _vec(g.point_b), "axis": _vec(g.axis),
                      "width": float(g.width)},
        })
    return {"schema": SCHEMA_ID, "frame_id": frame_id, "status": "ok",
            "mode": decision.mode.value, "confidence": float(decision.confidence),
            "point_count": int(point_count), "gravity": _vec(gravity.direction),
            "plane": plane, "objects": objects,
            "timings_ms": {k: float(v) for k, v in timings_ms.items()}}


def error_record(frame_id: str, kind: str, message: str) -> dict:
    return {"schema": SCHEMA_ID, "frame_id": frame_id, "status": "error",
            "error": {"kind": kind, "message": message}}


def check_timings(record: dict) -> None:
    """Raise AssertionError unless timings are non-negative and the total
    covers every stage."""
    t = record.get("timings_ms")
    if t is None:
        return
    if any(v < 0 for v in t.values()):
        raise AssertionError(f"negative timing in {t}")
    stages = [v for k, v in t.items() if k != "total"]
    if stages and t["total"] < max(stages):
        raise AssertionError(f"total {t['total']} below a stage timing in {t}")


def dumps(record: dict, with_timings: bool = True) -> str:
    """Canonical single-line JSON (sorted keys, shortest round-trip floats)."""
    if not with_timings:
        record = {k: v for k, v in record.items() if k != "timings_ms"}
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)
