"""Synthetic scenes and a simulated depth camera.

World frame: z up, gravity along -z. Camera poses map world points into the
camera frame (x right, y down, z forward).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import kernels
from .cloud import CameraIntrinsics, DepthFrame, PathLike
from .errors import CloudIOError, SceneFormatError
from .orientation import G, ImuSample, RigidTransform, rotation_about

CameraPose = RigidTransform

WORLD_UP = np.array([0.0, 0.0, 1.0])
WORLD_GRAVITY = np.array([0.0, 0.0, -1.0])


# ---------------------------------------------------------------------------
# primitives


def _check_rotation(r) -> np.ndarray:
    return RigidTransform(r).rotation


@dataclass(frozen=True)
class PlaneSlab:
    """Finite rectangle; ``rotation`` columns are (width axis, height axis, normal)."""

    center: np.ndarray
    rotation: np.ndarray
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("slab dimensions must be > 0")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "rotation", _check_rotation(self.rotation))

    @property
    def normal(self) -> np.ndarray:
        return self.rotation[:, 2]

    def packed(self) -> np.ndarray:
        return np.concatenate([[kernels.PRIM_SLAB], self.center, self.rotation.ravel(),
                               [self.width / 2, self.height / 2, 0.0]])


@dataclass(frozen=True)
class Box:
    """Oriented box; ``extents`` are full side lengths along the rotation columns."""

    center: np.ndarray
    rotation: np.ndarray
    extents: np.ndarray

    def __post_init__(self):
        ext = np.asarray(self.extents, dtype=np.float64).reshape(3)
        if not np.all(ext > 0):
            raise ValueError("box extents must be > 0")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "rotation", _check_rotation(self.rotation))
        object.__setattr__(self, "extents", ext)

    def packed(self) -> np.ndarray:
        return np.concatenate([[kernels.PRIM_BOX], self.center, self.rotation.ravel(),
                               self.extents / 2])


@dataclass(frozen=True)
class Cylinder:
    """Solid capped cylinder around the segment ``p0 -> p1``."""

    p0: np.ndarray
    p1: np.ndarray
    radius: float

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=np.float64)
        p1 = np.asarray(self.p1, dtype=np.float64)
        if not self.radius > 0 or not np.linalg.norm(p1 - p0) > 0:
            raise ValueError("cylinder radius and length must be > 0")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.p1 - self.p0))

    @property
    def axis(self) -> np.ndarray:
        return (self.p1 - self.p0) / self.length

    def packed(self) -> np.ndarray:
        z = self.axis
        x = _any_perpendicular(z)
        rot = np.column_stack([x, np.cross(z, x), z])
        return np.concatenate([[kernels.PRIM_CYLINDER], self.p0, rot.ravel(),
                               [self.radius, self.length, 0.0]])


ScenePrimitive = Union[PlaneSlab, Box, Cylinder]


def _any_perpendicular(z):
    ref = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = ref - (ref @ z) * z
    return x / np.linalg.norm(x)


def yaw_rotation(yaw: float) -> np.ndarray:
    return rotation_about(WORLD_UP, yaw)


# ---------------------------------------------------------------------------
# scene description


class SceneKind(str, enum.Enum):
    TABLETOP = "tabletop"
    DOORKNOB = "doorknob"
    POT_HANDLE = "pot_handle"


@dataclass(frozen=True)
class TrueObject:
    """Ground-truth object box (world frame) and its opposition grasp pair."""

    center: np.ndarray
    axes: np.ndarray  # rows: major, minor, support normal
    extents: np.ndarray  # half lengths
    grasp_a: np.ndarray
    grasp_b: np.ndarray

    @property
    def width(self) -> float:
        return float(np.linalg.norm(self.grasp_a - self.grasp_b))


@dataclass(frozen=True)
class SceneLabels:
    mode: str
    planes: tuple = ()  # ((normal, d), ...) world frame, normal . p + d = 0
    objects: tuple = ()  # TrueObject, ...
    camera: CameraPose | None = None  # the canonical viewpoint for this scene


@dataclass(frozen=True)
class SceneSpec:
    primitives: tuple
    gravity: np.ndarray = field(default_factory=lambda: WORLD_GRAVITY.copy())
    labels: SceneLabels = field(default_factory=lambda: SceneLabels("unknown"))

    def packed(self) -> np.ndarray:
        if not self.primitives:
            return np.empty((0, kernels.PRIM_ROW))
        return np.vstack([p.packed() for p in self.primitives])


# ---------------------------------------------------------------------------
# cameras


def look_at(eye, target, up=WORLD_UP, roll: float = 0.0) -> CameraPose:
    """World-to-camera pose with the optical axis through ``target``.

    ``roll`` (radians) rotates the image about the optical axis.
    """
    eye = np.asarray(eye, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - eye
    z /= np.linalg.norm(z)
    up = np.asarray(up, dtype=np.float64)
    x = np.cross(z, up)
    if np.linalg.norm(x) < 1e-9:
        # looking straight along up: pick image x along world +x
        x = np.array([1.0, 0.0, 0.0]) - z[0] * z
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    rot = np.vstack([x, y, z])
    if roll:
        rot = rotation_about([0, 0, 1], roll) @ rot
    return RigidTransform(rot, -rot @ eye)


def camera_center(pose: CameraPose) -> np.ndarray:
    return -pose.rotation.T @ pose.translation


def optical_axis(pose: CameraPose) -> np.ndarray:
    return pose.rotation[2].copy()


# ---------------------------------------------------------------------------
# rendering and noise


def render_depth(scene: SceneSpec, pose: CameraPose,
                 intrinsics: CameraIntrinsics = CameraIntrinsics(),
                 return_labels: bool = False):
    """Exact z-depth of the first primitive hit per pixel.

    Pixels with no hit, or whose hit lies outside the sensor range, are
    invalid. With ``return_labels`` the per-pixel primitive index (-1 for no
    hit) is returned as well.
    """
    rays = intrinsics.pixel_rays()
    dirs = rays @ pose.rotation  # R^T d for each row
    origin = camera_center(pose)
    t, lab = kernels.raycast(origin, dirs, scene.packed())
    shape = (intrinsics.height, intrinsics.width)
    depth = t.reshape(shape)
    valid = np.isfinite(depth) & (depth >= intrinsics.min_range) & (depth <= intrinsics.max_range)
    frame = DepthFrame(intrinsics, np.where(valid, depth, np.nan), valid)
    if return_labels:
        return frame, lab.reshape(shape)
    return frame


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian range noise whose sigma is linear in depth between two anchors
    and held constant outside them."""

    sigma_near: float = 0.005
    sigma_far: float = 0.008
    range_near: float = 0.30
    range_far: float = 0.80
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.sigma_near <= self.sigma_far:
            raise ValueError("need 0 <= sigma_near <= sigma_far")
        if not self.range_near < self.range_far:
            raise ValueError("need range_near < range_far")

    def sigma(self, depth) -> np.ndarray:
        return np.interp(depth, [self.range_near, self.range_far],
                         [self.sigma_near, self.sigma_far])

    def with_seed(self, seed: int) -> NoiseModel:
        return NoiseModel(self.sigma_near, self.sigma_far, self.range_near, self.range_far, seed)


def apply_noise(frame: DepthFrame, model: NoiseModel) -> DepthFrame:
    """Add independent Gaussian noise to every valid pixel.

    One normal variate is drawn per pixel in row-major order, valid or not, so
    the stream consumed is independent of the scene content.
    """
    rng = np.random.default_rng(model.seed)
    z = rng.standard_normal(frame.depth.shape)
    d = frame.depth
    noisy = np.where(frame.valid, d + model.sigma(np.where(frame.valid, d, 0.0)) * z, d)
    return DepthFrame(frame.intrinsics, noisy, frame.valid)


# ---------------------------------------------------------------------------
# IMU and trajectories


def gravity_in_camera(pose: CameraPose, world_gravity=WORLD_GRAVITY) -> np.ndarray:
    g = np.asarray(world_gravity, dtype=np.float64)
    return pose.rotation @ (g / np.linalg.norm(g))


def synth_imu(pose: CameraPose, world_gravity=WORLD_GRAVITY,
              imu_to_camera: RigidTransform = RigidTransform()) -> ImuSample:
    """Quasi-static accelerometer reading (gravity-pointing, 9.81 m/s^2)."""
    g_cam = gravity_in_camera(pose, world_gravity)
    return ImuSample(G * (imu_to_camera.rotation.T @ g_cam), np.zeros(3))


@dataclass(frozen=True)
class TrajectoryPoint:
    time: float
    pose: CameraPose
    range: float


def make_approach(start_range: float, end_range: float, steps: int, target,
                  direction=(0.0, 0.0, -1.0), rate_hz: float = 60.0) -> list[TrajectoryPoint]:
    """Straight approach toward ``target`` along the unit ``direction`` (top
    down by default), ranges evenly spaced from ``start_range`` to
    ``end_range``."""
    if not start_range > end_range > 0:
        raise ValueError("need start_range > end_range > 0")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    target = np.asarray(target, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)
    out = []
    for i, r in enumerate(np.linspace(start_range, end_range, steps)):
        eye = target - r * direction
        out.append(TrajectoryPoint(i / rate_hz, look_at(eye, target), float(r)))
    return out


# ---------------------------------------------------------------------------
# standard scenes


def _box_object(center_xy, yaw, dims, ground: float = 0.0) -> tuple[Box, TrueObject]:
    """Box resting on a horizontal surface; ``dims`` = (length, width, height)."""
    length, width, height = dims
    rot = yaw_rotation(yaw)
    center = np.array([center_xy[0], center_xy[1], ground + height / 2])
    box = Box(center, rot, [length, width, height])
    major, minor = rot[:, 0], rot[:, 1]
    truth = TrueObject(center, np.vstack([major, minor, WORLD_UP]),
                       np.array([length, width, height]) / 2,
                       center + minor * width / 2, center - minor * width / 2)
    return box, truth


def _horizontal_slab(width, depth, center=(0.0, 0.0, 0.0), yaw=0.0) -> PlaneSlab:
    return PlaneSlab(np.asarray(center, dtype=np.float64), yaw_rotation(yaw), width, depth)


def _place_footprints(rng, count, half_region, dims_list, gap):
    """Rejection-sample non-overlapping centres using bounding circles."""
    placed = []
    for dims in dims_list[:count]:
        radius = 0.5 * math.hypot(dims[0], dims[1])
        for _ in range(200):
            c = rng.uniform(-half_region, half_region, size=2)
            if all(np.linalg.norm(c - pc) >= radius + pr + gap for pc, pr in placed):
                placed.append((c, radius))
                break
    return [c for c, _ in placed]


def tabletop_scene(rng: np.random.Generator) -> SceneSpec:
    slab = _horizontal_slab(rng.uniform(1.0, 1.4), rng.uniform(0.7, 0.9))
    count = int(rng.integers(1, 5))
    dims_list = []
    for _ in range(count):
        e = np.sort(rng.uniform(0.04, 0.15, size=2))[::-1]
        dims_list.append((e[0], e[1], rng.uniform(0.04, 0.15)))
    centres = _place_footprints(rng, count, 0.14, dims_list, gap=0.05)
    prims: list = [slab]
    objects = []
    for c, dims in zip(centres, dims_list):
        box, truth = _box_object(c, rng.uniform(0, math.pi), dims)
        prims.append(box)
        objects.append(truth)
    target = np.array([*rng.uniform(-0.03, 0.03, size=2), 0.0])
    dist = rng.uniform(0.45, 0.75)
    elev = math.radians(rng.uniform(50, 85))
    azim = rng.uniform(0, 2 * math.pi)
    eye = target + dist * np.array([math.cos(elev) * math.cos(azim),
                                    math.cos(elev) * math.sin(azim), math.sin(elev)])
    pose = look_at(eye, target, roll=math.radians(rng.uniform(-10, 10)))
    labels = SceneLabels(SceneKind.TABLETOP.value, ((WORLD_UP.copy(), 0.0),), tuple(objects), pose)
    return SceneSpec(tuple(prims), WORLD_GRAVITY.copy(), labels)


def doorknob_scene(rng: np.random.Generator) -> SceneSpec:
    normal = np.array([1.0, 0.0, 0.0])
    door_rot = np.column_stack([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], normal])
    door = PlaneSlab(np.array([0.0, 0.0, 1.0]), door_rot, rng.uniform(0.8, 0.95), 2.0)
    radius = rng.uniform(0.02, 0.03)
    protrusion = rng.uniform(0.04, 0.06)
    base = np.array([0.0, rng.uniform(-0.3, 0.3), rng.uniform(0.9, 1.05)])
    knob = Cylinder(base, base + protrusion * normal, radius)
    mid = base + 0.5 * protrusion * normal
    side = np.array([0.0, 1.0, 0.0])
    truth = TrueObject(mid, np.vstack([[0.0, 0.0, 1.0], side, normal]),
                       np.array([radius, radius, protrusion / 2]),
                       mid + radius * side, mid - radius * side)
    dist = rng.uniform(0.30, 0.60)
    azim = math.radians(rng.uniform(-30, 30))
    elev = math.radians(rng.uniform(-20, 20))
    tip = base + protrusion * normal
    eye = tip + dist * np.array([math.cos(elev) * math.cos(azim),
                                 math.cos(elev) * math.sin(azim), math.sin(elev)])
    pose = look_at(eye, tip, roll=math.radians(rng.uniform(-10, 10)))
    labels = SceneLabels(SceneKind.DOORKNOB.value, ((normal, 0.0),), (truth,), pose)
    return SceneSpec((door, knob), WORLD_GRAVITY.copy(), labels)


POT_HANDLE_GAP = 0.04


def pot_handle_scene(rng: np.random.Generator) -> SceneSpec:
    """Small stovetop patch with a lidded pot whose horizontal handle sticks
    out past the patch edge, seen from outside the stove.

    The handle sits ``POT_HANDLE_GAP`` clear of the pot wall (its mounting
    bracket is not modelled). Beyond the patch the floor is out of range.
    """
    pot_r = rng.uniform(0.06, 0.09)
    radius = rng.uniform(0.01, 0.02)
    length = rng.uniform(0.10, 0.15)
    elevation = rng.uniform(0.08, 0.15)
    pot_h = elevation + rng.uniform(0.03, 0.06)
    yaw = rng.uniform(0, 2 * math.pi)
    rot = yaw_rotation(yaw)
    out = rot[:, 0]
    size = rng.uniform(0.25, 0.35)
    slab_center = (pot_r + 0.03 - size / 2) * out
    slab = PlaneSlab(slab_center, rot, size, size)
    pot = Cylinder(np.zeros(3), np.array([0.0, 0.0, pot_h]), pot_r)
    p0 = (pot_r + POT_HANDLE_GAP) * out + np.array([0.0, 0.0, elevation])
    handle = Cylinder(p0, p0 + length * out, radius)
    mid = p0 + 0.5 * length * out
    side = np.cross(WORLD_UP, out)
    truth = TrueObject(mid, np.vstack([out, side, WORLD_UP]),
                       np.array([length / 2, radius, radius]),
                       mid + radius * side, mid - radius * side)
    dist = rng.uniform(0.20, 0.30)
    azim = yaw + math.radians(rng.uniform(-40, 40))
    elev = math.radians(rng.uniform(30, 55))
    eye = mid + dist * np.array([math.cos(elev) * math.cos(azim),
                                 math.cos(elev) * math.sin(azim), math.sin(elev)])
    pose = look_at(eye, mid, roll=math.radians(rng.uniform(-10, 10)))
    labels = SceneLabels(SceneKind.POT_HANDLE.value, ((WORLD_UP.copy(), 0.0),), (truth,), pose)
    return SceneSpec((slab, pot, handle), WORLD_GRAVITY.copy(), labels)


_BUILDERS = {
    SceneKind.TABLETOP: tabletop_scene,
    SceneKind.DOORKNOB: doorknob_scene,
    SceneKind.POT_HANDLE: pot_handle_scene,
}


def standard_scenes(kind: SceneKind | str, seed: int = 0) -> SceneSpec:
    """Randomised instance of one of the three reference scene types."""
    kind = SceneKind(kind)
    rng = np.random.default_rng([seed, list(SceneKind).index(kind)])
    return _BUILDERS[kind](rng)


def eraser_scene(seed: int = 0, dims=(0.125, 0.05, 0.03)) -> SceneSpec:
    """Single eraser-sized box centred on a table, for the approach experiment."""
    rng = np.random.default_rng([seed, 101])
    slab = _horizontal_slab(1.2, 1.2)
    box, truth = _box_object(rng.uniform(-0.005, 0.005, size=2), rng.uniform(0, math.pi), dims)
    labels = SceneLabels(SceneKind.TABLETOP.value, ((WORLD_UP.copy(), 0.0),), (truth,), None)
    return SceneSpec((slab, box), WORLD_GRAVITY.copy(), labels)


def stacked_scene(gap: float, seed: int = 0, book=(0.20, 0.15)) -> SceneSpec:
    """A book of thickness ``gap`` lying on a large table, viewed top-down
    from 0.5 m above the table."""
    rng = np.random.default_rng([seed, 102])
    slab = _horizontal_slab(2.0, 2.0)
    c = rng.uniform(-0.02, 0.02, size=2)
    box, truth = _box_object(c, rng.uniform(0, math.pi), (book[0], book[1], gap))
    pose = look_at(np.array([c[0], c[1], 0.5]), np.array([c[0], c[1], 0.0]))
    planes = ((WORLD_UP.copy(), 0.0), (WORLD_UP.copy(), -gap))
    labels = SceneLabels(SceneKind.TABLETOP.value, planes, (truth,), pose)
    return SceneSpec((slab, box), WORLD_GRAVITY.copy(), labels)


def occluded_table_scene(seed: int = 0, coverage: float = 0.80,
                         intrinsics: CameraIntrinsics = CameraIntrinsics(),
                         size=(0.03, 0.08), height=(0.0, 0.30)) -> SceneSpec:
    """Table seen top-down from 0.7 m through clutter: randomly tumbled boxes
    between the camera and the table are added until at least ``coverage``
    of the table's pixels are hidden.

    Boxes may interpenetrate each other and the table; only the visible
    surfaces matter for the depth image.
    """
    rng = np.random.default_rng([seed, 103])
    slab = _horizontal_slab(3.0, 3.0)
    jitter = rng.uniform(-0.02, 0.02, size=2)
    target = np.array([jitter[0], jitter[1], 0.0])
    pose = look_at(target + np.array([0.0, 0.0, 0.70]), target)
    origin = camera_center(pose)
    dirs = intrinsics.pixel_rays() @ pose.rotation
    t_table, _ = kernels.raycast(origin, dirs, slab.packed()[None])
    table = (t_table >= intrinsics.min_range) & (t_table <= intrinsics.max_range)
    seen = origin + t_table[table, None] * dirs[table]
    lo, hi = seen[:, :2].min(axis=0), seen[:, :2].max(axis=0)
    # a table pixel is hidden once any box is hit in front of it
    hidden = np.zeros(len(dirs), dtype=bool)
    boxes: list = []
    while np.count_nonzero(hidden & table) < coverage * np.count_nonzero(table):
        center = np.concatenate([rng.uniform(lo, hi), [rng.uniform(*height)]])
        box = Box(center, _random_rotation(rng), rng.uniform(*size, size=3))
        t_box, _ = kernels.raycast(origin, dirs, box.packed()[None])
        hidden |= t_box < t_table
        boxes.append(box)
    labels = SceneLabels(SceneKind.TABLETOP.value, ((WORLD_UP.copy(), 0.0),), (), pose)
    return SceneSpec((slab, *boxes), WORLD_GRAVITY.copy(), labels)


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation (QR of a Gaussian matrix, sign-fixed)."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def cluttered_scene() -> SceneSpec:
    """Fixed tabletop with four objects, used for throughput measurements."""
    slab = _horizontal_slab(1.2, 0.8)
    specs = [((-0.10, -0.06), 0.3, (0.12, 0.06, 0.08)),
             ((0.09, -0.07), 1.2, (0.10, 0.05, 0.12)),
             ((-0.08, 0.10), 2.0, (0.08, 0.07, 0.05)),
             ((0.12, 0.09), 0.7, (0.14, 0.05, 0.06))]
    prims: list = [slab]
    objects = []
    for c, yaw, dims in specs:
        box, truth = _box_object(c, yaw, dims)
        prims.append(box)
        objects.append(truth)
    eye = np.array([0.0, -0.30, 0.50])
    pose = look_at(eye, np.zeros(3))
    labels = SceneLabels(SceneKind.TABLETOP.value, ((WORLD_UP.copy(), 0.0),), tuple(objects), pose)
    return SceneSpec(tuple(prims), WORLD_GRAVITY.copy(), labels)


def world_plane_to_camera(normal, d, pose: CameraPose) -> tuple[np.ndarray, float]:
    """Transform ``n . p + d = 0`` from world into camera coordinates."""
    n_c = pose.rotation @ np.asarray(normal, dtype=np.float64)
    return n_c, float(d - n_c @ pose.translation)


# ---------------------------------------------------------------------------
# scene files


def _fmt(values) -> str:
    return " ".join(f"{float(v):.17g}" for v in values)


def store_scene(scene: SceneSpec, path: PathLike) -> None:
    """One record per line: ``gravity``, ``mode``, ``camera``, one line per
    primitive (``slab``, ``box``, ``cylinder``) and ``label`` lines."""
    lab = scene.labels
    lines = ["# graspctx scene v1", f"gravity {_fmt(scene.gravity)}", f"mode {lab.mode}"]
    if lab.camera is not None:
        lines.append(f"camera {_fmt(lab.camera.to_values())}")
    for p in scene.primitives:
        if isinstance(p, PlaneSlab):
            lines.append(f"slab {_fmt(p.center)} {_fmt(p.rotation.ravel())} {_fmt([p.width, p.height])}")
        elif isinstance(p, Box):
            lines.append(f"box {_fmt(p.center)} {_fmt(p.rotation.ravel())} {_fmt(p.extents)}")
        else:
            lines.append(f"cylinder {_fmt(p.p0)} {_fmt(p.p1)} {_fmt([p.radius])}")
    for n, d in lab.planes:
        lines.append(f"label plane {_fmt(n)} {_fmt([d])}")
    for o in lab.objects:
        lines.append("label object " + " ".join(
            _fmt(a) for a in (o.center, o.axes.ravel(), o.extents, o.grasp_a, o.grasp_b)))
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise CloudIOError(f"cannot write {path}: {exc}") from exc


def _floats(parts: Sequence[str], count: int, no: int) -> np.ndarray:
    if len(parts) != count:
        raise SceneFormatError(f"expected {count} numbers, got {len(parts)}", line=no)
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise SceneFormatError("non-numeric field", line=no) from None


def load_scene(path: PathLike) -> SceneSpec:
    try:
        with open(path, encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise CloudIOError(f"cannot read {path}: {exc}") from exc
    gravity = WORLD_GRAVITY.copy()
    mode = "unknown"
    camera = None
    prims: list = []
    planes: list = []
    objects: list = []
    for no, raw in enumerate(lines, start=1):
        ln = raw.strip()
        if not ln or ln.startswith("#"):
            continue
        tag, *rest = ln.split()
        try:
            if tag == "gravity":
                gravity = _floats(rest, 3, no)
            elif tag == "mode":
                mode = " ".join(rest)
            elif tag == "camera":
                camera = RigidTransform.from_values(_floats(rest, 12, no))
            elif tag == "slab":
                v = _floats(rest, 14, no)
                prims.append(PlaneSlab(v[:3], v[3:12].reshape(3, 3), v[12], v[13]))
            elif tag == "box":
                v = _floats(rest, 15, no)
                prims.append(Box(v[:3], v[3:12].reshape(3, 3), v[12:15]))
            elif tag == "cylinder":
                v = _floats(rest, 7, no)
                prims.append(Cylinder(v[:3], v[3:6], v[6]))
            elif tag == "label" and rest and rest[0] == "plane":
                v = _floats(rest[1:], 4, no)
                planes.append((v[:3], float(v[3])))
            elif tag == "label" and rest and rest[0] == "object":
                v = _floats(rest[1:], 21, no)
                objects.append(TrueObject(v[:3], v[3:12].reshape(3, 3), v[12:15], v[15:18], v[18:21]))
            else:
                raise SceneFormatError(f"unknown record {tag!r}", line=no)
        except ValueError as exc:
            if isinstance(exc, SceneFormatError):
                raise
            raise SceneFormatError(str(exc), line=no) from None
    return SceneSpec(tuple(prims), gravity, SceneLabels(mode, tuple(planes), tuple(objects), camera))
