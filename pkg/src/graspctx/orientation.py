"""Gravity direction from accelerometer samples and plane orientation classes.

Accelerometer samples are taken in the gravity-pointing convention: a sensor at
rest reports a 9.81 m/s^2 vector pointing toward the Earth.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .cloud import PathLike
from .errors import CloudIOError, FormatError, GravityEstimationError

G = 9.81


@dataclass(frozen=True)
class ImuSample:
    accel: np.ndarray
    gyro: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "accel", np.asarray(self.accel, dtype=np.float64).reshape(3))
        object.__setattr__(self, "gyro", np.asarray(self.gyro, dtype=np.float64).reshape(3))


@dataclass(frozen=True)
class RigidTransform:
    """``p' = rotation @ p + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-9, rtol=0):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation determinant is not +1")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> RigidTransform:
        """Build from 12 numbers: row-major rotation then translation."""
        values = [float(v) for v in values]
        if len(values) != 12:
            raise ValueError(f"expected 12 numbers, got {len(values)}")
        return cls(np.reshape(values[:9], (3, 3)), values[9:])

    def to_values(self) -> list[float]:
        return [float(v) for v in self.rotation.ravel()] + [float(v) for v in self.translation]

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.translation

    def apply_vector(self, v: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(v, dtype=np.float64)

    def inverse(self) -> RigidTransform:
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """``self`` after ``other``."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)


def rotation_about(axis, angle_rad: float) -> np.ndarray:
    """Rodrigues rotation matrix."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle_rad) * k + (1 - math.cos(angle_rad)) * (k @ k)


@dataclass(frozen=True)
class GravityEstimate:
    direction: np.ndarray
    sample_count: int = 1

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(d)
        if not norm > 0:
            raise ValueError("gravity direction must be non-zero")
        object.__setattr__(self, "direction", d / norm)


class PlaneOrientation(str, enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    OBLIQUE = "oblique"


@dataclass(frozen=True)
class PlaneOrientationClass:
    orientation: PlaneOrientation
    angle_to_gravity: float


def estimate_gravity(samples: Iterable[ImuSample],
                     imu_to_camera: RigidTransform | None = None,
                     gate: tuple[float, float] = (0.5 * G, 1.5 * G)) -> GravityEstimate:
    """Normalised mean of the quasi-static accelerometer samples, expressed in
    the camera frame.

    Samples whose magnitude falls outside ``gate`` are ignored; raises
    :class:`GravityEstimationError` when none remain.
    """
    lo, hi = gate
    accepted = []
    for s in samples:
        mag = float(np.linalg.norm(s.accel))
        if lo <= mag <= hi:
            accepted.append(s.accel)
    if not accepted:
        raise GravityEstimationError("no accelerometer sample within the magnitude gate")
    mean = np.mean(accepted, axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0:
        raise GravityEstimationError("accepted accelerometer samples cancel out")
    direction = mean / norm
    if imu_to_camera is not None:
        direction = imu_to_camera.apply_vector(direction)
    return GravityEstimate(direction, len(accepted))


def classify_plane_orientation(normal, gravity: GravityEstimate,
                               tol_deg: float = 15.0) -> PlaneOrientationClass:
    normal = np.asarray(normal, dtype=np.float64)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-6:
        raise ValueError("plane normal must be a unit vector")
    if not 0 < tol_deg < 45:
        raise ValueError(f"tol_deg must be in (0, 45), got {tol_deg}")
    cos = min(abs(float(normal @ gravity.direction)), 1.0)
    theta = math.degrees(math.acos(cos))
    if theta <= tol_deg:
        kind = PlaneOrientation.HORIZONTAL
    elif theta >= 90.0 - tol_deg:
        kind = PlaneOrientation.VERTICAL
    else:
        kind = PlaneOrientation.OBLIQUE
    return PlaneOrientationClass(kind, theta)


def load_imu(path: PathLike) -> list[ImuSample]:
    """One ``ax ay az gx gy gz`` line per sample; blank and ``#`` lines skipped."""
    try:
        with open(path, encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise CloudIOError(f"cannot read {path}: {exc}") from exc
    samples = []
    for no, ln in enumerate(lines, start=1):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 6:
            raise FormatError(f"expected 6 values, got {len(parts)}", line=no)
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise FormatError(f"non-numeric value in {ln!r}", line=no) from None
        samples.append(ImuSample(vals[:3], vals[3:]))
    return samples


def store_imu(samples: Iterable[ImuSample], path: PathLike) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for s in samples:
            fh.write(" ".join(f"{v:.9g}" for v in (*s.accel, *s.gyro)) + "\n")
