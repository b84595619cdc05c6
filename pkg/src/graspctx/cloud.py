"""Depth frames, validity filtering, deprojection and point-cloud files.

Camera frame convention: right-handed, x right, y down, z forward along the
optical axis. A point cloud is a plain ``(N, 3)`` float64 array in meters.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import CloudFormatError, CloudIOError, FrameFormatError

PathLike = Union[str, os.PathLike]

INVALID_SENTINEL = -1.0


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics plus the sensor's trusted range window.

    The defaults describe a 160x120 sensor with a 90 degree horizontal field
    of view and a 5-100 cm working range.
    """

    width: int = 160
    height: int = 120
    fx: float = 80.0
    fy: float = 80.0
    cx: float = 79.5
    cy: float = 59.5
    min_range: float = 0.05
    max_range: float = 1.00

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(f"principal point ({self.cx}, {self.cy}) outside the image")
        if not (0 < self.min_range < self.max_range):
            raise ValueError(
                f"need 0 < min_range < max_range, got {self.min_range}, {self.max_range}"
            )

    @classmethod
    def from_fov(cls, width: int = 160, height: int = 120, hfov_deg: float = 90.0,
                 min_range: float = 0.05, max_range: float = 1.00) -> CameraIntrinsics:
        f = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return cls(width, height, f, f, (width - 1) / 2.0, (height - 1) / 2.0,
                   min_range, max_range)

    def pixel_rays(self) -> np.ndarray:
        """Camera-frame ray per pixel, row-major, scaled so that z == 1."""
        v, u = np.indices((self.height, self.width), dtype=np.float64)
        x = (u - self.cx) / self.fx
        y = (v - self.cy) / self.fy
        return np.stack([x, y, np.ones_like(x)], axis=-1).reshape(-1, 3)


@dataclass(frozen=True)
class DepthFrame:
    intrinsics: CameraIntrinsics
    depth: np.ndarray
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        depth = np.array(self.depth, dtype=np.float64)
        shape = (self.intrinsics.height, self.intrinsics.width)
        if depth.shape != shape:
            raise ValueError(f"depth has shape {depth.shape}, intrinsics expect {shape}")
        if self.valid is None:
            valid = np.isfinite(depth)
        else:
            valid = np.array(self.valid, dtype=bool)
            if valid.shape != shape:
                raise ValueError(f"valid mask has shape {valid.shape}, expected {shape}")
        depth.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "valid", valid)

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.valid))


def filter_invalid(frame: DepthFrame) -> DepthFrame:
    """Mark non-finite, non-positive and out-of-range pixels invalid."""
    k = frame.intrinsics
    d = frame.depth
    with np.errstate(invalid="ignore"):
        ok = np.isfinite(d) & (d > 0) & (d >= k.min_range) & (d <= k.max_range)
    valid = frame.valid & ok
    if np.array_equal(valid, frame.valid):
        return frame
    return replace(frame, valid=valid)


def deproject(frame: DepthFrame) -> np.ndarray:
    """One camera-frame point per valid pixel (row-major pixel order)."""
    k = frame.intrinsics
    v, u = np.nonzero(frame.valid)
    z = frame.depth[v, u]
    x = (u - k.cx) * z / k.fx
    y = (v - k.cy) * z / k.fy
    return np.column_stack([x, y, z]).astype(np.float64, copy=False).reshape(-1, 3)


def as_cloud(points) -> np.ndarray:
    cloud = np.asarray(points, dtype=np.float64)
    if cloud.size == 0:
        return np.empty((0, 3))
    if cloud.ndim != 2 or cloud.shape[1] != 3:
        raise ValueError(f"point cloud must have shape (N, 3), got {cloud.shape}")
    if not np.all(np.isfinite(cloud)):
        raise ValueError("point cloud contains non-finite coordinates")
    return cloud


# ---------------------------------------------------------------------------
# files


def store_cloud(cloud: np.ndarray, path: PathLike) -> None:
    """Write ``<count>`` then one ``x y z`` line per point (%.9g)."""
    cloud = as_cloud(cloud)
    lines = [f"{len(cloud)}"]
    lines += [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in cloud]
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise CloudIOError(f"cannot write {path}: {exc}") from exc


def load_cloud(path: PathLike) -> np.ndarray:
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CloudIOError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines()]
    # skip leading blank lines but keep numbering tied to the file
    numbered = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered:
        raise CloudFormatError("missing point-count header", line=1)
    head_no, head = numbered[0]
    try:
        count = int(head)
    except ValueError:
        raise CloudFormatError(f"bad point count {head!r}", line=head_no) from None
    if count < 0:
        raise CloudFormatError(f"negative point count {count}", line=head_no)
    body = numbered[1:]
    if len(body) != count:
        line = body[count][0] if len(body) > count else (body[-1][0] + 1 if body else head_no + 1)
        raise CloudFormatError(
            f"header declares {count} points but body has {len(body)}", line=line
        )
    cloud = np.empty((count, 3))
    for row, (no, ln) in enumerate(body):
        parts = ln.split()
        if len(parts) != 3:
            raise CloudFormatError(f"expected 3 coordinates, got {len(parts)}", line=no)
        try:
            cloud[row] = [float(p) for p in parts]
        except ValueError:
            raise CloudFormatError(f"non-numeric coordinate in {ln!r}", line=no) from None
        if not np.all(np.isfinite(cloud[row])):
            raise CloudFormatError("non-finite coordinate", line=no)
    return cloud


def store_frame(frame: DepthFrame, path: PathLike) -> None:
    """``width height fx fy cx cy`` header, then one row of depths per line;
    invalid pixels are written as -1."""
    k = frame.intrinsics
    depth = np.where(frame.valid, frame.depth, INVALID_SENTINEL)
    rows = [" ".join(f"{v:.9g}" for v in row) for row in depth]
    header = f"{k.width} {k.height} {k.fx:.17g} {k.fy:.17g} {k.cx:.17g} {k.cy:.17g}"
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(header + "\n" + "\n".join(rows) + "\n")
    except OSError as exc:
        raise CloudIOError(f"cannot write {path}: {exc}") from exc


def load_frame(path: PathLike, min_range: float = 0.05, max_range: float = 1.00) -> DepthFrame:
    """Read a depth frame file. The range window is not part of the file, so
    it comes from the caller (normally the harness config)."""
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CloudIOError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise FrameFormatError("empty frame file", line=1)
    head = lines[0].split()
    if len(head) != 6:
        raise FrameFormatError("header must be 'width height fx fy cx cy'", line=1)
    try:
        width, height = int(head[0]), int(head[1])
        fx, fy, cx, cy = (float(h) for h in head[2:])
    except ValueError:
        raise FrameFormatError(f"malformed header {lines[0]!r}", line=1) from None
    try:
        k = CameraIntrinsics(width, height, fx, fy, cx, cy, min_range, max_range)
    except ValueError as exc:
        raise FrameFormatError(str(exc), line=1) from None
    values: list[float] = []
    for no, ln in enumerate(lines[1:], start=2):
        for tok in ln.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise FrameFormatError(f"non-numeric depth {tok!r}", line=no) from None
        if len(values) > width * height:
            raise FrameFormatError(
                f"more than {width * height} depth values", line=no
            )
    if len(values) != width * height:
        raise FrameFormatError(
            f"expected {width * height} depth values, found {len(values)}", line=len(lines) + 1
        )
    depth = np.asarray(values).reshape(height, width)
    valid = depth != INVALID_SENTINEL
    return DepthFrame(k, np.where(valid, depth, np.nan), valid)
