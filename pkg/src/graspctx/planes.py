"""Prominent-plane detection and the support volume above a plane."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cloud import as_cloud
from .errors import DegenerateHullError

COLLINEAR_SIN = 1e-9


@dataclass(frozen=True)
class RansacParams:
    distance_threshold: float = 0.015
    max_iterations: int = 200
    min_inliers: int = 100
    prominence_threshold: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.distance_threshold > 0:
            raise ValueError("distance_threshold must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.min_inliers < 3:
            raise ValueError("min_inliers must be >= 3")
        if self.prominence_threshold < 0:
            raise ValueError("prominence_threshold must be >= 0")


@dataclass(frozen=True)
class PlaneModel:
    """Plane ``normal . p + d = 0`` with the normal facing the camera origin.

    ``prominence`` is the outlier/inlier ratio over the source cloud.
    """

    normal: np.ndarray
    d: float
    inlier_indices: np.ndarray
    prominence: float
    distance_threshold: float

    @property
    def inlier_count(self) -> int:
        return len(self.inlier_indices)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return signed_distance(points, self.normal, self.d)

    def frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return plane_frame(self.normal, self.d)


def signed_distance(points: np.ndarray, normal: np.ndarray, d: float) -> np.ndarray:
    # same evaluation order as kernels.count_inliers
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return normal[0] * p[:, 0] + normal[1] * p[:, 1] + normal[2] * p[:, 2] + d


def plane_frame(normal: np.ndarray, d: float):
    """``(origin, u, v)`` with ``origin`` the plane point nearest the camera and
    ``u, v`` in-plane axes such that ``u x v = normal``.

    ``u`` is the camera x axis projected into the plane (camera y when the
    plane is nearly perpendicular to x)."""
    normal = np.asarray(normal, dtype=np.float64)
    ref = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = ref - (ref @ normal) * normal
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return -d * normal, u, v


def fit_plane_tls(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Total-least-squares plane: normal is the smallest-eigenvalue
    eigenvector of the covariance."""
    points = np.asarray(points, dtype=np.float64)
    centroid = points.mean(axis=0)
    centred = points - centroid
    _, vecs = np.linalg.eigh(centred.T @ centred)
    normal = vecs[:, 0]
    return _face_camera(normal, centroid)


def _face_camera(normal, centroid):
    normal = normal / np.linalg.norm(normal)
    if normal @ centroid > 0:
        normal = -normal
    return normal, float(-(normal @ centroid))


def planes_from_triples(cloud: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """Candidate ``(nx, ny, nz, d)`` per index triple; collinear triples give
    an all-zero row."""
    p0 = cloud[samples[:, 0]]
    e1 = cloud[samples[:, 1]] - p0
    e2 = cloud[samples[:, 2]] - p0
    c = np.cross(e1, e2)
    norm = np.linalg.norm(c, axis=1)
    scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    ok = (scale > 0) & (norm > COLLINEAR_SIN * scale)
    out = np.zeros((len(samples), 4))
    n = c[ok] / norm[ok, None]
    out[ok, :3] = n
    out[ok, 3] = -np.einsum("ij,ij->i", n, p0[ok])
    return out


def fit_plane_ransac(cloud: np.ndarray, params: RansacParams = RansacParams(),
                     refine_rounds: int = 2) -> PlaneModel | None:
    """Most-supported plane by RANSAC, refined by total least squares.

    The sample triples are all drawn up front from ``params.rng_seed``, so the
    winning hypothesis does not depend on the kernel backend. After each
    refinement round the inlier set is re-selected against the refined plane,
    so the returned inliers always satisfy the distance threshold.
    """
    cloud = as_cloud(cloud)
    n = len(cloud)
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    thr = params.distance_threshold
    rng = np.random.default_rng(params.rng_seed)
    samples = rng.integers(0, n, size=(params.max_iterations, 3))
    candidates = planes_from_triples(cloud, samples)
    counts = kernels.count_inliers(cloud, candidates, thr)
    best = int(np.argmax(counts))
    if counts[best] < params.min_inliers:
        return None
    normal, d = candidates[best, :3], float(candidates[best, 3])
    inliers = np.flatnonzero(np.abs(signed_distance(cloud, normal, d)) <= thr)
    for _ in range(refine_rounds):
        if len(inliers) < 3:
            break
        normal, d = fit_plane_tls(cloud[inliers])
        inliers = np.flatnonzero(np.abs(signed_distance(cloud, normal, d)) <= thr)
    if len(inliers) < params.min_inliers:
        return None
    return PlaneModel(normal, d, inliers, (n - len(inliers)) / len(inliers), thr)


def extract_planes(cloud: np.ndarray, params: RansacParams = RansacParams(),
                   max_planes: int = 3) -> list[PlaneModel]:
    """Greedy sequential RANSAC: fit, remove inliers, repeat.

    Inlier indices refer to ``cloud``; prominence is measured against the
    whole of ``cloud``. The result is ordered by inlier count, largest first.
    """
    cloud = as_cloud(cloud)
    if len(cloud) == 0:
        raise ValueError("cloud is empty")
    remaining = np.arange(len(cloud))
    models: list[PlaneModel] = []
    for k in range(max_planes):
        if k > 0 and len(remaining) < 3:
            break
        sub = params if k == 0 else _reseeded(params, k)
        model = fit_plane_ransac(cloud[remaining], sub)
        if model is None:
            break
        idx = remaining[model.inlier_indices]
        models.append(PlaneModel(model.normal, model.d, idx,
                                 (len(cloud) - len(idx)) / len(idx), params.distance_threshold))
        remaining = np.delete(remaining, model.inlier_indices)
    models.sort(key=lambda m: -m.inlier_count)
    return models


def _reseeded(params: RansacParams, k: int) -> RansacParams:
    return RansacParams(params.distance_threshold, params.max_iterations, params.min_inliers,
                        params.prominence_threshold, params.rng_seed + k)


# ---------------------------------------------------------------------------
# hull and prism


@dataclass(frozen=True)
class HullBase:
    """Convex polygon (counter-clockwise, in ``(u, v)`` coordinates) lying in
    a plane with frame ``origin, u, v, normal`` and offset ``d``."""

    polygon: np.ndarray
    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray
    normal: np.ndarray
    d: float

    def to_plane_coords(self, points: np.ndarray) -> np.ndarray:
        rel = np.asarray(points, dtype=np.float64).reshape(-1, 3) - self.origin
        return np.column_stack([rel @ self.u, rel @ self.v])

    def to_world(self, uv: np.ndarray) -> np.ndarray:
        uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
        return self.origin + uv[:, :1] * self.u + uv[:, 1:] * self.v

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)


@dataclass(frozen=True)
class HullPrism:
    base: HullBase
    height: float
    h_min: float

    def heights(self, points: np.ndarray) -> np.ndarray:
        return signed_distance(points, self.base.normal, self.base.d)


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def convex_hull(plane: PlaneModel, cloud: np.ndarray) -> HullBase:
    """Hull of the plane's inliers after projection into the plane."""
    if plane.inlier_count < 3:
        raise DegenerateHullError("plane has fewer than 3 inliers")
    origin, u, v = plane.frame()
    base = HullBase(np.empty((0, 2)), origin, u, v, plane.normal, plane.d)
    uv = base.to_plane_coords(cloud[plane.inlier_indices])
    poly = kernels.convex_hull_2d(uv)
    if len(poly) < 3:
        raise DegenerateHullError("plane inliers are collinear in the plane")
    return HullBase(poly, origin, u, v, plane.normal, plane.d)


def points_in_polygon(poly: np.ndarray, uv: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Inclusive point-in-convex-polygon test for a counter-clockwise polygon."""
    inside = np.ones(len(uv), dtype=bool)
    x, y = uv[:, 0], uv[:, 1]
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        inside &= (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]) >= -eps
    return inside


def extrude_hull(base: HullBase, height: float = 0.40, h_min: float = 0.015) -> HullPrism:
    if not height > 0:
        raise ValueError("extrusion height must be > 0")
    if len(base.polygon) < 3:
        raise DegenerateHullError("base polygon needs at least 3 vertices")
    return HullPrism(base, float(height), float(h_min))


def contains(prism: HullPrism, points: np.ndarray):
    """Membership in the prism; a single point gives a bool, an ``(N, 3)``
    array gives a mask."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    h = prism.heights(pts)
    mask = (h >= prism.h_min) & (h <= prism.height)
    if np.any(mask):
        idx = np.flatnonzero(mask)
        mask[idx] = points_in_polygon(prism.base.polygon, prism.base.to_plane_coords(pts[idx]))
    return bool(mask[0]) if single else mask
