"""Object clusters, plane-aligned boxes and opposition grasp points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateClusterError
from .planes import HullPrism, PlaneModel, contains, plane_frame

EIGEN_TIE = 0.01


@dataclass(frozen=True)
class Cluster:
    point_indices: np.ndarray
    centroid: np.ndarray

    @classmethod
    def from_indices(cls, indices, cloud: np.ndarray) -> Cluster:
        indices = np.asarray(indices, dtype=np.int64)
        if len(indices) == 0:
            raise ValueError("a cluster cannot be empty")
        return cls(indices, cloud[indices].mean(axis=0))

    @property
    def size(self) -> int:
        return len(self.point_indices)


@dataclass(frozen=True)
class ObjectBox:
    """Box with ``axes`` rows ``(major, minor, normal)`` and half ``extents``
    along them."""

    center: np.ndarray
    axes: np.ndarray
    extents: np.ndarray

    @property
    def major(self) -> np.ndarray:
        return self.axes[0]

    @property
    def minor(self) -> np.ndarray:
        return self.axes[1]

    @property
    def normal(self) -> np.ndarray:
        return self.axes[2]

    def local(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points).reshape(-1, 3) - self.center) @ self.axes.T

    def corners(self) -> np.ndarray:
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        return self.center + (signs * self.extents) @ self.axes


@dataclass(frozen=True)
class GraspEstimate:
    point_a: np.ndarray
    point_b: np.ndarray
    axis: np.ndarray
    width: float
    index_a: int = -1
    index_b: int = -1


@dataclass(frozen=True)
class SupportFrame:
    """Reference surface for box fitting: heights are ``normal . p + d``."""

    normal: np.ndarray
    d: float
    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def from_plane(cls, plane: PlaneModel) -> SupportFrame:
        origin, u, v = plane.frame()
        return cls(plane.normal, plane.d, origin, u, v)

    @classmethod
    def from_up(cls, up, floor_height: float) -> SupportFrame:
        """Horizontal reference at ``floor_height`` along ``up``."""
        up = np.asarray(up, dtype=np.float64)
        up = up / np.linalg.norm(up)
        d = -float(floor_height)
        origin, u, v = plane_frame(up, d)
        return cls(up, d, origin, u, v)

    def heights(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points).reshape(-1, 3)
        n = self.normal
        return n[0] * p[:, 0] + n[1] * p[:, 1] + n[2] * p[:, 2] + self.d


def _as_frame(plane) -> SupportFrame:
    return plane if isinstance(plane, SupportFrame) else SupportFrame.from_plane(plane)


# ---------------------------------------------------------------------------
# clustering


def cluster_points(points: np.ndarray, cluster_tol: float, min_cluster_size: int = 1):
    """Euclidean connected components as index arrays into ``points``.

    Components smaller than ``min_cluster_size`` are dropped. Output is sorted
    by size (largest first), ties broken by smallest member index.
    """
    if not cluster_tol > 0:
        raise ValueError("cluster_tol must be > 0")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        return []
    roots = kernels.cluster_roots(points, cluster_tol)
    order = np.argsort(roots, kind="stable")
    uniq, starts, counts = np.unique(roots[order], return_index=True, return_counts=True)
    groups = [order[s:s + c] for s, c in zip(starts, counts) if c >= min_cluster_size]
    groups.sort(key=lambda g: (-len(g), g[0]))
    return groups


def cluster_in_volume(cloud: np.ndarray, prism: HullPrism, cluster_tol: float = 0.02,
                      min_cluster_size: int = 30) -> list[Cluster]:
    mask = contains(prism, cloud)
    idx = np.flatnonzero(mask)
    groups = cluster_points(cloud[idx], cluster_tol, min_cluster_size)
    return [Cluster.from_indices(idx[g], cloud) for g in groups]


# ---------------------------------------------------------------------------
# boxes and grasps


def pca_box(cluster: Cluster, cloud: np.ndarray, plane, pin_to_plane: bool = True) -> ObjectBox:
    """Box whose in-plane axes come from a 2D PCA of the projected points and
    whose third axis is the plane normal.

    With ``pin_to_plane`` the bottom face sits on the plane (or lower, if
    points dip below it) and the top face passes through the highest point;
    otherwise the normal-axis range is the cluster's own.

    Near-isotropic clusters (eigenvalues within 1%) take as major axis the
    eigenvector closest to the plane frame's ``u`` axis.
    """
    frame = _as_frame(plane)
    pts = cloud[cluster.point_indices]
    if len(pts) < 3:
        raise DegenerateClusterError("need at least 3 points for a box")
    rel = pts - frame.origin
    uv = np.column_stack([rel @ frame.u, rel @ frame.v])
    centred = uv - uv.mean(axis=0)
    cov = centred.T @ centred / len(uv)
    evals, evecs = np.linalg.eigh(cov)
    scale = float(np.max(np.abs(uv))) if len(uv) else 1.0
    if evals[1] <= 1e-18 * max(scale * scale, 1e-30) or evals[1] <= 0:
        raise DegenerateClusterError("cluster projects to a single point")
    major2 = evecs[:, 1]
    if evals[1] - evals[0] <= EIGEN_TIE * evals[1]:
        major2 = evecs[:, int(np.argmax(np.abs(evecs[0, :])))]
    if major2[0] < 0 or (major2[0] == 0 and major2[1] < 0):
        major2 = -major2
    major = major2[0] * frame.u + major2[1] * frame.v
    major /= np.linalg.norm(major)
    minor = np.cross(frame.normal, major)

    a = rel @ major
    b = rel @ minor
    h = frame.heights(pts)
    if (b.max() - b.min()) > (a.max() - a.min()):
        major, minor = -minor, major
        a, b = -b, a
    h_lo = min(0.0, float(h.min())) if pin_to_plane else float(h.min())
    h_hi = float(h.max())
    a_mid = 0.5 * (a.max() + a.min())
    b_mid = 0.5 * (b.max() + b.min())
    h_mid = 0.5 * (h_lo + h_hi)
    # origin lies on the plane, so heights add along the normal
    center = frame.origin + a_mid * major + b_mid * minor + h_mid * frame.normal
    extents = np.array([0.5 * (a.max() - a.min()), 0.5 * (b.max() - b.min()), 0.5 * (h_hi - h_lo)])
    return ObjectBox(center, np.vstack([major, minor, frame.normal]), extents)


def grasp_points(box: ObjectBox, cluster: Cluster, cloud: np.ndarray, plane=None) -> GraspEstimate:
    """Opposition pair on the box's minor faces.

    The targets are where the minor axis, taken through the box centre (half
    the box height), meets the two minor faces. Each grasp point is the
    cluster point closest to its target, so both are real measurements.
    """
    if cluster.size == 0:
        raise ValueError("cluster is empty")
    if not box.extents[1] > 0:
        raise DegenerateClusterError("box has zero minor extent")
    pts = cloud[cluster.point_indices]
    targets = (box.center + box.extents[1] * box.minor, box.center - box.extents[1] * box.minor)
    chosen = []
    for t in targets:
        i = int(np.argmin(np.sum((pts - t) ** 2, axis=1)))
        chosen.append(i)
    pa, pb = pts[chosen[0]], pts[chosen[1]]
    width = float(np.linalg.norm(pa - pb))
    if not width > 0:
        raise DegenerateClusterError("both grasp targets resolve to the same point")
    return GraspEstimate(pa.copy(), pb.copy(), box.minor.copy(), width,
                         int(cluster.point_indices[chosen[0]]),
                         int(cluster.point_indices[chosen[1]]))


@dataclass(frozen=True)
class PotHandleHit:
    cluster: Cluster
    box: ObjectBox
    grasp: GraspEstimate


def detect_pot_handle(cloud: np.ndarray, plane: PlaneModel | SupportFrame | None,
                      min_height: float = 0.05, max_minor_extent: float = 0.025,
                      cluster_tol: float = 0.02, min_cluster_size: int = 30,
                      up=(0.0, -1.0, 0.0), floor_quantile: float = 0.01) -> PotHandleHit | None:
    """Largest elevated, slender cluster.

    A cluster qualifies when every point is at least ``min_height`` above the
    reference surface and its in-plane minor half-extent is at most
    ``max_minor_extent``. Without a plane the reference is a horizontal floor
    at the ``floor_quantile`` quantile of the cloud's heights along ``up``;
    a low quantile rather than the minimum keeps a few noisy points from
    dragging the floor down.
    """
    if not min_height > 0:
        raise ValueError("min_height must be > 0")
    cloud = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    if len(cloud) == 0:
        return None
    if plane is None:
        up = np.asarray(up, dtype=np.float64)
        up = up / np.linalg.norm(up)
        frame = SupportFrame.from_up(up, float(np.quantile(cloud @ up, floor_quantile)))
    else:
        frame = _as_frame(plane)
    heights = frame.heights(cloud)
    for g in cluster_points(cloud, cluster_tol, min_cluster_size):
        if heights[g].min() < min_height:
            continue
        cluster = Cluster.from_indices(g, cloud)
        try:
            box = pca_box(cluster, cloud, frame, pin_to_plane=False)
            if box.extents[1] > max_minor_extent:
                continue
            grasp = grasp_points(box, cluster, cloud, frame)
        except DegenerateClusterError:
            continue
        return PotHandleHit(cluster, box, grasp)
    return None
