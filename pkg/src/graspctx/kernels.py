"""Hot numeric kernels.

Every kernel exists twice: a numba-compiled loop (``*_numba``) and a
vectorised numpy version (``*_numpy``). The public names dispatch on
:data:`graspctx._backend.USE_NUMBA`. Both versions evaluate the same
floating-point expressions in the same order, so for a given input they agree
to the last bit on everything except the clustering fallback (which delegates
to scipy's kd-tree and may differ on exact-tie distances).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ._backend import USE_NUMBA, njit

# primitive codes for the ray caster
PRIM_SLAB = 0
PRIM_BOX = 1
PRIM_CYLINDER = 2
PRIM_ROW = 16  # type, centre(3), rotation(9, row-major, columns = local axes), dims(3)

RAY_EPS = 1e-9


# ---------------------------------------------------------------------------
# RANSAC inlier counting


@njit
def count_inliers_numba(points, planes, threshold):
    n_planes = planes.shape[0]
    n = points.shape[0]
    counts = np.zeros(n_planes, dtype=np.int64)
    for k in range(n_planes):
        nx = planes[k, 0]
        ny = planes[k, 1]
        nz = planes[k, 2]
        d = planes[k, 3]
        if nx == 0.0 and ny == 0.0 and nz == 0.0:
            counts[k] = -1
            continue
        c = 0
        for i in range(n):
            dist = nx * points[i, 0] + ny * points[i, 1] + nz * points[i, 2] + d
            if abs(dist) <= threshold:
                c += 1
        counts[k] = c
    return counts


def count_inliers_numpy(points, planes, threshold, chunk=32):
    x = points[:, 0][None, :]
    y = points[:, 1][None, :]
    z = points[:, 2][None, :]
    counts = np.empty(len(planes), dtype=np.int64)
    for start in range(0, len(planes), chunk):
        p = planes[start:start + chunk]
        dist = p[:, 0:1] * x + p[:, 1:2] * y + p[:, 2:3] * z + p[:, 3:4]
        counts[start:start + chunk] = np.count_nonzero(np.abs(dist) <= threshold, axis=1)
    degenerate = (planes[:, 0] == 0.0) & (planes[:, 1] == 0.0) & (planes[:, 2] == 0.0)
    counts[degenerate] = -1
    return counts


def count_inliers(points: np.ndarray, planes: np.ndarray, threshold: float) -> np.ndarray:
    """Count, per candidate plane ``(nx, ny, nz, d)``, the points with
    ``|n.p + d| <= threshold``. All-zero rows mark degenerate candidates and
    score -1."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    planes = np.ascontiguousarray(planes, dtype=np.float64)
    if USE_NUMBA:
        return count_inliers_numba(points, planes, float(threshold))
    return count_inliers_numpy(points, planes, float(threshold))


# ---------------------------------------------------------------------------
# Euclidean connected components


@njit
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


# the cell itself plus the 13 neighbours that follow it lexicographically;
# visiting only these sees every neighbouring cell pair exactly once
_HALF_STENCIL = np.array([(0, 0, 0)] + [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
                                       for dz in (-1, 0, 1) if (dx, dy, dz) > (0, 0, 0)],
                         dtype=np.int64)


@njit
def _union(parent, i, j):
    ri = _find(parent, i)
    rj = _find(parent, j)
    # the smaller index wins, so every root is its component's smallest member
    if ri < rj:
        parent[rj] = ri
    elif rj < ri:
        parent[ri] = rj


@njit
def _cluster_grid(points, tol, stencil):
    n = points.shape[0]
    parent = np.arange(n)
    if n == 0:
        return parent
    # widen cells slightly so rounding in the division can never push two
    # points at distance <= tol more than one cell apart
    cell = tol * (1.0 + 1e-9)
    tol2 = tol * tol
    lo = np.empty(3)
    for a in range(3):
        lo[a] = points[0, a]
        for i in range(1, n):
            if points[i, a] < lo[a]:
                lo[a] = points[i, a]
    coords = np.empty((n, 3), dtype=np.int64)
    dims = np.zeros(3, dtype=np.int64)
    for i in range(n):
        for a in range(3):
            c = np.int64(math.floor((points[i, a] - lo[a]) / cell))
            coords[i, a] = c
            if c + 1 > dims[a]:
                dims[a] = c + 1
    keys = np.empty(n, dtype=np.int64)
    for i in range(n):
        keys[i] = (coords[i, 0] * dims[1] + coords[i, 1]) * dims[2] + coords[i, 2]
    order = np.argsort(keys, kind="mergesort")
    sk = keys[order]

    starts = np.empty(n + 1, dtype=np.int64)
    m = 0
    for s in range(n):
        if s == 0 or sk[s] != sk[s - 1]:
            starts[m] = s
            m += 1
    starts[m] = n
    cells = np.empty(m, dtype=np.int64)
    for c in range(m):
        cells[c] = sk[starts[c]]

    for c in range(m):
        first = order[starts[c]]
        for k in range(stencil.shape[0]):
            cx = coords[first, 0] + stencil[k, 0]
            cy = coords[first, 1] + stencil[k, 1]
            cz = coords[first, 2] + stencil[k, 2]
            if cx < 0 or cx >= dims[0] or cy < 0 or cy >= dims[1] or cz < 0 or cz >= dims[2]:
                continue
            if k == 0:
                d = c
            else:
                d = np.searchsorted(cells, (cx * dims[1] + cy) * dims[2] + cz)
                if d >= m or cells[d] != (cx * dims[1] + cy) * dims[2] + cz:
                    continue
            for s in range(starts[c], starts[c + 1]):
                i = order[s]
                t0 = s + 1 if k == 0 else starts[d]
                for u in range(t0, starts[d + 1]):
                    j = order[u]
                    ex = points[i, 0] - points[j, 0]
                    ey = points[i, 1] - points[j, 1]
                    ez = points[i, 2] - points[j, 2]
                    if ex * ex + ey * ey + ez * ez <= tol2:
                        _union(parent, i, j)
    for i in range(n):
        parent[i] = _find(parent, i)
    return parent


def cluster_roots_numba(points, tol):
    return _cluster_grid(points, tol, _HALF_STENCIL)


def cluster_roots_numpy(points, tol):
    n = len(points)
    if n == 0:
        return np.arange(0)
    pairs = cKDTree(points).query_pairs(tol, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    _, labels = connected_components(graph, directed=False)
    # relabel each component by its smallest member index, matching the numba roots
    first = np.full(labels.max() + 1, n, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(n))
    return first[labels]


def cluster_roots(points: np.ndarray, tol: float) -> np.ndarray:
    """Label each point with the smallest index of its connected component,
    where two points are linked iff their distance is at most ``tol``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return cluster_roots_numba(points, float(tol))
    return cluster_roots_numpy(points, float(tol))


# ---------------------------------------------------------------------------
# 2D convex hull (Andrew's monotone chain)


@njit
def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@njit
def monotone_chain_numba(pts):
    """``pts`` must be lexicographically sorted and free of duplicates."""
    n = pts.shape[0]
    hull = np.empty(2 * n, dtype=np.int64)
    k = 0
    for i in range(n):
        while k >= 2 and _cross(
            pts[hull[k - 2], 0], pts[hull[k - 2], 1],
            pts[hull[k - 1], 0], pts[hull[k - 1], 1],
            pts[i, 0], pts[i, 1],
        ) <= 0.0:
            k -= 1
        hull[k] = i
        k += 1
    lower = k + 1
    for i in range(n - 2, -1, -1):
        while k >= lower and _cross(
            pts[hull[k - 2], 0], pts[hull[k - 2], 1],
            pts[hull[k - 1], 0], pts[hull[k - 1], 1],
            pts[i, 0], pts[i, 1],
        ) <= 0.0:
            k -= 1
        hull[k] = i
        k += 1
    return hull[: max(k - 1, 1)]


def _octagon_filter(pts):
    """Drop points strictly inside the Akl-Toussaint octagon; they cannot be
    hull vertices."""
    x, y = pts[:, 0], pts[:, 1]
    s, t = x + y, x - y
    idx = [np.argmin(y), np.argmax(t), np.argmax(x), np.argmax(s),
           np.argmax(y), np.argmin(t), np.argmin(x), np.argmin(s)]
    poly = []
    for i in idx:
        if not poly or poly[-1] != i:
            poly.append(i)
    if len(poly) > 1 and poly[0] == poly[-1]:
        poly.pop()
    if len(set(poly)) < 3:
        return np.arange(len(pts))
    inside = np.ones(len(pts), dtype=bool)
    for a, b in zip(poly, poly[1:] + poly[:1]):
        ax, ay = pts[a]
        bx, by = pts[b]
        inside &= (bx - ax) * (y - ay) - (by - ay) * (x - ax) > 0.0
    return np.flatnonzero(~inside)


def monotone_chain_numpy(pts):
    keep = _octagon_filter(pts)
    sub = pts[keep]
    hull: list[int] = []
    for i in range(len(sub)):
        while len(hull) >= 2 and _cross_py(sub[hull[-2]], sub[hull[-1]], sub[i]) <= 0.0:
            hull.pop()
        hull.append(i)
    lower = len(hull) + 1
    for i in range(len(sub) - 2, -1, -1):
        while len(hull) >= lower and _cross_py(sub[hull[-2]], sub[hull[-1]], sub[i]) <= 0.0:
            hull.pop()
        hull.append(i)
    hull = hull[: max(len(hull) - 1, 1)]
    return keep[np.asarray(hull, dtype=np.int64)]


def _cross_py(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull vertices of a 2D point set, starting at the
    lexicographically smallest point. Collinear boundary points are dropped."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        return np.empty((0, 2))
    order = np.lexsort((points[:, 1], points[:, 0]))
    pts = points[order]
    same = np.all(pts[1:] == pts[:-1], axis=1)
    pts = np.ascontiguousarray(pts[np.concatenate(([True], ~same))])
    if len(pts) < 3:
        return pts
    if USE_NUMBA:
        hull = monotone_chain_numba(pts)
    else:
        hull = monotone_chain_numpy(pts)
    return pts[hull]


# ---------------------------------------------------------------------------
# ray casting against analytic primitives


@njit
def _hit_slab(ox, oy, oz, dx, dy, dz, a, b):
    if dz == 0.0:
        return np.inf
    t = -oz / dz
    if t <= RAY_EPS:
        return np.inf
    if abs(ox + t * dx) <= a and abs(oy + t * dy) <= b:
        return t
    return np.inf


@njit
def _slab_interval(o, d, e, tmin, tmax):
    if d == 0.0:
        if abs(o) > e:
            return 1.0, 0.0
        return tmin, tmax
    t1 = (-e - o) / d
    t2 = (e - o) / d
    if t1 > t2:
        t1, t2 = t2, t1
    return max(tmin, t1), min(tmax, t2)


@njit
def _hit_box(ox, oy, oz, dx, dy, dz, a, b, c):
    tmin = -np.inf
    tmax = np.inf
    tmin, tmax = _slab_interval(ox, dx, a, tmin, tmax)
    tmin, tmax = _slab_interval(oy, dy, b, tmin, tmax)
    tmin, tmax = _slab_interval(oz, dz, c, tmin, tmax)
    if tmax < tmin or tmax <= RAY_EPS:
        return np.inf
    if tmin > RAY_EPS:
        return tmin
    return tmax


@njit
def _hit_cylinder(ox, oy, oz, dx, dy, dz, r, length):
    best = np.inf
    qa = dx * dx + dy * dy
    qb = 2.0 * (ox * dx + oy * dy)
    qc = ox * ox + oy * oy - r * r
    if qa > 0.0:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            root = math.sqrt(disc)
            for t in ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)):
                if t > RAY_EPS and t < best:
                    h = oz + t * dz
                    if h >= 0.0 and h <= length:
                        best = t
    if dz != 0.0:
        for zc in (0.0, length):
            t = (zc - oz) / dz
            if t > RAY_EPS and t < best:
                px = ox + t * dx
                py = oy + t * dy
                if px * px + py * py <= r * r:
                    best = t
    return best


@njit
def raycast_numba(origin, dirs, prims):
    n = dirs.shape[0]
    depth = np.full(n, np.inf)
    label = np.full(n, -1, dtype=np.int64)
    for p in range(prims.shape[0]):
        kind = int(prims[p, 0])
        cx = prims[p, 1]
        cy = prims[p, 2]
        cz = prims[p, 3]
        rot = prims[p, 4:13]
        a = prims[p, 13]
        b = prims[p, 14]
        c = prims[p, 15]
        wx = origin[0] - cx
        wy = origin[1] - cy
        wz = origin[2] - cz
        # local = R^T (w); R stored row-major with local axes as columns
        ox = rot[0] * wx + rot[3] * wy + rot[6] * wz
        oy = rot[1] * wx + rot[4] * wy + rot[7] * wz
        oz = rot[2] * wx + rot[5] * wy + rot[8] * wz
        for i in range(n):
            vx = dirs[i, 0]
            vy = dirs[i, 1]
            vz = dirs[i, 2]
            dx = rot[0] * vx + rot[3] * vy + rot[6] * vz
            dy = rot[1] * vx + rot[4] * vy + rot[7] * vz
            dz = rot[2] * vx + rot[5] * vy + rot[8] * vz
            if kind == PRIM_SLAB:
                t = _hit_slab(ox, oy, oz, dx, dy, dz, a, b)
            elif kind == PRIM_BOX:
                t = _hit_box(ox, oy, oz, dx, dy, dz, a, b, c)
            else:
                t = _hit_cylinder(ox, oy, oz, dx, dy, dz, a, b)
            if t < depth[i]:
                depth[i] = t
                label[i] = p
    return depth, label


def _np_slab(o, d, a, b):
    ox, oy, oz = o
    dx, dy, dz = d
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -oz / dz
    ok = (dz != 0.0) & (t > RAY_EPS)
    ok &= (np.abs(ox + t * dx) <= a) & (np.abs(oy + t * dy) <= b)
    return np.where(ok, t, np.inf)


def _np_box(o, d, ext):
    n = d.shape[1]
    tmin = np.full(n, -np.inf)
    tmax = np.full(n, np.inf)
    miss = np.zeros(n, dtype=bool)
    for axis in range(3):
        oa, da, e = o[axis], d[axis], ext[axis]
        flat = da == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-e - oa) / da
            t2 = (e - oa) / da
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        tmin = np.where(flat, tmin, np.maximum(tmin, lo))
        tmax = np.where(flat, tmax, np.minimum(tmax, hi))
        if abs(oa) > e:
            miss |= flat
    miss |= (tmax < tmin) | (tmax <= RAY_EPS)
    t = np.where(tmin > RAY_EPS, tmin, tmax)
    return np.where(miss, np.inf, t)


def _np_cylinder(o, d, r, length):
    ox, oy, oz = o
    dx, dy, dz = d
    best = np.full(d.shape[1], np.inf)
    qa = dx * dx + dy * dy
    qb = 2.0 * (ox * dx + oy * dy)
    qc = ox * ox + oy * oy - r * r
    disc = qb * qb - 4.0 * qa * qc
    ok = (qa > 0.0) & (disc >= 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.sqrt(np.where(ok, disc, 0.0))
        for t in ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)):
            h = oz + t * dz
            good = ok & (t > RAY_EPS) & (t < best) & (h >= 0.0) & (h <= length)
            best = np.where(good, t, best)
        for zc in (0.0, length):
            t = (zc - oz) / dz
            px = ox + t * dx
            py = oy + t * dy
            good = (dz != 0.0) & (t > RAY_EPS) & (t < best) & (px * px + py * py <= r * r)
            best = np.where(good, t, best)
    return best


def raycast_numpy(origin, dirs, prims):
    n = dirs.shape[0]
    depth = np.full(n, np.inf)
    label = np.full(n, -1, dtype=np.int64)
    for p, row in enumerate(prims):
        kind = int(row[0])
        rot = row[4:13]
        w = origin - row[1:4]
        o = (
            rot[0] * w[0] + rot[3] * w[1] + rot[6] * w[2],
            rot[1] * w[0] + rot[4] * w[1] + rot[7] * w[2],
            rot[2] * w[0] + rot[5] * w[1] + rot[8] * w[2],
        )
        vx, vy, vz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
        d = np.stack([
            rot[0] * vx + rot[3] * vy + rot[6] * vz,
            rot[1] * vx + rot[4] * vy + rot[7] * vz,
            rot[2] * vx + rot[5] * vy + rot[8] * vz,
        ])
        if kind == PRIM_SLAB:
            t = _np_slab(o, d, row[13], row[14])
        elif kind == PRIM_BOX:
            t = _np_box(o, d, row[13:16])
        else:
            t = _np_cylinder(o, d, row[13], row[14])
        closer = t < depth
        depth = np.where(closer, t, depth)
        label = np.where(closer, p, label)
    return depth, label


def raycast(origin: np.ndarray, dirs: np.ndarray, prims: np.ndarray):
    """First-hit parameter ``t`` and primitive index per ray (inf / -1 on miss)."""
    origin = np.ascontiguousarray(origin, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    prims = np.ascontiguousarray(prims, dtype=np.float64).reshape(-1, PRIM_ROW)
    if USE_NUMBA:
        return raycast_numba(origin, dirs, prims)
    return raycast_numpy(origin, dirs, prims)
