import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from graspctx import kernels
from graspctx.errors import DegenerateHullError
from graspctx.planes import (HullBase, PlaneModel, RansacParams, contains, convex_hull,
                             extract_planes, extrude_hull, fit_plane_ransac, fit_plane_tls,
                             plane_frame, planes_from_triples, points_in_polygon, polygon_area)

from conftest import plane_grid
from oracles import angle_between_normals_deg, point_in_polygon, rotation_matrix_zyx, tls_plane


def camera_plane(z=0.4, n=2000, half=0.2, sigma=0.0, seed=0):
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-half, half, size=(n, 2))
    return np.column_stack([xy, np.full(n, z) + sigma * rng.standard_normal(n)])


def test_params_validate():
    for kw in (dict(distance_threshold=0), dict(max_iterations=0), dict(min_inliers=2),
               dict(prominence_threshold=-1)):
        with pytest.raises(ValueError):
            RansacParams(**kw)


def test_triples_give_unit_normals_and_flag_collinear():
    cloud = np.array([[0, 0, 1.0], [1, 0, 1], [0, 1, 1], [2, 0, 1], [3, 0, 1]])
    out = planes_from_triples(cloud, np.array([[0, 1, 2], [0, 1, 3], [1, 1, 2]]))
    np.testing.assert_allclose(abs(out[0, 2]), 1.0)
    assert out[0, 3] == pytest.approx(-out[0, 2])
    assert np.all(out[1] == 0) and np.all(out[2] == 0)


def test_plane_at_40cm_faces_camera():
    model = fit_plane_ransac(camera_plane())
    np.testing.assert_allclose(model.normal, [0, 0, -1], atol=1e-9)
    # normal faces the origin, so n . p + d = 0 gives d = +0.40
    assert abs(model.d) == pytest.approx(0.40, abs=1e-9)
    assert model.d > 0
    assert model.inlier_count == 2000
    assert model.prominence == 0.0


def test_inliers_respect_threshold_and_prominence_definition():
    rng = np.random.default_rng(3)
    cloud = np.vstack([camera_plane(sigma=0.003), rng.uniform(-0.2, 0.2, (600, 3)) + [0, 0, 0.6]])
    m = fit_plane_ransac(cloud)
    assert np.all(np.abs(m.signed_distance(cloud[m.inlier_indices])) <= m.distance_threshold)
    outside = np.setdiff1d(np.arange(len(cloud)), m.inlier_indices)
    assert np.all(np.abs(m.signed_distance(cloud[outside])) > m.distance_threshold)
    assert m.prominence == pytest.approx((len(cloud) - m.inlier_count) / m.inlier_count)


def test_too_few_inliers_gives_none():
    cloud = camera_plane(n=50)
    assert fit_plane_ransac(cloud, RansacParams(min_inliers=100)) is None
    with pytest.raises(ValueError):
        fit_plane_ransac(cloud[:2])


def test_same_seed_same_model():
    rng = np.random.default_rng(9)
    cloud = np.vstack([camera_plane(sigma=0.005), rng.uniform(-0.3, 0.3, (1500, 3)) + [0, 0, 0.6]])
    a = fit_plane_ransac(cloud, RansacParams(rng_seed=4))
    b = fit_plane_ransac(cloud, RansacParams(rng_seed=4))
    np.testing.assert_array_equal(a.normal, b.normal)
    np.testing.assert_array_equal(a.inlier_indices, b.inlier_indices)


def test_tls_matches_svd_oracle(rng):
    pts = rng.normal(size=(500, 3)) * [0.3, 0.2, 0.004] + [0.1, 0, 0.5]
    n, d = fit_plane_tls(pts)
    n2, d2 = tls_plane(pts)
    assert angle_between_normals_deg(n, n2) < 1e-6
    assert abs(d) == pytest.approx(abs(d2))


@settings(max_examples=30, deadline=None)
@given(yaw=st.floats(-math.pi, math.pi), tilt=st.floats(0, 1.2), dist=st.floats(0.3, 0.9),
       sigma=st.floats(0.0, 0.008), seed=st.integers(0, 2**31))
def test_ransac_agrees_with_tls_on_noisy_planes(yaw, tilt, dist, sigma, seed):
    rng = np.random.default_rng(seed)
    r = rotation_matrix_zyx(yaw, tilt, 0.0)
    local = np.column_stack([rng.uniform(-0.2, 0.2, (1500, 2)), sigma * rng.standard_normal(1500)])
    cloud = local @ r.T + [0, 0, dist]
    m = fit_plane_ransac(cloud, RansacParams(distance_threshold=max(0.015, 3 * sigma)))
    n_true, _ = tls_plane(cloud)
    assert angle_between_normals_deg(m.normal, n_true) <= 2.0
    assert angle_between_normals_deg(m.normal, r[:, 2]) <= 2.0


def test_extract_planes_separates_parallel_planes():
    upper = camera_plane(z=0.40, n=1500, seed=1)
    lower = camera_plane(z=0.45, n=1000, seed=2)
    cloud = np.vstack([upper, lower])
    models = extract_planes(cloud, RansacParams())
    assert len(models) == 2
    assert models[0].inlier_count >= models[1].inlier_count
    a, b = (set(m.inlier_indices.tolist()) for m in models)
    assert not a & b
    assert sorted(abs(m.d) for m in models) == pytest.approx([0.40, 0.45], abs=1e-6)
    # prominence is measured against the whole cloud
    assert models[1].prominence == pytest.approx(1500 / 1000)


def test_extract_planes_on_empty_cloud():
    with pytest.raises(ValueError):
        extract_planes(np.empty((0, 3)))


@settings(max_examples=40, deadline=None)
@given(nx=st.floats(-1, 1), ny=st.floats(-1, 1), nz=st.floats(-1, 1), d=st.floats(-2, 2))
def test_plane_frame_is_right_handed(nx, ny, nz, d):
    n = np.array([nx, ny, nz])
    if np.linalg.norm(n) < 1e-3:
        return
    n /= np.linalg.norm(n)
    origin, u, v = plane_frame(n, d)
    np.testing.assert_allclose(np.cross(u, v), n, atol=1e-12)
    assert n @ origin + d == pytest.approx(0, abs=1e-12)
    assert u @ n == pytest.approx(0, abs=1e-12)


def _plane_model(cloud, normal=(0, 0, 1.0), d=0.0):
    normal = np.asarray(normal, dtype=float)
    idx = np.flatnonzero(np.abs(cloud @ normal + d) <= 0.015)
    return PlaneModel(normal, d, idx, 0.0, 0.015)


def test_hull_of_square_grid():
    cloud = plane_grid(size=0.4, spacing=0.01)
    base = convex_hull(_plane_model(cloud), cloud)
    assert len(base.polygon) == 4
    assert base.area == pytest.approx(0.16, rel=1e-9)
    assert polygon_area(base.polygon) > 0  # counter-clockwise


def test_collinear_inliers_are_degenerate():
    cloud = np.column_stack([np.linspace(0, 1, 20), np.zeros(20), np.zeros(20)])
    with pytest.raises(DegenerateHullError):
        convex_hull(_plane_model(cloud), cloud)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(3, 300))
def test_hull_matches_qhull_and_contains_all_points(seed, n):
    rng = np.random.default_rng(seed)
    uv = rng.normal(size=(n, 2))
    if np.linalg.matrix_rank(uv - uv.mean(0)) < 2:
        return
    poly = kernels.convex_hull_2d(uv)
    ref = ConvexHull(uv)
    assert len(poly) == len(ref.vertices)
    assert polygon_area(poly) == pytest.approx(ref.volume, rel=1e-9)
    assert set(map(tuple, poly)) == set(map(tuple, uv[ref.vertices]))
    inside = points_in_polygon(poly, uv, eps=1e-9)
    assert inside.all()


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_point_in_polygon_matches_crossing_oracle(seed):
    rng = np.random.default_rng(seed)
    poly = kernels.convex_hull_2d(rng.normal(size=(30, 2)))
    probes = rng.uniform(-3, 3, size=(200, 2))
    got = points_in_polygon(poly, probes)
    want = [point_in_polygon(poly, p) for p in probes]
    assert got.tolist() == want


def test_prism_membership():
    base = HullBase(np.array([[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]]),
                    np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                    np.array([0, 0, 1.0]), 0.0)
    prism = extrude_hull(base, 0.40, 0.015)
    assert contains(prism, np.array([0.0, 0.0, 0.2])) is True
    assert contains(prism, np.array([0.0, 0.0, 0.01])) is False  # on the plane itself
    assert contains(prism, np.array([0.0, 0.0, 0.41])) is False
    assert contains(prism, np.array([0.0, 0.0, -0.2])) is False
    assert contains(prism, np.array([0.15, 0.0, 0.2])) is False
    mask = contains(prism, np.array([[0.1, 0.1, 0.4], [0.0, 0.0, 0.015], [0.0, 0.2, 0.1]]))
    assert mask.tolist() == [True, True, False]
    with pytest.raises(ValueError):
        extrude_hull(base, 0.0)


def test_noisy_plane_keeps_nearly_all_inliers():
    cloud = camera_plane(z=0.4, n=3000, sigma=0.005, seed=5)
    m = fit_plane_ransac(cloud, RansacParams(distance_threshold=0.015))
    n_ref, _ = tls_plane(cloud)
    assert angle_between_normals_deg(m.normal, [0, 0, 1]) <= 2.0
    assert angle_between_normals_deg(m.normal, n_ref) <= 0.5
    assert m.inlier_count >= 0.99 * len(cloud)


def test_parallel_planes_ten_cm_apart():
    models = extract_planes(np.vstack([camera_plane(0.40, 1000, seed=1),
                                       camera_plane(0.50, 1000, seed=2)]))
    assert len(models) == 2
    assert abs(abs(models[0].d) - abs(models[1].d)) == pytest.approx(0.10, abs=0.001)


def test_single_plane_gives_one_model():
    assert len(extract_planes(camera_plane(0.4, 1000), RansacParams(), max_planes=3)) == 1


def _flat_model(uv):
    cloud = np.column_stack([uv, np.zeros(len(uv))])
    return cloud, PlaneModel(np.array([0, 0, 1.0]), 0.0, np.arange(len(cloud)), 0.0, 0.015)


def test_square_corners_with_interior_points(rng):
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])
    cloud, m = _flat_model(np.vstack([corners, rng.uniform(0.01, 0.99, size=(100, 2))]))
    base = convex_hull(m, cloud)
    assert len(base.polygon) == 4
    assert base.area == pytest.approx(1.0)


def test_triangle_hull():
    cloud, m = _flat_model(np.array([[0, 0], [0.3, 0], [0, 0.2]]))
    base = convex_hull(m, cloud)
    assert len(base.polygon) == 3
    assert base.area == pytest.approx(0.03)


def test_disc_hull_area_and_containment(rng):
    r = 0.3 * np.sqrt(rng.random(500))
    a = rng.uniform(0, 2 * math.pi, 500)
    uv = np.column_stack([r * np.cos(a), r * np.sin(a)])
    cloud, m = _flat_model(uv)
    base = convex_hull(m, cloud)
    assert base.area <= math.pi * 0.3 ** 2
    proj = base.to_plane_coords(cloud)
    assert all(point_in_polygon(base.polygon, p) or
               min(np.linalg.norm(base.polygon - p, axis=1)) < 1e-12 for p in proj)


def test_unit_square_prism():
    base = HullBase(np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]),
                    np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                    np.array([0, 0, 1.0]), 0.0)
    prism = extrude_hull(base, 0.4, RansacParams().distance_threshold)
    assert contains(prism, np.array([0, 0, 0.2]))
    assert not contains(prism, np.array([0, 0, 0.5]))
    assert not contains(prism, np.array([0, 0, 0.0]))
