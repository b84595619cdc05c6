import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graspctx import kernels
from graspctx._backend import NUMBA_AVAILABLE
from graspctx.cloud import CameraIntrinsics
from graspctx.scenegen import camera_center, occluded_table_scene, standard_scenes

from conftest import DATA

needs_numba = pytest.mark.skipif(not NUMBA_AVAILABLE, reason="numba not installed")


@needs_numba
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(3, 3000), thr=st.floats(0.001, 0.05))
def test_inlier_counts_agree(seed, n, thr):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 3))
    planes = np.zeros((40, 4))
    nn = rng.normal(size=(40, 3))
    planes[:, :3] = nn / np.linalg.norm(nn, axis=1, keepdims=True)
    planes[:, 3] = rng.normal(size=40)
    planes[5] = 0.0  # collinear-triple sentinel row
    a = kernels.count_inliers_numba(pts, planes, thr)
    b = kernels.count_inliers_numpy(pts, planes, thr)
    np.testing.assert_array_equal(a, b)
    assert a[5] == -1


@needs_numba
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(0, 2000), tol=st.floats(0.005, 0.2))
def test_cluster_roots_agree(seed, n, tol):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.5, 0.5, size=(n, 3))
    a = kernels.cluster_roots_numba(pts, tol)
    b = kernels.cluster_roots_numpy(pts, tol)
    np.testing.assert_array_equal(a, b)
    if n:
        assert np.all(a <= np.arange(n))


@needs_numba
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(3, 2000))
def test_hulls_agree(seed, n):
    rng = np.random.default_rng(seed)
    pts = np.unique(np.round(rng.normal(size=(n, 2)), 3), axis=0)
    if len(pts) < 3:
        return
    a = kernels.monotone_chain_numba(pts)
    b = kernels.monotone_chain_numpy(pts)
    np.testing.assert_array_equal(a, b)


@needs_numba
@pytest.mark.parametrize("kind", ["tabletop", "doorknob", "pot_handle", "occluded"])
def test_raycasts_agree(kind):
    scene = occluded_table_scene(2) if kind == "occluded" else standard_scenes(kind, 4)
    pose = scene.labels.camera
    dirs = CameraIntrinsics().pixel_rays() @ pose.rotation
    origin = camera_center(pose)
    ta, la = kernels.raycast_numba(origin, dirs, scene.packed())
    tb, lb = kernels.raycast_numpy(origin, dirs, scene.packed())
    np.testing.assert_array_equal(la, lb)
    np.testing.assert_array_equal(ta, tb)


def test_empty_inputs():
    t, lab = kernels.raycast(np.zeros(3), np.array([[0, 0, 1.0]]), np.empty((0, kernels.PRIM_ROW)))
    assert np.isinf(t[0]) and lab[0] == -1
    assert len(kernels.cluster_roots(np.empty((0, 3)), 0.1)) == 0
    assert kernels.convex_hull_2d(np.empty((0, 2))).shape == (0, 2)
    assert len(kernels.convex_hull_2d(np.array([[0.0, 0], [0, 0], [1, 1]]))) == 2


def _detect_with(backend):
    env = dict(os.environ, GRASPCTX_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-m", "graspctx.cli", "detect", os.path.join(DATA, "tabletop_0002.frame"),
         "--imu", os.path.join(DATA, "tabletop_0002.imu")],
        env=env, capture_output=True, text=True, check=True)
    rec = json.loads(out.stdout)
    rec.pop("timings_ms")
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


@needs_numba
def test_backends_give_identical_records():
    assert _detect_with("numba") == _detect_with("numpy")
