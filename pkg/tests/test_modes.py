import numpy as np
import pytest

from graspctx.cloud import deproject, filter_invalid
from graspctx.modes import DetectionParams, Mode, detect_mode, plane_confidence
from graspctx.orientation import GravityEstimate, PlaneOrientation
from graspctx.scenegen import render_depth, standard_scenes, synth_imu
from graspctx.orientation import estimate_gravity

from conftest import box_surface, plane_grid
from test_segmentation import cylinder_surface

DOWN = GravityEstimate([0.0, 0.0, -1.0])


def test_plane_confidence():
    assert plane_confidence(0.0, 1.0) == 1.0
    assert plane_confidence(0.25, 1.0) == 0.75
    assert plane_confidence(1.0, 1.0) == 0.0
    assert plane_confidence(3.0, 1.0) == 0.0
    assert plane_confidence(0.0, 0.0) == 1.0


@pytest.mark.parametrize("kw", [dict(orientation_tol_deg=0), dict(orientation_tol_deg=45),
                                dict(extrusion_height=0), dict(cluster_tol=0),
                                dict(min_cluster_size=0), dict(pot_min_height=0),
                                dict(pot_max_minor=0)])
def test_params_validate(kw):
    with pytest.raises(ValueError):
        DetectionParams(**kw)


def tabletop_cloud():
    table = plane_grid(size=0.8, spacing=0.008)
    a = box_surface((0.12, 0.05, 0.08), 0.004, center=(-0.15, 0.0, 0.0))
    b = box_surface((0.08, 0.06, 0.10), 0.004, center=(0.15, 0.05, 0.0))
    # drop table samples under the boxes; the camera cannot see them
    under = ((np.abs(table[:, 0] + 0.15) <= 0.06) & (np.abs(table[:, 1]) <= 0.025)) | \
            ((np.abs(table[:, 0] - 0.15) <= 0.04) & (np.abs(table[:, 1] - 0.05) <= 0.03))
    return np.vstack([table[~under], a, b]) + [0, 0, -0.6]


def test_tabletop_with_two_boxes():
    timings = {}
    dec = detect_mode(tabletop_cloud(), DOWN, DetectionParams(), timings)
    assert dec.mode is Mode.TABLETOP
    assert dec.plane_orientation is PlaneOrientation.HORIZONTAL
    assert len(dec.objects) == 2
    widths = sorted(o.grasp.width for o in dec.objects)
    assert widths == pytest.approx([0.05, 0.06], abs=0.004)
    assert 0.0 < dec.confidence <= 1.0
    assert {"plane", "orientation", "objects"} <= set(timings)
    assert all(v >= 0 for v in timings.values())


def test_doorknob_on_vertical_plane():
    # door in the plane x = 0.5, knob sticking out toward the camera at the origin
    door = plane_grid(size=0.8, spacing=0.008)[:, [2, 0, 1]]
    knob = cylinder_surface([0.0, 0.0, 0.0], [-0.05, 0.0, 0.0], 0.025, spacing=0.003)
    keep = ~((np.abs(door[:, 1]) < 0.025) & (np.abs(door[:, 2]) < 0.025))
    cloud = np.vstack([door[keep], knob[knob[:, 0] < -0.016]]) + [0.5, 0, 0]
    dec = detect_mode(cloud, DOWN)
    assert dec.mode is Mode.DOORKNOB
    assert dec.plane_orientation is PlaneOrientation.VERTICAL
    assert len(dec.objects) == 1
    assert dec.objects[0].grasp.width == pytest.approx(0.05, abs=0.006)


def test_oblique_plane_is_unknown():
    plane = plane_grid(size=0.6, spacing=0.01)
    c, s = np.cos(np.radians(40)), np.sin(np.radians(40))
    cloud = plane @ np.array([[1, 0, 0], [0, c, -s], [0, s, c]]).T + [0, 0, 0.5]
    dec = detect_mode(cloud, DOWN)
    assert dec.mode is Mode.UNKNOWN
    assert dec.confidence == 0.0
    assert dec.plane_orientation is PlaneOrientation.OBLIQUE


def test_degenerate_inputs_are_unknown(rng):
    assert detect_mode(np.empty((0, 3)), DOWN).mode is Mode.UNKNOWN
    assert detect_mode(np.zeros((2, 3)), DOWN).mode is Mode.UNKNOWN
    scatter = rng.uniform(-0.5, 0.5, size=(3000, 3))
    dec = detect_mode(scatter, DOWN)
    assert dec.mode is Mode.UNKNOWN and dec.objects == ()


def _noiseless(kind, seed):
    scene = standard_scenes(kind, seed)
    pose = scene.labels.camera
    cloud = deproject(filter_invalid(render_depth(scene, pose)))
    return cloud, estimate_gravity([synth_imu(pose, scene.gravity)])


@pytest.mark.parametrize("kind", ["tabletop", "doorknob", "pot_handle"])
def test_noiseless_standard_scenes(kind):
    for seed in range(3):
        dec = detect_mode(*_noiseless(kind, seed))
        assert dec.mode.value == kind
        assert dec.objects
        assert 0.0 <= dec.confidence <= 1.0


def test_pot_handle_confidence_is_cluster_share():
    cloud, g = _noiseless("pot_handle", 0)
    dec = detect_mode(cloud, g)
    off = len(cloud) - (dec.plane.inlier_count if dec.plane is not None else 0)
    assert dec.confidence == pytest.approx(dec.objects[0].cluster.size / off)
