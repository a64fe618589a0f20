import math

import numpy as np
import pytest

from mono3d.box3d import (
    Box3D,
    KP_BOTTOM_CENTER,
    KP_TOP_CENTER,
    bev_footprint,
    corner_loss,
    corners,
    keypoints10,
)
from mono3d.camera import CameraIntrinsics, Point3

CAM = CameraIntrinsics(fx=700.0, fy=700.0, cu=640.0, cv=192.0)


def random_box(rng, z_range=(4.0, 60.0)):
    return Box3D(
        location=Point3(rng.uniform(-25, 25), rng.uniform(-2, 3), rng.uniform(*z_range)),
        h=rng.uniform(0.5, 3.0),
        w=rng.uniform(0.3, 2.5),
        l=rng.uniform(0.5, 6.0),
        ry=rng.uniform(-math.pi, math.pi),
    )


def test_unit_box_corner_layout():
    box = Box3D(Point3(0.0, 0.0, 0.0), h=1.0, w=1.0, l=1.0, ry=0.0)
    pts = corners(box)
    np.testing.assert_allclose(pts[0], [0.5, 0.0, 0.5])
    np.testing.assert_allclose(pts[4], [0.5, -1.0, 0.5])
    # bottom face counterclockwise seen from above
    np.testing.assert_allclose(pts[1], [-0.5, 0.0, 0.5])
    np.testing.assert_allclose(pts[2], [-0.5, 0.0, -0.5])
    np.testing.assert_allclose(pts[3], [0.5, 0.0, -0.5])


def test_quarter_turn_swaps_footprint_axes():
    box = Box3D(Point3(0.0, 0.0, 0.0), h=1.0, w=2.0, l=4.0, ry=math.pi / 2)
    pts = corners(box)
    # (x, z) -> (z, -x) under the yaw rotation matrix
    np.testing.assert_allclose(pts[0], [1.0, 0.0, -2.0], atol=1e-12)


def test_invalid_dimensions_rejected():
    with pytest.raises(ValueError):
        Box3D(Point3(0, 0, 10), h=0.0, w=1.0, l=1.0, ry=0.0)


def test_corner_centroid_property():
    rng = np.random.default_rng(7)
    for _ in range(100):
        box = random_box(rng)
        centroid = corners(box).mean(axis=0)
        expected = np.asarray(box.location) + [0.0, -box.h / 2.0, 0.0]
        np.testing.assert_allclose(centroid, expected, atol=1e-9)


def test_vertical_edges_parallel_to_y():
    rng = np.random.default_rng(8)
    for _ in range(50):
        box = random_box(rng)
        pts = corners(box)
        np.testing.assert_allclose(pts[:4, [0, 2]], pts[4:, [0, 2]], atol=1e-9)


def test_bev_footprint_area_is_w_times_l():
    rng = np.random.default_rng(9)
    for _ in range(50):
        box = random_box(rng)
        poly = bev_footprint(box)
        x, z = poly[:, 0], poly[:, 1]
        area = 0.5 * abs(np.dot(x, np.roll(z, -1)) - np.dot(z, np.roll(x, -1)))
        assert area == pytest.approx(box.w * box.l, rel=1e-9)


def test_keypoints_on_axis_box():
    box = Box3D(Point3(0.0, 0.0, 20.0), h=1.6, w=1.6, l=4.0, ry=0.0)
    kps = keypoints10(box, CAM)
    np.testing.assert_allclose(kps.pts[KP_BOTTOM_CENTER], [CAM.cu, CAM.cv], atol=1e-12)
    # vertical pixel height of the center line is fy * h / z
    dv = kps.pts[KP_BOTTOM_CENTER, 1] - kps.pts[KP_TOP_CENTER, 1]
    assert dv == pytest.approx(CAM.fy * box.h / box.location.z, rel=1e-12)
    assert kps.inside.all()


def test_keypoints_inside_flags():
    far_left = Box3D(Point3(-40.0, 1.0, 12.0), h=1.5, w=1.6, l=4.0, ry=0.0)
    kps = keypoints10(far_left, CAM)
    assert not kps.inside.any()


def test_keypoints_behind_camera_error():
    box = Box3D(Point3(0.0, 0.0, 1.0), h=1.0, w=6.0, l=1.0, ry=0.0)
    with pytest.raises(ValueError):
        keypoints10(box, CAM)  # wide box pokes behind the image plane


def test_corner_loss_identity_and_translation():
    box = Box3D(Point3(1.0, 0.5, 15.0), h=1.5, w=1.7, l=4.2, ry=0.3)
    assert corner_loss(box, box) == 0.0
    shifted = Box3D(Point3(1.1, 0.5, 15.0), box.h, box.w, box.l, box.ry)
    assert corner_loss(shifted, box) == pytest.approx(8 * 0.1, rel=1e-9)


def test_corner_loss_translation_invariance():
    rng = np.random.default_rng(10)
    for _ in range(30):
        a, b = random_box(rng), random_box(rng)
        t = rng.uniform(-5, 5, 3)
        a_t = Box3D(Point3(*(np.asarray(a.location) + t)), a.h, a.w, a.l, a.ry)
        b_t = Box3D(Point3(*(np.asarray(b.location) + t)), b.h, b.w, b.l, b.ry)
        assert corner_loss(a_t, b_t) == pytest.approx(corner_loss(a, b), rel=1e-9, abs=1e-9)


def test_corner_loss_matches_bruteforce():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a, b = random_box(rng), random_box(rng)
        ca, cb = corners(a), corners(b)
        brute = sum(
            abs(ca[i][k] - cb[i][k]) for i in range(8) for k in range(3)
        )
        assert corner_loss(a, b) == pytest.approx(brute, rel=1e-12)
