"""3D bounding boxes: corner geometry, projected keypoints, corner distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, Point3, project_points

# Corner layout in the box frame (length along x, width along z, y down):
# bottom face at y = 0 holds corners 0-3 counterclockwise seen from above,
# starting at (+l/2, +w/2); top face at y = -h holds corners 4-7 directly
# above. Vertical edge i joins corner i to corner i + 4.
_CORNER_SIGNS = np.array([[+1, +1], [-1, +1], [-1, -1], [+1, -1]], dtype=float)

KP_BOTTOM_CENTER = 8
KP_TOP_CENTER = 9
CENTER_EDGE = (KP_BOTTOM_CENTER, KP_TOP_CENTER)
DIAG1_EDGES = ((0, 4), (2, 6))
DIAG2_EDGES = ((1, 5), (3, 7))


@dataclass(frozen=True)
class Box3D:
    """Upright 3D box; location is the bottom-face center (KITTI convention)."""

    location: Point3
    h: float
    w: float
    l: float
    ry: float

    def __post_init__(self):
        if min(self.h, self.w, self.l) <= 0:
            raise ValueError(
                f"box dimensions must be positive, got h={self.h}, w={self.w}, l={self.l}"
            )


@dataclass(frozen=True)
class Keypoints10:
    """Projected box keypoints: corners 0-7, then bottom center, top center.

    Coordinates are kept raw even when they fall outside the image; the
    inside mask records membership in [0, W) x [0, H).
    """

    pts: np.ndarray
    inside: np.ndarray


def corners(box: Box3D) -> np.ndarray:
    """The 8 box corners in the camera frame, shape (8, 3)."""
    x = _CORNER_SIGNS[:, 0] * (box.l / 2.0)
    z = _CORNER_SIGNS[:, 1] * (box.w / 2.0)
    bottom = np.stack([x, np.zeros(4), z], axis=1)
    top = bottom + np.array([0.0, -box.h, 0.0])
    pts = np.concatenate([bottom, top], axis=0)
    c, s = np.cos(box.ry), np.sin(box.ry)
    rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return pts @ rot.T + np.asarray(box.location, dtype=float)


def bev_footprint(box: Box3D) -> np.ndarray:
    """Bottom-face polygon in the (x, z) ground plane, counterclockwise, (4, 2)."""
    return corners(box)[:4][:, [0, 2]]


def keypoints10(box: Box3D, cam: CameraIntrinsics) -> Keypoints10:
    """Project the 8 corners plus bottom/top face centers and flag in-image points."""
    locx, locy, locz = box.location
    pts3 = np.concatenate(
        [corners(box), [[locx, locy, locz], [locx, locy - box.h, locz]]], axis=0
    )
    if np.any(pts3[:, 2] <= 0):
        raise ValueError("box extends behind the camera; keypoints undefined")
    pts = project_points(pts3, cam)
    inside = (
        (pts[:, 0] >= 0)
        & (pts[:, 0] < cam.image_w)
        & (pts[:, 1] >= 0)
        & (pts[:, 1] < cam.image_h)
    )
    return Keypoints10(pts=pts, inside=inside)


def corner_loss(pred: Box3D, gt: Box3D) -> float:
    """Summed per-coordinate L1 distance between the two corner sets."""
    return float(np.abs(corners(pred) - corners(gt)).sum())
