"""Pinhole camera model and yaw conversions in the KITTI camera frame.

Coordinates follow the rectified-camera convention: x right, y down,
z forward along the optical axis. All yaw angles live in (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

_TWO_PI = 2.0 * math.pi


class Point2(NamedTuple):
    u: float
    v: float


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters of a rectified camera (KITTI P2 layout).

    tx and ty are the projective translation terms P[0,3] / P[1,3] that the
    rectification chain folds into the projection matrix; they are zero for
    a plain pinhole camera with equal focal lengths.
    """

    fx: float
    fy: float
    cu: float
    cv: float
    tx: float = 0.0
    ty: float = 0.0
    image_w: int = 1280
    image_h: int = 384

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.image_w <= 0 or self.image_h <= 0:
            raise ValueError(f"image size must be positive, got {self.image_w}x{self.image_h}")

    def p2_matrix(self) -> np.ndarray:
        """Row-major 3x4 projection matrix."""
        return np.array(
            [
                [self.fx, 0.0, self.cu, self.tx],
                [0.0, self.fy, self.cv, self.ty],
                [0.0, 0.0, 1.0, 0.0],
            ]
        )


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    r = math.remainder(theta, _TWO_PI)
    if r <= -math.pi:
        r += _TWO_PI
    return r


def project(p, cam: CameraIntrinsics) -> Point2:
    """Project a camera-frame point to pixel coordinates."""
    x, y, z = p
    if z <= 0:
        raise ValueError(f"cannot project point with non-positive depth z={z}")
    return Point2(
        (cam.fx * x + cam.tx) / z + cam.cu,
        (cam.fy * y + cam.ty) / z + cam.cv,
    )


def backproject(q, z: float, cam: CameraIntrinsics) -> Point3:
    """Lift a pixel back into the camera frame at the given depth."""
    if z <= 0:
        raise ValueError(f"cannot backproject to non-positive depth z={z}")
    u, v = q
    return Point3(
        ((u - cam.cu) * z - cam.tx) / cam.fx,
        ((v - cam.cv) * z - cam.ty) / cam.fy,
        z,
    )


def project_points(pts, cam: CameraIntrinsics) -> np.ndarray:
    """Vectorized projection of an (N, 3) array; returns (N, 2) pixels."""
    pts = np.asarray(pts, dtype=float)
    z = pts[:, 2]
    if np.any(z <= 0):
        raise ValueError("cannot project points with non-positive depth")
    u = (cam.fx * pts[:, 0] + cam.tx) / z + cam.cu
    v = (cam.fy * pts[:, 1] + cam.ty) / z + cam.cv
    return np.stack([u, v], axis=1)


def alpha_to_ry(alpha: float, x: float, z: float) -> float:
    """Convert local (viewing-relative) yaw to global camera-frame yaw."""
    if z <= 0:
        raise ValueError(f"viewing angle undefined for non-positive depth z={z}")
    return wrap_angle(alpha + math.atan2(x, z))


def ry_to_alpha(ry: float, x: float, z: float) -> float:
    """Convert global camera-frame yaw to local (viewing-relative) yaw."""
    if z <= 0:
        raise ValueError(f"viewing angle undefined for non-positive depth z={z}")
    return wrap_angle(ry - math.atan2(x, z))
