"""Representative points for regular and truncated objects.

Objects whose projected 3D center falls inside the image keep that point as
their representative and occupy the interior of the feature map. Objects
whose center is pushed outside by truncation are represented by the point
where the segment from the 2D-box center toward the projected center exits
the image, so they live on the boundary ring of the feature map and their
(much larger) offsets are learned separately from the interior ones.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .box3d import Box3D
from .camera import CameraIntrinsics, Point2, project

# Half-open image domain [0, W) x [0, H): on-boundary coordinates are clamped
# this far inside the closed rectangle so they map onto the outermost cells.
EDGE_INSET = 1e-6


class RepKind(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class Representation:
    """Where an object lives on the feature grid and how its center is encoded.

    offset is (du, dv) in feature cells relative to the peak cell's origin:
    the projected center is always S * (cell + offset), for both kinds.
    """

    kind: RepKind
    xr: Point2
    xc: Point2
    xb: Point2
    offset: tuple[float, float]
    cell: tuple[int, int]
    side: str | None = None


def image_contains(q, image_w: float, image_h: float) -> bool:
    """Membership in the half-open image domain [0, W) x [0, H)."""
    u, v = q
    return 0.0 <= u < image_w and 0.0 <= v < image_h


def edge_intersection(xb, xc, image_w: float, image_h: float) -> Point2:
    """Boundary crossing of the segment from xb (inside) to xc (outside).

    Clips against the rectangle [0, W - EDGE_INSET] x [0, H - EDGE_INSET] and
    snaps the crossing coordinate exactly onto the boundary it exits through,
    so callers can identify the side by equality.
    """
    u_max = image_w - EDGE_INSET
    v_max = image_h - EDGE_INSET
    ub, vb = float(xb[0]), float(xb[1])
    uc, vc = float(xc[0]), float(xc[1])
    if not (0.0 < ub < u_max and 0.0 < vb < v_max):
        raise ValueError(f"xb=({ub}, {vb}) must lie strictly inside the image")
    if image_contains((uc, vc), image_w, image_h):
        raise ValueError(f"xc=({uc}, {vc}) must lie outside the image")
    du, dv = uc - ub, vc - vb
    t_exit = math.inf
    side = None
    for bound, start, delta, name in (
        (0.0, ub, du, "left"),
        (u_max, ub, du, "right"),
        (0.0, vb, dv, "top"),
        (v_max, vb, dv, "bottom"),
    ):
        moving_out = delta < 0 if bound == 0.0 else delta > 0
        if moving_out:
            t = (bound - start) / delta
            if t < t_exit:
                t_exit, side = t, name
    if side is None:
        raise ValueError("segment never leaves the image rectangle")
    qu = ub + t_exit * du
    qv = vb + t_exit * dv
    if side == "left":
        qu = 0.0
    elif side == "right":
        qu = u_max
    elif side == "top":
        qv = 0.0
    else:
        qv = v_max
    qu = min(max(qu, 0.0), u_max)
    qv = min(max(qv, 0.0), v_max)
    return Point2(qu, qv)


def boundary_side(q, image_w: float, image_h: float) -> str:
    """Which boundary a snapped edge point sits on (left/right before top/bottom)."""
    if q[0] == 0.0:
        return "left"
    if q[0] == image_w - EDGE_INSET:
        return "right"
    if q[1] == 0.0:
        return "top"
    if q[1] == image_h - EDGE_INSET:
        return "bottom"
    raise ValueError(f"point {q} is not on the image boundary")


def classify_and_represent(
    box: Box3D,
    box2d,
    cam: CameraIntrinsics,
    s: int,
    center_mode: str = "volumetric",
) -> Representation:
    """Classify an object as inside/outside and compute its grid placement.

    The projected 3D center xc is the image of the box's volumetric center
    (or of the bottom-face center when center_mode="bottom"). Inside objects
    peak at floor(xc / S); outside objects peak at the cell of the boundary
    intersection, with the offset still pointing at xc.
    """
    if s < 1 or int(s) != s:
        raise ValueError(f"downsample ratio must be a positive integer, got {s}")
    locx, locy, locz = box.location
    if center_mode == "volumetric":
        center3d = (locx, locy - box.h / 2.0, locz)
    elif center_mode == "bottom":
        center3d = (locx, locy, locz)
    else:
        raise ValueError(f"unknown center_mode {center_mode!r}")
    xc = project(center3d, cam)
    u1, v1, u2, v2 = box2d
    xb = Point2((u1 + u2) / 2.0, (v1 + v2) / 2.0)
    if image_contains(xc, cam.image_w, cam.image_h):
        kind, xr, side = RepKind.INSIDE, xc, None
    else:
        xr = edge_intersection(xb, xc, cam.image_w, cam.image_h)
        side = boundary_side(xr, cam.image_w, cam.image_h)
        kind = RepKind.OUTSIDE
    col = math.floor(xr.u / s)
    row = math.floor(xr.v / s)
    offset = (xc.u / s - col, xc.v / s - row)
    return Representation(kind=kind, xr=xr, xc=xc, xb=xb, offset=offset, cell=(row, col), side=side)


def gaussian_sigma_2d(
    box_w: float, box_h: float, s: int, rho: float = 1.0 / 6.0, min_sigma: float = 1.0
) -> float:
    """Kernel width (cells) for an interior splat, from the 2D box size in pixels."""
    return max(min_sigma, rho * min(box_w, box_h) / s)


def gaussian_sigma_edge(
    extent: float, s: int, rho: float = 1.0 / 6.0, min_sigma: float = 1.0
) -> float:
    """Kernel width (cells) for a boundary splat, from the box extent along the edge."""
    return max(min_sigma, rho * extent / s)


def splat_gaussian(hm: np.ndarray, cell, sigma: float) -> None:
    """Max-compose a circular Gaussian bump, peaking at exactly 1 on the cell."""
    if sigma <= 0:
        raise ValueError(f"splat radius must be positive, got sigma={sigma}")
    h, w = hm.shape
    r, c = cell
    if not (0 <= r < h and 0 <= c < w):
        raise ValueError(f"splat center {cell} outside the {h}x{w} grid")
    radius = max(1, int(math.ceil(3.0 * sigma)))
    r0, r1 = max(r - radius, 0), min(r + radius, h - 1)
    c0, c1 = max(c - radius, 0), min(c + radius, w - 1)
    rows = np.arange(r0, r1 + 1) - r
    cols = np.arange(c0, c1 + 1) - c
    bump = np.exp(-(rows[:, None] ** 2 + cols[None, :] ** 2) / (2.0 * sigma * sigma))
    region = hm[r0 : r1 + 1, c0 : c1 + 1]
    np.maximum(region, bump, out=region)


def splat_gaussian_edge(hm: np.ndarray, cell, sigma: float, horizontal: bool) -> None:
    """Max-compose a 1D Gaussian along the boundary ring; off-ring cells untouched."""
    if sigma <= 0:
        raise ValueError(f"splat radius must be positive, got sigma={sigma}")
    h, w = hm.shape
    r, c = cell
    radius = max(1, int(math.ceil(3.0 * sigma)))
    if horizontal:
        if r not in (0, h - 1):
            raise ValueError(f"horizontal edge splat must sit on the top or bottom row, got row {r}")
        c0, c1 = max(c - radius, 0), min(c + radius, w - 1)
        offs = np.arange(c0, c1 + 1) - c
        bump = np.exp(-(offs**2) / (2.0 * sigma * sigma))
        seg = hm[r, c0 : c1 + 1]
    else:
        if c not in (0, w - 1):
            raise ValueError(f"vertical edge splat must sit on the left or right column, got col {c}")
        r0, r1 = max(r - radius, 0), min(r + radius, h - 1)
        offs = np.arange(r0, r1 + 1) - r
        bump = np.exp(-(offs**2) / (2.0 * sigma * sigma))
        seg = hm[r0 : r1 + 1, c]
    np.maximum(seg, bump, out=seg)


def fcos_distances(xr, box2d) -> tuple[float, float, float, float]:
    """Distances (l, t, r, b) from a point to the four sides of a 2D box.

    Negative values are permitted: boundary representatives of truncated
    objects may sit outside the visible box.
    """
    u1, v1, u2, v2 = box2d
    if not (u1 < u2 and v1 < v2):
        raise ValueError(f"malformed 2D box {box2d}")
    u, v = float(xr[0]), float(xr[1])
    return (u - u1, v - v1, u2 - u, v2 - v)


def edge_ring_indices(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Clockwise boundary path starting at (0, 0); length 2*(h + w) - 4."""
    if h < 2 or w < 2:
        raise ValueError(f"edge ring needs at least a 2x2 map, got {h}x{w}")
    rows = np.concatenate(
        [
            np.zeros(w, dtype=int),
            np.arange(1, h),
            np.full(w - 1, h - 1, dtype=int),
            np.arange(h - 2, 0, -1),
        ]
    )
    cols = np.concatenate(
        [
            np.arange(w),
            np.full(h - 1, w - 1, dtype=int),
            np.arange(w - 2, -1, -1),
            np.zeros(h - 2, dtype=int),
        ]
    )
    return rows, cols


def extract_edge_vector(fm: np.ndarray) -> np.ndarray:
    """Boundary cells of an (h, w[, c]) map as a clockwise vector."""
    rows, cols = edge_ring_indices(fm.shape[0], fm.shape[1])
    return fm[rows, cols].copy()


def scatter_edge_vector(fm: np.ndarray, vec: np.ndarray) -> None:
    """Add a clockwise boundary vector back onto the same cells, in place."""
    rows, cols = edge_ring_indices(fm.shape[0], fm.shape[1])
    vec = np.asarray(vec)
    expected = fm[rows, cols].shape
    if vec.shape != expected:
        raise ValueError(f"edge vector shape {vec.shape} does not match ring shape {expected}")
    fm[rows, cols] += vec


def edge_fusion(fm: np.ndarray, transform=None) -> None:
    """Extract the boundary vector, optionally transform it, and add it back.

    transform stands in for learned processing of the edge vector; identity
    by default, so the bare round trip doubles every boundary cell.
    """
    vec = extract_edge_vector(fm)
    if transform is not None:
        vec = transform(vec)
    scatter_edge_vector(fm, vec)
