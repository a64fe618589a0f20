"""Object-depth estimators and their uncertainty-guided combination.

Four estimators feed the ensemble: a direct regression value plus three
geometric solutions from the projected keypoints (the center vertical line
and the two pairs of diagonal vertical edges). Each carries an uncertainty
used as an inverse weight.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .box3d import CENTER_EDGE, DIAG1_EDGES, DIAG2_EDGES, Keypoints10


class DepthSource(enum.IntEnum):
    """Estimator identity; the integer order breaks uncertainty ties."""

    DIRECT = 0
    CENTER = 1
    DIAG1 = 2
    DIAG2 = 3


@dataclass(frozen=True)
class DepthEstimate:
    z: float
    sigma: float = 1.0
    valid: bool = True
    source: DepthSource = DepthSource.DIRECT

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def direct_depth(zo: float) -> float:
    """Map an unbounded regression output to a positive depth.

    Equals 1/sigmoid(zo) - 1; the closed form exp(-zo) avoids sigmoid
    underflow for very negative inputs and saturates to +inf gracefully.
    """
    try:
        return math.exp(-zo)
    except OverflowError:
        return math.inf


def depth_to_raw(z: float) -> float:
    """Inverse of direct_depth, used to build ground-truth regression targets."""
    if z <= 0:
        raise ValueError(f"depth must be positive, got {z}")
    return -math.log(z)


def line_depth(h_l: float, height: float, f: float) -> float:
    """Depth of a vertical 3D line from its pixel height and metric height."""
    if h_l <= 0:
        raise ValueError(f"degenerate pixel height {h_l}")
    if height <= 0 or f <= 0:
        raise ValueError(f"height and focal length must be positive, got H={height}, f={f}")
    return f * height / h_l


def keypoint_depths(
    kps: Keypoints10, height: float, f: float
) -> tuple[DepthEstimate, DepthEstimate, DepthEstimate]:
    """Center / diag1 / diag2 depth estimates from projected keypoints.

    Pixel heights are bottom minus top v-coordinates of each vertical line;
    diagonal estimates average the depths of their two edges. sigma is left
    at 1.0 for the caller to replace with decoded uncertainties. An estimate
    is invalid when any contributing keypoint leaves the image or a pixel
    height degenerates; with one usable edge left, a diagonal estimate keeps
    that edge's depth but stays flagged invalid.
    """
    if height <= 0 or f <= 0:
        raise ValueError(f"height and focal length must be positive, got H={height}, f={f}")
    v = kps.pts[:, 1]

    def estimate(edges, source):
        heights = [float(v[b] - v[t]) for b, t in edges]
        depths = [f * height / h for h in heights if h > 0]
        indices = [i for edge in edges for i in edge]
        ok = bool(all(kps.inside[i] for i in indices)) and len(depths) == len(edges)
        z = float(np.mean(depths)) if depths else math.nan
        return DepthEstimate(z=z, sigma=1.0, valid=ok and math.isfinite(z), source=source)

    return (
        estimate([CENTER_EDGE], DepthSource.CENTER),
        estimate(DIAG1_EDGES, DepthSource.DIAG1),
        estimate(DIAG2_EDGES, DepthSource.DIAG2),
    )


def _usable(estimates) -> list[DepthEstimate]:
    estimates = list(estimates)
    if not estimates:
        raise ValueError("no depth estimates to combine")
    valid = [e for e in estimates if e.valid]
    if valid:
        return valid
    direct = [e for e in estimates if e.source == DepthSource.DIRECT]
    if direct:
        return direct
    raise ValueError("all depth estimates are invalid and there is no direct fallback")


def soft_ensemble(estimates) -> float:
    """Inverse-uncertainty weighted average of the usable estimates."""
    cand = _usable(estimates)
    weight_sum = sum(1.0 / e.sigma for e in cand)
    return sum(e.z / e.sigma for e in cand) / weight_sum


def hard_ensemble(estimates) -> float:
    """Depth of the least-uncertain usable estimate; ties go to source order."""
    cand = _usable(estimates)
    return min(cand, key=lambda e: (e.sigma, int(e.source))).z


def oracle_select(estimates, z_true: float) -> float:
    """Depth of the usable estimate closest to the true depth (eval studies only).

    Ties keep the earliest estimate in the input order.
    """
    cand = _usable(estimates)
    return min(cand, key=lambda e: abs(e.z - z_true)).z
