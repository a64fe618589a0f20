"""Seeded synthetic scenes and target-space noise for pipeline studies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .box3d import Box3D, corners
from .camera import CameraIntrinsics, Point3, backproject, project, project_points, ry_to_alpha
from .decode import HeadOutputs
from .kitti import ObjectLabel
from .losses import DEFAULT_MEAN_DIMS
from .represent import classify_and_represent

DEFAULT_CAMERA = CameraIntrinsics(
    fx=721.5377, fy=721.5377, cu=640.0, cv=192.0, image_w=1280, image_h=384
)


@dataclass
class SceneSpec:
    """Parameters of one reproducible scene.

    truncation_fraction is the share of objects whose projected center must
    fall outside the image; those are sampled laterally past the left/right
    edge by a pixel offset in outside_offset_px, at depths in
    outside_depth_range so that part of the box stays visible.
    """

    seed: int = 0
    n_objects: int = 6
    class_mix: dict[str, float] = field(
        default_factory=lambda: {"Car": 0.6, "Pedestrian": 0.2, "Cyclist": 0.2}
    )
    depth_range: tuple[float, float] = (6.0, 45.0)
    outside_depth_range: tuple[float, float] = (6.0, 18.0)
    lateral_range: tuple[float, float] = (-18.0, 18.0)
    y_range: tuple[float, float] = (1.3, 1.9)
    truncation_fraction: float = 0.0
    camera: CameraIntrinsics = DEFAULT_CAMERA
    mean_dims: dict[str, tuple[float, float, float]] = field(
        default_factory=lambda: dict(DEFAULT_MEAN_DIMS)
    )
    dim_jitter: float = 0.12
    downsample: int = 4
    center_mode: str = "volumetric"
    min_peak_separation: int = 2
    outside_offset_px: tuple[float, float] = (8.0, 140.0)
    # vertical band (fraction of image height) for outside-object centers
    outside_v_band: tuple[float, float] = (0.1, 0.9)
    margin_px: float = 2.0
    min_box2d_px: float = 6.0
    max_attempts: int = 10_000

    def __post_init__(self):
        if not 0.0 <= self.truncation_fraction <= 1.0:
            raise ValueError(f"truncation_fraction must be in [0, 1], got {self.truncation_fraction}")
        if self.n_objects < 0:
            raise ValueError(f"n_objects must be non-negative, got {self.n_objects}")
        for name in ("depth_range", "outside_depth_range", "y_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValueError(f"{name} must be positive and ordered, got ({lo}, {hi})")
        # every generated box sits comfortably in front of the camera
        if self.depth_range[0] <= 1.0 or self.outside_depth_range[0] <= 1.0:
            raise ValueError("depth ranges must start beyond 1 m")


def _sample_object(rng, spec: SceneSpec, classes, probs, outside: bool):
    cam = spec.camera
    cls = classes[int(rng.choice(len(classes), p=probs))]
    mh, mw, ml = spec.mean_dims[cls]
    h = mh * math.exp(rng.normal(0.0, spec.dim_jitter))
    w = mw * math.exp(rng.normal(0.0, spec.dim_jitter))
    l = ml * math.exp(rng.normal(0.0, spec.dim_jitter))
    ry = rng.uniform(-math.pi, math.pi)
    if outside:
        z = rng.uniform(*spec.outside_depth_range)
        off = rng.uniform(*spec.outside_offset_px)
        uc = -off if rng.integers(2) == 0 else cam.image_w + off
        vc = rng.uniform(spec.outside_v_band[0] * cam.image_h, spec.outside_v_band[1] * cam.image_h)
        center3d = backproject((uc, vc), z, cam)
        x = center3d.x
        y = center3d.y + (h / 2.0 if spec.center_mode == "volumetric" else 0.0)
    else:
        z = rng.uniform(*spec.depth_range)
        x = rng.uniform(*spec.lateral_range)
        y = rng.uniform(*spec.y_range)
        cy = y - (h / 2.0 if spec.center_mode == "volumetric" else 0.0)
        uc, vc = project((x, cy, z), cam)
        m = spec.margin_px
        if not (m <= uc < cam.image_w - m and m <= vc < cam.image_h - m):
            return None
    box = Box3D(Point3(x, y, z), h, w, l, ry)
    pts3 = corners(box)
    if np.any(pts3[:, 2] <= 0.5):
        return None
    proj = project_points(pts3, cam)
    full = (proj[:, 0].min(), proj[:, 1].min(), proj[:, 0].max(), proj[:, 1].max())
    u1, v1 = max(full[0], 0.0), max(full[1], 0.0)
    u2 = min(full[2], cam.image_w - 1.0)
    v2 = min(full[3], cam.image_h - 1.0)
    if u2 - u1 < spec.min_box2d_px or v2 - v1 < spec.min_box2d_px:
        return None
    bbox = (float(u1), float(v1), float(u2), float(v2))
    try:
        rep = classify_and_represent(box, bbox, cam, spec.downsample, spec.center_mode)
    except ValueError:
        return None
    if (rep.kind.value == "outside") != outside:
        return None
    full_area = (full[2] - full[0]) * (full[3] - full[1])
    visible_area = (u2 - u1) * (v2 - v1)
    trunc = min(max(1.0 - visible_area / full_area, 0.0), 0.99)
    label = ObjectLabel(
        class_name=cls,
        truncation=float(trunc),
        occlusion=0,
        alpha=ry_to_alpha(ry, x, z),
        bbox=bbox,
        h=h,
        w=w,
        l=l,
        x=float(x),
        y=float(y),
        z=float(z),
        ry=ry,
    )
    return label, rep.cell


def gen_scene(spec: SceneSpec) -> tuple[list[ObjectLabel], CameraIntrinsics]:
    """Generate one scene, reproducible from the seed.

    Exactly round(truncation_fraction * n_objects) objects have their
    projected center outside the image. Peak cells on the feature grid are
    kept at least min_peak_separation apart (Chebyshev) so every object
    decodes to its own heatmap peak. Raises when the spec cannot be
    satisfied within max_attempts per object.
    """
    rng = np.random.default_rng(spec.seed)
    classes = sorted(spec.class_mix)
    probs = np.array([spec.class_mix[c] for c in classes], dtype=float)
    if probs.sum() <= 0:
        raise ValueError("class_mix weights must not all be zero")
    probs /= probs.sum()
    n_outside = int(round(spec.truncation_fraction * spec.n_objects))
    labels: list[ObjectLabel] = []
    cells: list[tuple[int, int]] = []
    for i in range(spec.n_objects):
        outside = i < n_outside
        for _ in range(spec.max_attempts):
            candidate = _sample_object(rng, spec, classes, probs, outside)
            if candidate is None:
                continue
            label, cell = candidate
            if all(
                max(abs(cell[0] - r), abs(cell[1] - c)) >= spec.min_peak_separation
                for r, c in cells
            ):
                labels.append(label)
                cells.append(cell)
                break
        else:
            raise ValueError(
                f"could not place object {i} ({'outside' if outside else 'inside'}) "
                f"within {spec.max_attempts} attempts"
            )
    return labels, spec.camera


@dataclass
class NoiseSpec:
    """Additive Gaussian noise in target space, per channel group.

    Units: offset/box2d/kpt sigmas are feature cells, dim_sigma is log-scale,
    depth_sigma applies to the raw depth channel. With honest_sigma the
    uncertainty channels are rewritten to the first-order error scale each
    noise source induces on its depth estimate, so ensemble weighting stays
    meaningful.
    """

    seed: int = 0
    offset_sigma: float = 0.0
    box2d_sigma: float = 0.0
    dim_sigma: float = 0.0
    kpt_sigma: float = 0.0
    depth_sigma: float = 0.0
    honest_sigma: bool = True
    sigma_floor: float = 0.01


def perturb(
    ho: HeadOutputs, noise: NoiseSpec, cam: CameraIntrinsics | None = None
) -> HeadOutputs:
    """Seeded additive noise on target grids; zero sigmas leave them untouched.

    cam is required when honest_sigma is set together with keypoint noise
    (the induced depth error scale depends on the focal length).
    """
    rng = np.random.default_rng(noise.seed)
    out = ho.copy()
    for name, sigma in (
        ("offset", noise.offset_sigma),
        ("box2d", noise.box2d_sigma),
        ("dim", noise.dim_sigma),
        ("kpt", noise.kpt_sigma),
        ("depth", noise.depth_sigma),
    ):
        if sigma > 0:
            arr = getattr(out, name)
            arr += rng.normal(0.0, sigma, arr.shape)
    if not noise.honest_sigma:
        return out
    z_clean = np.exp(-ho.depth[0])
    if noise.depth_sigma > 0:
        # z = exp(-(zo + eps)) => std(dz) ~ z * sigma_zo
        sd = np.maximum(z_clean * noise.depth_sigma, noise.sigma_floor)
        out.depth_log_sigma[0] = np.log(sd)
    if noise.kpt_sigma > 0:
        if cam is None:
            raise ValueError("honest keypoint sigma needs the camera intrinsics")
        cls = np.argmax(ho.heatmap, axis=0)
        mean_h = np.array([DEFAULT_MEAN_DIMS.get(c, (1.5, 1.6, 3.9))[0] for c in ho.class_names])
        height = mean_h[cls] * np.exp(ho.dim[0])
        h_px = cam.fy * height / z_clean  # center-line pixel height per cell
        px = ho.s * noise.kpt_sigma
        # a line height is a difference of two noisy coordinates (factor
        # sqrt 2); diagonal estimates average two independent lines
        s_center = np.maximum((z_clean / h_px) * math.sqrt(2.0) * px, noise.sigma_floor)
        s_diag = np.maximum((z_clean / h_px) * px, noise.sigma_floor)
        out.kpt_log_sigma[0] = np.log(s_center)
        out.kpt_log_sigma[1] = np.log(s_diag)
        out.kpt_log_sigma[2] = np.log(s_diag)
    return out
