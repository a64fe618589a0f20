"""Dense target grids: ground-truth encoding and detection decoding.

The grid layout follows center-point detection heads: objects peak on a
per-class heatmap at feature resolution, and every regression channel read
at a peak is relative to that peak cell's origin, in cell units. Interior
peaks carry regular objects, boundary-ring peaks carry truncated ones; both
share the same reconstruction arithmetic, so noise-free targets decode back
to the exact inputs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .box3d import Box3D, Keypoints10, keypoints10
from .camera import CameraIntrinsics, Point2, Point3, alpha_to_ry, backproject, ry_to_alpha
from .depthsolve import (
    DepthEstimate,
    DepthSource,
    depth_to_raw,
    direct_depth,
    hard_ensemble,
    keypoint_depths,
    soft_ensemble,
)
from .kitti import ObjectLabel
from .losses import LossConfig, decode_orientation, encode_orientation
from .represent import (
    RepKind,
    classify_and_represent,
    fcos_distances,
    gaussian_sigma_2d,
    gaussian_sigma_edge,
    splat_gaussian,
    splat_gaussian_edge,
)

logger = logging.getLogger(__name__)

# Channel concatenation order for file storage.
CHANNEL_ORDER = (
    "heatmap",
    "offset",
    "box2d",
    "dim",
    "orient",
    "kpt",
    "depth",
    "depth_log_sigma",
    "kpt_log_sigma",
)


@dataclass
class CodecConfig:
    class_names: tuple[str, ...] = ("Car", "Pedestrian", "Cyclist")
    downsample: int = 4
    score_thresh: float = 0.1
    max_dets: int = 50
    # soft | hard | single:<direct|center|diag1|diag2>
    ensemble: str = "soft"
    # which 3D point projects to the encoded center: volumetric | bottom
    center_mode: str = "volumetric"
    sigma_floor: float = 0.01
    gauss_rho: float = 1.0 / 6.0
    gauss_min_sigma: float = 1.0
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self):
        if self.downsample < 1 or int(self.downsample) != self.downsample:
            raise ValueError(f"downsample must be a positive integer, got {self.downsample}")
        if self.max_dets < 1:
            raise ValueError(f"max_dets must be >= 1, got {self.max_dets}")
        if self.sigma_floor <= 0:
            raise ValueError(f"sigma_floor must be positive, got {self.sigma_floor}")
        known = self.ensemble in ("soft", "hard", "oracle") or self.ensemble.startswith("single:")
        if not known:
            raise ValueError(f"unknown ensemble mode {self.ensemble!r}")
        if self.center_mode not in ("volumetric", "bottom"):
            raise ValueError(f"unknown center_mode {self.center_mode!r}")
        missing = [c for c in self.class_names if c not in self.loss.class_mean_dims]
        if missing:
            raise ValueError(f"no mean dimensions configured for classes {missing}")


@dataclass
class HeadOutputs:
    """Per-cell prediction (or ground-truth target) grids at feature resolution.

    Channels, all shaped (c, Hf, Wf):
      heatmap         (C)     per-class peak scores in [0, 1]
      offset          (2)     projected-center offset (du, dv) from the cell
      box2d           (4)     2D-box distances (l, t, r, b), cell units
      dim             (3)     log-scale (h, w, l) offsets from class means
      orient          (3*N)   N bin scores then N (sin, cos) residual pairs
      kpt             (20)    keypoint offsets (du, dv) x 10 from the cell
      depth           (1)     raw depth regression z_o
      depth_log_sigma (1)     log uncertainty of the direct depth
      kpt_log_sigma   (3)     log uncertainties: center, diag1, diag2
    """

    heatmap: np.ndarray
    offset: np.ndarray
    box2d: np.ndarray
    dim: np.ndarray
    orient: np.ndarray
    kpt: np.ndarray
    depth: np.ndarray
    depth_log_sigma: np.ndarray
    kpt_log_sigma: np.ndarray
    s: int
    class_names: tuple[str, ...]

    @property
    def hf(self) -> int:
        return self.heatmap.shape[1]

    @property
    def wf(self) -> int:
        return self.heatmap.shape[2]

    @classmethod
    def zeros(
        cls,
        class_names,
        hf: int,
        wf: int,
        s: int,
        num_bins: int = 4,
        sigma_floor: float = 0.01,
    ) -> "HeadOutputs":
        def grid(c):
            return np.zeros((c, hf, wf))

        return cls(
            heatmap=grid(len(class_names)),
            offset=grid(2),
            box2d=grid(4),
            dim=grid(3),
            orient=grid(3 * num_bins),
            kpt=grid(20),
            depth=grid(1),
            depth_log_sigma=np.full((1, hf, wf), np.log(sigma_floor)),
            kpt_log_sigma=np.full((3, hf, wf), np.log(sigma_floor)),
            s=s,
            class_names=tuple(class_names),
        )

    def copy(self) -> "HeadOutputs":
        kwargs = {name: getattr(self, name).copy() for name in CHANNEL_ORDER}
        return HeadOutputs(s=self.s, class_names=self.class_names, **kwargs)


@dataclass
class Detection:
    class_name: str
    score: float
    box2d: tuple[float, float, float, float]
    box3d: Box3D
    xc: Point2
    depth_estimates: tuple[DepthEstimate, ...]
    z_soft: float


def encode_targets(labels, cam: CameraIntrinsics, cfg: CodecConfig | None = None) -> HeadOutputs:
    """Rasterize ground-truth labels into noise-free target grids.

    Labels with classes outside the configured set (DontCare included) are
    ignored; objects behind the camera are skipped with a warning count.
    """
    cfg = cfg if cfg is not None else CodecConfig()
    s = cfg.downsample
    hf = -(-cam.image_h // s)
    wf = -(-cam.image_w // s)
    ho = HeadOutputs.zeros(
        cfg.class_names, hf, wf, s, num_bins=cfg.loss.num_bins, sigma_floor=cfg.sigma_floor
    )
    num_bins = cfg.loss.num_bins
    skipped = 0
    for lab in labels:
        if lab.class_name not in cfg.class_names:
            continue
        if lab.z <= 0:
            skipped += 1
            continue
        box = lab.box3d()
        rep = classify_and_represent(box, lab.bbox, cam, s, cfg.center_mode)
        row, col = rep.cell
        cls_idx = cfg.class_names.index(lab.class_name)
        u1, v1, u2, v2 = lab.bbox
        if rep.kind is RepKind.INSIDE:
            sigma = gaussian_sigma_2d(u2 - u1, v2 - v1, s, cfg.gauss_rho, cfg.gauss_min_sigma)
            splat_gaussian(ho.heatmap[cls_idx], (row, col), sigma)
        else:
            horizontal = rep.side in ("top", "bottom")
            extent = (u2 - u1) if horizontal else (v2 - v1)
            sigma = gaussian_sigma_edge(extent, s, cfg.gauss_rho, cfg.gauss_min_sigma)
            splat_gaussian_edge(ho.heatmap[cls_idx], (row, col), sigma, horizontal)
        ho.offset[:, row, col] = rep.offset
        dl, dt, dr, db = fcos_distances((s * col, s * row), lab.bbox)
        ho.box2d[:, row, col] = (dl / s, dt / s, dr / s, db / s)
        mean = cfg.loss.class_mean_dims[lab.class_name]
        ho.dim[:, row, col] = np.log(np.array([lab.h, lab.w, lab.l]) / np.asarray(mean))
        alpha = ry_to_alpha(lab.ry, lab.x, lab.z)
        logits, sincos = encode_orientation(alpha, cfg.loss)
        ho.orient[:num_bins, row, col] = logits
        ho.orient[num_bins:, row, col] = sincos.reshape(-1)
        kps = keypoints10(box, cam)
        ho.kpt[:, row, col] = (kps.pts / s - np.array([col, row], dtype=float)).reshape(-1)
        ho.depth[0, row, col] = depth_to_raw(lab.z)
    if skipped:
        logger.warning("encode_targets: skipped %d object(s) behind the camera", skipped)
    return ho


def topk_peaks(heatmap, k: int, score_thresh: float = 0.0) -> list[tuple[float, int, int, int]]:
    """Cells that are 3x3 local maxima, as (score, class, row, col), strongest first.

    On plateaus only the lexicographically first cell survives: a peak must
    strictly exceed the neighbors that precede it in row-major order and be
    >= the rest. Output ties are ordered by (class, row, col).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    hm = np.asarray(heatmap, dtype=float)
    c, h, w = hm.shape
    padded = np.full((c, h + 2, w + 2), -np.inf)
    padded[:, 1:-1, 1:-1] = hm
    mask = hm > score_thresh
    for dr, dc in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
        mask &= hm > padded[:, 1 + dr : h + 1 + dr, 1 + dc : w + 1 + dc]
    for dr, dc in ((0, 1), (1, -1), (1, 0), (1, 1)):
        mask &= hm >= padded[:, 1 + dr : h + 1 + dr, 1 + dc : w + 1 + dc]
    idx = np.argwhere(mask)
    if len(idx) == 0:
        return []
    scores = hm[mask]
    order = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0], -scores))
    return [
        (float(scores[i]), int(idx[i, 0]), int(idx[i, 1]), int(idx[i, 2]))
        for i in order[:k]
    ]


def _select_depth(estimates, mode: str, z_soft: float) -> float:
    if mode == "soft":
        return z_soft
    if mode == "hard":
        return hard_ensemble(estimates)
    if mode == "oracle":
        raise ValueError(
            "oracle depth selection needs ground truth; use the ensemble report instead"
        )
    if mode.startswith("single:"):
        source = DepthSource[mode.split(":", 1)[1].upper()]
        est = next(e for e in estimates if e.source == source)
        if est.valid and np.isfinite(est.z):
            return est.z
        return z_soft  # unusable single estimator falls back to the ensemble
    raise ValueError(f"unknown ensemble mode {mode!r}")


def decode_detections(
    ho: HeadOutputs, cam: CameraIntrinsics, cfg: CodecConfig | None = None
) -> list[Detection]:
    """Decode head grids into ranked detections.

    Each heatmap peak is read locally: its cell's regression channels fully
    determine the projected center, 2D box, dimensions, orientation,
    keypoints, and the four depth estimates combined per the configured
    ensemble. Peaks with non-finite regressions or non-positive decoded
    depth are dropped (and counted in the log).
    """
    cfg = cfg if cfg is not None else CodecConfig()
    s = ho.s
    num_bins = cfg.loss.num_bins
    detections: list[Detection] = []
    dropped = 0
    for score, cls_idx, row, col in topk_peaks(ho.heatmap, cfg.max_dets, cfg.score_thresh):
        class_name = ho.class_names[cls_idx]
        du, dv = ho.offset[:, row, col]
        dist2d = ho.box2d[:, row, col]
        dim_delta = ho.dim[:, row, col]
        orient = ho.orient[:, row, col]
        kpt_off = ho.kpt[:, row, col]
        zo = ho.depth[0, row, col]
        log_sig = ho.depth_log_sigma[0, row, col]
        kpt_log_sig = ho.kpt_log_sigma[:, row, col]
        gathered = np.concatenate(
            [[du, dv], dist2d, dim_delta, orient, kpt_off, [zo, log_sig], kpt_log_sig]
        )
        if not np.all(np.isfinite(gathered)):
            dropped += 1
            continue
        xc = Point2(s * (col + du), s * (row + dv))
        mean_h, mean_w, mean_l = cfg.loss.class_mean_dims[class_name]
        h3 = mean_h * np.exp(dim_delta[0])
        w3 = mean_w * np.exp(dim_delta[1])
        l3 = mean_l * np.exp(dim_delta[2])
        alpha = decode_orientation(orient[:num_bins], orient[num_bins:], cfg.loss)
        dl, dt, dr, db = dist2d
        box2d = (s * (col - dl), s * (row - dt), s * (col + dr), s * (row + db))
        kpts = s * (kpt_off.reshape(10, 2) + np.array([col, row], dtype=float))
        inside = (
            (kpts[:, 0] >= 0)
            & (kpts[:, 0] < cam.image_w)
            & (kpts[:, 1] >= 0)
            & (kpts[:, 1] < cam.image_h)
        )
        kps = Keypoints10(pts=kpts, inside=inside)
        direct = DepthEstimate(
            z=direct_depth(zo), sigma=float(np.exp(log_sig)), valid=True, source=DepthSource.DIRECT
        )
        center, diag1, diag2 = keypoint_depths(kps, h3, cam.fy)
        center = replace(center, sigma=float(np.exp(kpt_log_sig[0])))
        diag1 = replace(diag1, sigma=float(np.exp(kpt_log_sig[1])))
        diag2 = replace(diag2, sigma=float(np.exp(kpt_log_sig[2])))
        estimates = (direct, center, diag1, diag2)
        z_soft = soft_ensemble(estimates)
        z_used = _select_depth(estimates, cfg.ensemble, z_soft)
        if not np.isfinite(z_used) or z_used <= 0:
            dropped += 1
            continue
        center3d = backproject(xc, z_used, cam)
        if cfg.center_mode == "volumetric":
            location = Point3(center3d.x, center3d.y + h3 / 2.0, center3d.z)
        else:
            location = center3d
        ry = alpha_to_ry(alpha, center3d.x, center3d.z)
        detections.append(
            Detection(
                class_name=class_name,
                score=score,
                box2d=box2d,
                box3d=Box3D(location, h3, w3, l3, ry),
                xc=xc,
                depth_estimates=estimates,
                z_soft=z_soft,
            )
        )
    if dropped:
        logger.warning("decode_detections: dropped %d peak(s) with unusable regressions", dropped)
    return detections


def redepth_detection(det: Detection, z: float, cam: CameraIntrinsics) -> Detection:
    """Rebuild a detection's 3D box under a different depth choice.

    Keeps the projected center and local orientation; location and global
    yaw are recomputed at the new depth. Used by estimator-comparison
    studies (single / hard / oracle re-scoring).
    """
    if z <= 0 or not np.isfinite(z):
        raise ValueError(f"replacement depth must be positive and finite, got {z}")
    box = det.box3d
    old_center = Point3(box.location.x, box.location.y - box.h / 2.0, box.location.z)
    alpha = ry_to_alpha(box.ry, old_center.x, old_center.z)
    center3d = backproject(det.xc, z, cam)
    location = Point3(center3d.x, center3d.y + box.h / 2.0, center3d.z)
    ry = alpha_to_ry(alpha, center3d.x, center3d.z)
    new_box = Box3D(location, box.h, box.w, box.l, ry)
    return replace(det, box3d=new_box)


def detection_to_label(det: Detection) -> ObjectLabel:
    """Detection as a KITTI row (sentinel -1 truncation/occlusion, with score)."""
    loc = det.box3d.location
    alpha = ry_to_alpha(det.box3d.ry, loc.x, loc.z)
    return ObjectLabel(
        class_name=det.class_name,
        truncation=-1.0,
        occlusion=-1,
        alpha=alpha,
        bbox=tuple(float(v) for v in det.box2d),
        h=det.box3d.h,
        w=det.box3d.w,
        l=det.box3d.l,
        x=loc.x,
        y=loc.y,
        z=loc.z,
        ry=det.box3d.ry,
        score=det.score,
    )


def _header(ho: HeadOutputs) -> dict:
    return {
        "Hf": ho.hf,
        "Wf": ho.wf,
        "S": ho.s,
        "class_names": list(ho.class_names),
        "channels": {name: int(getattr(ho, name).shape[0]) for name in CHANNEL_ORDER},
        "dtype": "<f4",
        "layout": "channels concatenated in listed order, each row-major",
    }


def _stack(ho: HeadOutputs) -> np.ndarray:
    return np.concatenate([getattr(ho, name) for name in CHANNEL_ORDER], axis=0)


def _unstack(data: np.ndarray, header: dict) -> HeadOutputs:
    hf, wf = int(header["Hf"]), int(header["Wf"])
    channels = header["channels"]
    total = sum(channels.values())
    data = data.reshape(total, hf, wf).astype(float)
    parts = {}
    start = 0
    for name in CHANNEL_ORDER:
        n = int(channels[name])
        parts[name] = data[start : start + n].copy()
        start += n
    return HeadOutputs(s=int(header["S"]), class_names=tuple(header["class_names"]), **parts)


def save_head_outputs(ho: HeadOutputs, path) -> Path:
    """Write grids to disk.

    A path ending in .json gets a single lossless JSON document; anything
    else gets little-endian float32 at <path>[.bin] plus a .bin.json sidecar
    describing shapes and channel counts.
    """
    path = Path(path)
    header = _header(ho)
    stacked = _stack(ho)
    if path.suffix == ".json":
        header["dtype"] = "f8"
        header["data"] = stacked.ravel().tolist()
        path.write_text(json.dumps(header))
        return path
    binpath = path if path.suffix == ".bin" else path.with_name(path.name + ".bin")
    stacked.astype("<f4").tofile(binpath)
    binpath.with_name(binpath.name + ".json").write_text(json.dumps(header, indent=1))
    return binpath


def load_head_outputs(path) -> HeadOutputs:
    """Read grids written by save_head_outputs (either format)."""
    path = Path(path)
    if path.suffix == ".json" and not path.name.endswith(".bin.json"):
        header = json.loads(path.read_text())
        data = np.asarray(header.pop("data"), dtype=float)
        return _unstack(data, header)
    if path.name.endswith(".bin.json"):
        binpath = path.with_name(path.name[: -len(".json")])
    elif path.suffix == ".bin":
        binpath = path
    else:
        binpath = path.with_name(path.name + ".bin")
    sidecar = binpath.with_name(binpath.name + ".json")
    if not sidecar.exists():
        raise FileNotFoundError(f"missing sidecar {sidecar}")
    header = json.loads(sidecar.read_text())
    data = np.fromfile(binpath, dtype="<f4")
    return _unstack(data, header)
