"""Reference implementations of the training objectives.

Pure scalar oracles for verifying an external training stack: plain numpy
and math, no gradients, no reduction tricks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import wrap_angle
from .represent import RepKind

# Per-class (h, w, l) averages in meters, the usual KITTI training statistics.
DEFAULT_MEAN_DIMS: dict[str, tuple[float, float, float]] = {
    "Car": (1.53, 1.63, 3.88),
    "Pedestrian": (1.76, 0.66, 0.84),
    "Cyclist": (1.74, 0.60, 1.76),
}

DEFAULT_BIN_CENTERS = (0.0, math.pi / 2.0, math.pi, -math.pi / 2.0)


@dataclass
class LossConfig:
    focal_alpha: float = 2.0
    focal_beta: float = 4.0
    bin_centers: tuple[float, ...] = DEFAULT_BIN_CENTERS
    # a bin covers angles within pi / num_bins + bin_margin of its center
    bin_margin: float = 0.1
    class_mean_dims: dict[str, tuple[float, float, float]] = field(
        default_factory=lambda: dict(DEFAULT_MEAN_DIMS)
    )

    @property
    def num_bins(self) -> int:
        return len(self.bin_centers)

    @property
    def bin_halfwidth(self) -> float:
        return math.pi / self.num_bins + self.bin_margin


def focal_heatmap_loss(pred, gt, cfg: LossConfig | None = None) -> float:
    """Penalty-reduced focal loss between predicted and target heatmaps.

    Cells where the target is exactly 1 are positives; all other cells are
    penalty-reduced negatives weighted by (1 - gt)^beta. Normalized by the
    positive count (at least 1).
    """
    cfg = cfg if cfg is not None else LossConfig()
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise ValueError(f"heatmap shape mismatch: {pred.shape} vs {gt.shape}")
    if np.any(pred <= 0.0) or np.any(pred >= 1.0):
        raise ValueError("predicted heatmap values must lie strictly in (0, 1)")
    pos = gt == 1.0
    n = max(int(pos.sum()), 1)
    pos_term = (((1.0 - pred) ** cfg.focal_alpha) * np.log(pred))[pos].sum()
    neg_term = (((1.0 - gt) ** cfg.focal_beta) * (pred**cfg.focal_alpha) * np.log1p(-pred))[
        ~pos
    ].sum()
    return float(-(pos_term + neg_term) / n)


def offset_loss(pred, gt, kind) -> float:
    """Center-offset loss: L1 for inside objects, log-scale L1 for outside.

    Applied per coordinate and averaged; callers aggregate the two kinds
    separately.
    """
    if isinstance(kind, str):
        kind = RepKind(kind)
    diff = np.abs(np.asarray(pred, dtype=float) - np.asarray(gt, dtype=float))
    vals = diff if kind is RepKind.INSIDE else np.log1p(diff)
    return float(np.mean(vals))


def dim_loss(deltas, gt_dims, class_name: str, cfg: LossConfig | None = None) -> float:
    """L1 between mean dimensions scaled by exp(delta) and the true (h, w, l)."""
    cfg = cfg if cfg is not None else LossConfig()
    if class_name not in cfg.class_mean_dims:
        raise ValueError(f"no mean dimensions configured for class {class_name!r}")
    mean = np.asarray(cfg.class_mean_dims[class_name], dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    gt_dims = np.asarray(gt_dims, dtype=float)
    return float(np.abs(mean * np.exp(deltas) - gt_dims).sum())


def covering_bins(alpha: float, cfg: LossConfig | None = None) -> list[int]:
    """Indices of the orientation bins whose coverage contains the angle."""
    cfg = cfg if cfg is not None else LossConfig()
    return [
        i
        for i, c in enumerate(cfg.bin_centers)
        if abs(wrap_angle(alpha - c)) <= cfg.bin_halfwidth
    ]


def encode_orientation(alpha: float, cfg: LossConfig | None = None):
    """Ground-truth bin scores and per-bin (sin, cos) residuals for an angle.

    Scores are the negated absolute residuals, so argmax picks the nearest
    bin center and decode_orientation reproduces the angle exactly.
    """
    cfg = cfg if cfg is not None else LossConfig()
    residuals = np.array([wrap_angle(alpha - c) for c in cfg.bin_centers])
    logits = -np.abs(residuals)
    sincos = np.stack([np.sin(residuals), np.cos(residuals)], axis=1)
    return logits, sincos


def decode_orientation(bin_logits, residual_sincos, cfg: LossConfig | None = None) -> float:
    """Angle from bin scores and residuals: argmax bin center + atan2(sin, cos)."""
    cfg = cfg if cfg is not None else LossConfig()
    logits = np.asarray(bin_logits, dtype=float)
    sc = np.asarray(residual_sincos, dtype=float).reshape(cfg.num_bins, 2)
    b = int(np.argmax(logits))
    return wrap_angle(cfg.bin_centers[b] + math.atan2(sc[b, 0], sc[b, 1]))


def multibin_loss(
    bin_logits, residual_sincos, gt_alpha: float, cfg: LossConfig | None = None
) -> float:
    """Bin cross-entropy plus L1 on the (sin, cos) residuals of covering bins."""
    cfg = cfg if cfg is not None else LossConfig()
    logits = np.asarray(bin_logits, dtype=float)
    sc = np.asarray(residual_sincos, dtype=float).reshape(cfg.num_bins, 2)
    cover = covering_bins(gt_alpha, cfg)
    m = logits.max()
    logp = logits - (m + math.log(np.exp(logits - m).sum()))
    cls_term = -float(np.mean([logp[i] for i in cover]))
    res_terms = []
    for i in cover:
        r = wrap_angle(gt_alpha - cfg.bin_centers[i])
        res_terms.append(abs(sc[i, 0] - math.sin(r)) + abs(sc[i, 1] - math.cos(r)))
    return cls_term + float(np.mean(res_terms))


def keypoint_loss(pred_offsets, gt_offsets, inside_mask) -> float:
    """Inside-masked mean of per-keypoint L1 offset errors; 0 if fully masked."""
    pred = np.asarray(pred_offsets, dtype=float).reshape(-1, 2)
    gt = np.asarray(gt_offsets, dtype=float).reshape(-1, 2)
    mask = np.asarray(inside_mask, dtype=bool)
    if pred.shape != gt.shape or mask.shape[0] != pred.shape[0]:
        raise ValueError("keypoint offsets and mask must agree in length")
    if not mask.any():
        return 0.0
    per_kp = np.abs(pred - gt).sum(axis=1)
    return float(per_kp[mask].sum() / mask.sum())


def depth_unc_loss(z_pred: float, z_gt: float, sigma: float) -> float:
    """Uncertainty-scaled L1 depth loss with its log-sigma regularizer."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return abs(z_pred - z_gt) / sigma + math.log(sigma)


def keypoint_depth_loss(estimates, z_gt: float) -> float:
    """Sum of uncertainty-scaled L1 terms over the keypoint depth estimates.

    The log-sigma regularizer is dropped for invalid estimates, so raising
    their uncertainty strictly lowers the loss (pessimism is free there).
    """
    total = 0.0
    for e in estimates:
        total += abs(e.z - z_gt) / e.sigma
        if e.valid:
            total += math.log(e.sigma)
    return total


def giou_loss(a, b) -> float:
    """1 - GIoU for axis-aligned boxes (u1, v1, u2, v2); range [0, 2)."""
    au1, av1, au2, av2 = a
    bu1, bv1, bu2, bv2 = b
    if not (au1 < au2 and av1 < av2 and bu1 < bu2 and bv1 < bv2):
        raise ValueError(f"degenerate 2D box in {a} / {b}")
    iw = max(0.0, min(au2, bu2) - max(au1, bu1))
    ih = max(0.0, min(av2, bv2) - max(av1, bv1))
    inter = iw * ih
    union = (au2 - au1) * (av2 - av1) + (bu2 - bu1) * (bv2 - bv1) - inter
    hull = (max(au2, bu2) - min(au1, bu1)) * (max(av2, bv2) - min(av1, bv1))
    giou = inter / union - (hull - union) / hull
    return 1.0 - giou


def total_loss(parts) -> float:
    """Unit-weight sum of named loss terms."""
    return float(sum(parts.values()))
