"""Rotated-box IoU and average precision for 3D detections.

Matching is greedy over a global score ordering: each detection takes the
highest-IoU unmatched ground-truth box of its class in its image, if that
IoU clears the class threshold. Ground truth outside the evaluated
difficulty bracket is "ignored": detections landing on it count as neither
hit nor miss, mirroring the benchmark semantics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .box3d import Box3D, bev_footprint
from .kitti import DEFAULT_DIFFICULTY, Difficulty, DifficultyThresholds, ObjectLabel, difficulty

# Clipping tolerance on signed distances; thinner intersections are empty.
EPS_DIST = 1e-9
MIN_AREA = 1e-12

DONTCARE = "DontCare"


def polygon_area(poly) -> float:
    """Absolute shoelace area of a 2D polygon."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def _line_intersection(p1, p2, a, b):
    d1 = (p2[0] - p1[0], p2[1] - p1[1])
    d2 = (b[0] - a[0], b[1] - a[1])
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) < 1e-300:
        return p2
    t = ((a[0] - p1[0]) * d2[1] - (a[1] - p1[1]) * d2[0]) / denom
    return (p1[0] + t * d1[0], p1[1] + t * d1[1])


def convex_clip(subject, clip) -> np.ndarray:
    """Sutherland-Hodgman intersection of a polygon with a convex CCW clip.

    Vertices on the clip boundary (within EPS_DIST) are kept. Returns an
    (N, 2) array, possibly empty.
    """
    output = [(float(v[0]), float(v[1])) for v in np.asarray(subject, dtype=float)]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        a = clip[i]
        b = clip[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]

        def signed(p):
            return ex * (p[1] - a[1]) - ey * (p[0] - a[0])

        inputs = output
        output = []
        s = inputs[-1]
        ds = signed(s)
        for e in inputs:
            de = signed(e)
            if de >= -EPS_DIST:
                if ds < -EPS_DIST:
                    output.append(_line_intersection(s, e, a, b))
                output.append(e)
            elif ds >= -EPS_DIST:
                output.append(_line_intersection(s, e, a, b))
            s, ds = e, de
    if not output:
        return np.empty((0, 2))
    return np.asarray(output, dtype=float)


def iou2d(a, b) -> float:
    """Axis-aligned IoU of (u1, v1, u2, v2) boxes."""
    iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = iw * ih
    if inter == 0.0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def _bev_intersection_area(a: Box3D, b: Box3D) -> float:
    poly = convex_clip(bev_footprint(a), bev_footprint(b))
    area = polygon_area(poly)
    return 0.0 if area < MIN_AREA else area


def iou_bev(a: Box3D, b: Box3D) -> float:
    """Rotated-rectangle IoU of the ground-plane footprints."""
    inter = _bev_intersection_area(a, b)
    union = a.w * a.l + b.w * b.l - inter
    return float(inter / union) if union > 0 else 0.0


def iou3d(a: Box3D, b: Box3D) -> float:
    """Volume IoU of two upright boxes (BEV intersection x vertical overlap)."""
    inter_area = _bev_intersection_area(a, b)
    if inter_area == 0.0:
        return 0.0
    # y grows downward, so a box spans [y - h, y]
    y_overlap = min(a.location.y, b.location.y) - max(a.location.y - a.h, b.location.y - b.h)
    if y_overlap <= 0:
        return 0.0
    inter = inter_area * y_overlap
    union = a.h * a.w * a.l + b.h * b.w * b.l - inter
    return float(inter / union)


@dataclass
class EvalConfig:
    iou_thresholds: dict[str, float] = field(
        default_factory=lambda: {"Car": 0.7, "Pedestrian": 0.5, "Cyclist": 0.5}
    )
    mode: str = "R40"
    difficulties: tuple[Difficulty, ...] = (
        Difficulty.EASY,
        Difficulty.MODERATE,
        Difficulty.HARD,
    )
    # detections overlapping a DontCare region this much are neither TP nor FP
    dontcare_iou: float = 0.5
    thresholds: DifficultyThresholds = DEFAULT_DIFFICULTY

    def __post_init__(self):
        for cls, thr in self.iou_thresholds.items():
            if not 0.0 < thr <= 1.0:
                raise ValueError(f"IoU threshold for {cls!r} must be in (0, 1], got {thr}")
        if self.mode not in ("R11", "R40"):
            raise ValueError(f"mode must be R11 or R40, got {self.mode!r}")


@dataclass
class PRCurve:
    """(recall, precision) pairs in score order; recall is non-decreasing."""

    points: list[tuple[float, float]]


@dataclass
class APResult:
    class_name: str
    difficulty: Difficulty
    n_gt: int
    ap_r11: float | None
    ap_r40: float | None
    curve: PRCurve


@dataclass
class EvalReport:
    results: list[APResult]
    mode: str = "R40"

    def ap(self, class_name: str, diff: Difficulty, mode: str | None = None) -> float | None:
        mode = mode or self.mode
        for r in self.results:
            if r.class_name == class_name and r.difficulty == diff:
                return r.ap_r11 if mode == "R11" else r.ap_r40
        raise KeyError(f"no result for ({class_name}, {diff})")

    def to_text(self) -> str:
        lines = [f"{'class':<12} {'difficulty':<10} {'n_gt':>5} {'AP_R11':>8} {'AP_R40':>8}"]
        for r in self.results:
            ap11 = f"{r.ap_r11:.4f}" if r.ap_r11 is not None else "n/a"
            ap40 = f"{r.ap_r40:.4f}" if r.ap_r40 is not None else "n/a"
            lines.append(
                f"{r.class_name:<12} {r.difficulty.name.lower():<10} {r.n_gt:>5} {ap11:>8} {ap40:>8}"
            )
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "results": [
                {
                    "class": r.class_name,
                    "difficulty": r.difficulty.name.lower(),
                    "n_gt": r.n_gt,
                    "ap_r11": r.ap_r11,
                    "ap_r40": r.ap_r40,
                    "pr_curve": r.curve.points,
                }
                for r in self.results
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def interpolated_ap(points, n_points: int) -> float:
    """Mean of max-precision-at-recall over n interpolation samples.

    R11 samples {0, 0.1, ..., 1.0}; R40 samples {1/40, ..., 40/40}.
    """
    if n_points == 11:
        samples = [i / 10.0 for i in range(11)]
    elif n_points == 40:
        samples = [(i + 1) / 40.0 for i in range(40)]
    else:
        raise ValueError(f"unsupported interpolation point count {n_points}")
    total = 0.0
    for r in samples:
        precisions = [p for rec, p in points if rec >= r - 1e-12]
        total += max(precisions) if precisions else 0.0
    return total / len(samples)


def _evaluate_one(gt, det, cls: str, thr: float, level: Difficulty, cfg: EvalConfig) -> APResult:
    images = sorted(set(gt) | set(det))
    valid: dict[str, list[ObjectLabel]] = {}
    ignored: dict[str, list[ObjectLabel]] = {}
    dontcare: dict[str, list] = {}
    n_valid = 0
    for img in images:
        v, ig, dc = [], [], []
        for lab in gt.get(img, []):
            if lab.class_name == DONTCARE:
                dc.append(lab.bbox)
            elif lab.class_name == cls:
                if difficulty(lab, cfg.thresholds) <= level:
                    v.append(lab)
                else:
                    ig.append(lab)
        valid[img], ignored[img], dontcare[img] = v, ig, dc
        n_valid += len(v)

    flat = [
        (d.score, img, d)
        for img in images
        for d in det.get(img, [])
        if d.class_name == cls
    ]
    flat.sort(key=lambda t: -t[0])

    matched = {img: [False] * len(valid[img]) for img in images}
    outcomes: list[bool] = []  # one entry per counted detection, True = TP
    for score, img, d in flat:
        dbox = d.box3d()
        best_iou, best_j = 0.0, -1
        for j, g in enumerate(valid[img]):
            if matched[img][j]:
                continue
            overlap = iou3d(dbox, g.box3d())
            if overlap >= thr and overlap > best_iou:
                best_iou, best_j = overlap, j
        if best_j >= 0:
            matched[img][best_j] = True
            outcomes.append(True)
            continue
        if any(iou3d(dbox, g.box3d()) >= thr for g in ignored[img]):
            continue
        if any(iou2d(d.bbox, box) > cfg.dontcare_iou for box in dontcare[img]):
            continue
        outcomes.append(False)

    points: list[tuple[float, float]] = []
    if n_valid > 0 and outcomes:
        tp = np.cumsum([1 if ok else 0 for ok in outcomes])
        fp = np.cumsum([0 if ok else 1 for ok in outcomes])
        recall = tp / n_valid
        precision = tp / np.maximum(tp + fp, 1)
        points = list(zip(recall.tolist(), precision.tolist()))
    ap11 = interpolated_ap(points, 11) if n_valid > 0 else None
    ap40 = interpolated_ap(points, 40) if n_valid > 0 else None
    return APResult(cls, level, n_valid, ap11, ap40, PRCurve(points))


def evaluate(gt, det, cfg: EvalConfig | None = None) -> EvalReport:
    """AP per class and difficulty over per-image label/detection dicts.

    gt and det map image keys to lists of ObjectLabel; detections must carry
    scores and use classes present in the config's threshold table.
    """
    cfg = cfg if cfg is not None else EvalConfig()
    for img, dets in det.items():
        for d in dets:
            if d.class_name not in cfg.iou_thresholds:
                raise ValueError(
                    f"detection class {d.class_name!r} in image {img!r} has no IoU threshold"
                )
            if d.score is None:
                raise ValueError(f"detection without score in image {img!r}")
    results = []
    for cls in sorted(cfg.iou_thresholds):
        for level in cfg.difficulties:
            results.append(_evaluate_one(gt, det, cls, cfg.iou_thresholds[cls], level, cfg))
    return EvalReport(results=results, mode=cfg.mode)
