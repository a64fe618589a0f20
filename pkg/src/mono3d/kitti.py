"""KITTI object-label and calibration text formats, plus difficulty rules."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .box3d import Box3D
from .camera import CameraIntrinsics, Point3


class LabelParseError(ValueError):
    pass


class CalibParseError(ValueError):
    pass


class Difficulty(enum.IntEnum):
    """Benchmark difficulty; smaller values pass stricter filters.

    A label of difficulty d is included when evaluating at any level >= d.
    """

    EASY = 0
    MODERATE = 1
    HARD = 2
    IGNORED = 3


@dataclass(frozen=True)
class DifficultyThresholds:
    """Official benchmark constants, indexed easy/moderate/hard."""

    min_height: tuple[float, float, float] = (40.0, 25.0, 25.0)
    max_occlusion: tuple[int, int, int] = (0, 1, 2)
    max_truncation: tuple[float, float, float] = (0.15, 0.30, 0.50)


DEFAULT_DIFFICULTY = DifficultyThresholds()


@dataclass
class ObjectLabel:
    """One row of a KITTI label file (15 fields, 16 with a detection score)."""

    class_name: str
    truncation: float
    occlusion: int
    alpha: float
    bbox: tuple[float, float, float, float]
    h: float
    w: float
    l: float
    x: float
    y: float
    z: float
    ry: float
    score: float | None = None

    @property
    def bbox_height(self) -> float:
        return self.bbox[3] - self.bbox[1]

    def box3d(self) -> Box3D:
        """The 3D box; undefined for DontCare rows (sentinel dimensions)."""
        return Box3D(Point3(self.x, self.y, self.z), self.h, self.w, self.l, self.ry)


def parse_object_line(line: str, lineno: int = 1) -> ObjectLabel:
    parts = line.split()
    if len(parts) not in (15, 16):
        raise LabelParseError(f"line {lineno}: expected 15 or 16 fields, got {len(parts)}")
    try:
        vals = [float(p) for p in parts[1:]]
    except ValueError as exc:
        raise LabelParseError(f"line {lineno}: non-numeric field: {exc}") from None
    return ObjectLabel(
        class_name=parts[0],
        truncation=vals[0],
        occlusion=int(vals[1]),
        alpha=vals[2],
        bbox=(vals[3], vals[4], vals[5], vals[6]),
        h=vals[7],
        w=vals[8],
        l=vals[9],
        x=vals[10],
        y=vals[11],
        z=vals[12],
        ry=vals[13],
        score=vals[14] if len(vals) == 15 else None,
    )


def parse_label_file(text: str) -> list[ObjectLabel]:
    """Parse a label file; blank lines are skipped, errors name their line."""
    labels = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        labels.append(parse_object_line(line, lineno))
    return labels


def serialize_label(lab: ObjectLabel) -> str:
    fields = [
        lab.class_name,
        f"{lab.truncation:.2f}",
        f"{lab.occlusion:d}",
        f"{lab.alpha:.2f}",
        f"{lab.bbox[0]:.2f}",
        f"{lab.bbox[1]:.2f}",
        f"{lab.bbox[2]:.2f}",
        f"{lab.bbox[3]:.2f}",
        f"{lab.h:.2f}",
        f"{lab.w:.2f}",
        f"{lab.l:.2f}",
        f"{lab.x:.2f}",
        f"{lab.y:.2f}",
        f"{lab.z:.2f}",
        f"{lab.ry:.2f}",
    ]
    if lab.score is not None:
        fields.append(f"{lab.score:.2f}")
    return " ".join(fields)


def serialize_labels(labels) -> str:
    """Labels back to KITTI text; floats use the conventional %.2f precision."""
    return "".join(serialize_label(lab) + "\n" for lab in labels)


def parse_calib(text: str, image_w: int = 1280, image_h: int = 384) -> CameraIntrinsics:
    """Extract the left-color-camera intrinsics from a calibration file.

    Only the "P2:" row is consulted; the image size is not stored in KITTI
    calib files and must be supplied by the caller.
    """
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped.startswith("P2:"):
            continue
        fields = stripped[3:].split()
        if len(fields) != 12:
            raise CalibParseError(f"P2 must have 12 entries, got {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise CalibParseError(f"non-numeric P2 entry: {exc}") from None
        p = np.array(vals).reshape(3, 4)
        return CameraIntrinsics(
            fx=p[0, 0],
            fy=p[1, 1],
            cu=p[0, 2],
            cv=p[1, 2],
            tx=p[0, 3],
            ty=p[1, 3],
            image_w=image_w,
            image_h=image_h,
        )
    raise CalibParseError("no P2 line found in calibration text")


def serialize_calib(cam: CameraIntrinsics) -> str:
    """Write a calibration file holding the P2 row."""
    values = " ".join(f"{v:.12e}" for v in cam.p2_matrix().ravel())
    return f"P2: {values}\n"


def difficulty(
    label: ObjectLabel, thresholds: DifficultyThresholds = DEFAULT_DIFFICULTY
) -> Difficulty:
    """Classify a ground-truth label by 2D height, occlusion, and truncation."""
    h2d = label.bbox_height
    for level in (Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD):
        i = int(level)
        if (
            h2d >= thresholds.min_height[i]
            and label.occlusion <= thresholds.max_occlusion[i]
            and label.truncation <= thresholds.max_truncation[i]
        ):
            return level
    return Difficulty.IGNORED
