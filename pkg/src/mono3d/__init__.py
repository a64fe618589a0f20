"""Monocular 3D detection toolkit: geometry, target codecs, depth ensembles,
and KITTI-style AP3D evaluation, verifiable end to end on synthetic scenes."""

__version__ = "0.1.0"

from .box3d import Box3D, Keypoints10, corner_loss, corners, keypoints10
from .camera import (
    CameraIntrinsics,
    Point2,
    Point3,
    alpha_to_ry,
    backproject,
    project,
    ry_to_alpha,
    wrap_angle,
)
from .decode import (
    CodecConfig,
    Detection,
    HeadOutputs,
    decode_detections,
    detection_to_label,
    encode_targets,
    load_head_outputs,
    save_head_outputs,
    topk_peaks,
)
from .depthsolve import (
    DepthEstimate,
    DepthSource,
    direct_depth,
    hard_ensemble,
    keypoint_depths,
    line_depth,
    oracle_select,
    soft_ensemble,
)
from .eval3d import EvalConfig, EvalReport, convex_clip, evaluate, iou2d, iou3d, iou_bev
from .kitti import (
    Difficulty,
    ObjectLabel,
    difficulty,
    parse_calib,
    parse_label_file,
    serialize_calib,
    serialize_labels,
)
from .losses import LossConfig
from .represent import (
    RepKind,
    Representation,
    classify_and_represent,
    edge_intersection,
    fcos_distances,
)
from .synthgen import NoiseSpec, SceneSpec, gen_scene, perturb
