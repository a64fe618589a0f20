"""Command-line workflows: synth, encode, decode, eval, ensemble-report.

Every command is deterministic given its inputs and --seed; config values
come from an optional JSON file with command-line flags taking precedence.
Exit codes: 0 success, 1 named runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .camera import CameraIntrinsics
from .decode import (
    CodecConfig,
    decode_detections,
    detection_to_label,
    encode_targets,
    load_head_outputs,
    redepth_detection,
    save_head_outputs,
)
from .depthsolve import DepthSource, hard_ensemble, oracle_select
from .eval3d import EvalConfig, evaluate, iou2d
from .kitti import parse_calib, parse_label_file, serialize_calib, serialize_labels
from .losses import LossConfig
from .synthgen import NoiseSpec, SceneSpec, gen_scene, perturb

_EXIT_NOTE = "exit codes: 0 success, 1 runtime error, 2 usage error"


@dataclass
class RunConfig:
    downsample: int = 4
    image_w: int = 1280
    image_h: int = 384
    score_thresh: float = 0.1
    max_dets: int = 50
    ensemble: str = "soft"
    center_mode: str = "volumetric"
    eval_mode: str = "R40"
    classes: tuple[str, ...] = ("Car", "Pedestrian", "Cyclist")
    iou_thresholds: dict[str, float] = field(
        default_factory=lambda: {"Car": 0.7, "Pedestrian": 0.5, "Cyclist": 0.5}
    )
    sigma_floor: float = 0.01
    jobs: int = 1
    seed: int | None = None

    @classmethod
    def load(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        """Build from an optional JSON file, then apply non-None flag overrides."""
        values: dict = {}
        if config_path:
            raw = json.loads(Path(config_path).read_text())
            known = {f.name for f in fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            values.update(raw)
        for key, val in overrides.items():
            if val is not None:
                values[key] = val
        if "classes" in values:
            values["classes"] = tuple(values["classes"])
        return cls(**values)

    def codec_config(self) -> CodecConfig:
        return CodecConfig(
            class_names=tuple(self.classes),
            downsample=self.downsample,
            score_thresh=self.score_thresh,
            max_dets=self.max_dets,
            ensemble=self.ensemble,
            center_mode=self.center_mode,
            sigma_floor=self.sigma_floor,
            loss=LossConfig(),
        )

    def eval_config(self) -> EvalConfig:
        return EvalConfig(iou_thresholds=dict(self.iou_thresholds), mode=self.eval_mode)


def _run_config(args) -> RunConfig:
    overrides = {
        name: getattr(args, name, None)
        for name in (
            "downsample",
            "image_w",
            "image_h",
            "score_thresh",
            "max_dets",
            "ensemble",
            "center_mode",
            "eval_mode",
            "jobs",
            "seed",
        )
    }
    return RunConfig.load(getattr(args, "config", None), overrides)


def _frames(directory: Path, pattern: str = "*.txt") -> list[Path]:
    frames = sorted(directory.glob(pattern))
    if not frames:
        raise FileNotFoundError(f"no {pattern} files in {directory}")
    return frames


def _head_files(directory: Path) -> list[Path]:
    files = [p for p in directory.iterdir() if p.suffix == ".bin"]
    files += [
        p
        for p in directory.iterdir()
        if p.suffix == ".json" and not p.name.endswith(".bin.json")
    ]
    if not files:
        raise FileNotFoundError(f"no head-output files in {directory}")
    return sorted(files)


def _read_calib(calib_dir: Path, stem: str, cfg: RunConfig) -> CameraIntrinsics:
    path = calib_dir / f"{stem}.txt"
    return parse_calib(path.read_text(), image_w=cfg.image_w, image_h=cfg.image_h)


def _scene_spec_from_dict(raw: dict, seed: int) -> SceneSpec:
    kwargs = dict(raw)
    kwargs.pop("n_scenes", None)
    cam = kwargs.pop("camera", None)
    if cam is not None:
        kwargs["camera"] = CameraIntrinsics(**cam)
    for key in ("class_mix", "mean_dims"):
        if key in kwargs:
            kwargs[key] = dict(kwargs[key])
    for key, val in list(kwargs.items()):
        if isinstance(val, list):
            kwargs[key] = tuple(val)
    kwargs["seed"] = seed
    return SceneSpec(**kwargs)


def cmd_synth(args) -> int:
    raw = json.loads(Path(args.spec).read_text()) if args.spec else {}
    n_scenes = args.scenes if args.scenes is not None else int(raw.get("n_scenes", 1))
    base_seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    out = Path(args.out)
    label_dir = out / "label_2"
    calib_dir = out / "calib"
    label_dir.mkdir(parents=True, exist_ok=True)
    calib_dir.mkdir(parents=True, exist_ok=True)
    total = 0
    for i in range(n_scenes):
        spec = _scene_spec_from_dict(raw, seed=base_seed + i)
        labels, cam = gen_scene(spec)
        stem = f"{i:06d}"
        (label_dir / f"{stem}.txt").write_text(serialize_labels(labels))
        (calib_dir / f"{stem}.txt").write_text(serialize_calib(cam))
        total += len(labels)
    print(f"wrote {n_scenes} scene(s), {total} object(s) under {out}")
    return 0


def _encode_one(label_path: str, calib_path: str, out_path: str, cfg: RunConfig,
                noise: NoiseSpec | None, frame_index: int) -> str:
    labels = parse_label_file(Path(label_path).read_text())
    cam = parse_calib(Path(calib_path).read_text(), image_w=cfg.image_w, image_h=cfg.image_h)
    ho = encode_targets(labels, cam, cfg.codec_config())
    if noise is not None:
        frame_noise = NoiseSpec(**{**noise.__dict__, "seed": noise.seed + frame_index})
        ho = perturb(ho, frame_noise, cam)
    return str(save_head_outputs(ho, out_path))


def cmd_encode(args) -> int:
    cfg = _run_config(args)
    labels_dir = Path(args.labels)
    calib_dir = Path(args.calib)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    noise = None
    if args.noise:
        noise_raw = json.loads(Path(args.noise).read_text())
        noise = NoiseSpec(**noise_raw)
        if cfg.seed is not None:
            noise = NoiseSpec(**{**noise.__dict__, "seed": cfg.seed})
    ext = ".json" if args.format == "json" else ".bin"
    tasks = []
    for i, label_path in enumerate(_frames(labels_dir)):
        stem = label_path.stem
        calib_path = calib_dir / f"{stem}.txt"
        if not calib_path.exists():
            raise FileNotFoundError(f"missing calibration file {calib_path}")
        tasks.append((str(label_path), str(calib_path), str(out / (stem + ext)), cfg, noise, i))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            written = list(pool.map(_encode_one, *zip(*tasks)))
    else:
        written = [_encode_one(*t) for t in tasks]
    print(f"encoded {len(written)} frame(s) into {out}")
    return 0


def _decode_one(head_path: str, calib_path: str, out_path: str, cfg: RunConfig) -> int:
    ho = load_head_outputs(head_path)
    cam = parse_calib(Path(calib_path).read_text(), image_w=cfg.image_w, image_h=cfg.image_h)
    dets = decode_detections(ho, cam, cfg.codec_config())
    labels = [detection_to_label(d) for d in dets]
    Path(out_path).write_text(serialize_labels(labels))
    return len(labels)


def cmd_decode(args) -> int:
    cfg = _run_config(args)
    heads_dir = Path(args.heads)
    calib_dir = Path(args.calib)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    for head_path in _head_files(heads_dir):
        stem = head_path.stem
        calib_path = calib_dir / f"{stem}.txt"
        if not calib_path.exists():
            raise FileNotFoundError(f"missing calibration file {calib_path}")
        tasks.append((str(head_path), str(calib_path), str(out / f"{stem}.txt"), cfg))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            counts = list(pool.map(_decode_one, *zip(*tasks)))
    else:
        counts = [_decode_one(*t) for t in tasks]
    print(f"decoded {len(counts)} frame(s), {sum(counts)} detection(s) into {out}")
    return 0


def _read_label_dir(directory: Path) -> dict:
    return {p.stem: parse_label_file(p.read_text()) for p in _frames(directory)}


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    gt = _read_label_dir(Path(args.gt))
    pred_dir = Path(args.pred)
    pred = {}
    for stem in gt:
        path = pred_dir / f"{stem}.txt"
        pred[stem] = parse_label_file(path.read_text()) if path.exists() else []
    report = evaluate(gt, pred, cfg.eval_config())
    text = report.to_text()
    print(text, end="")
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        prefix.with_suffix(".txt").write_text(text)
        prefix.with_suffix(".json").write_text(report.to_json())
        print(f"reports written to {prefix.with_suffix('.txt')} and {prefix.with_suffix('.json')}")
    return 0


ESTIMATOR_MODES = (
    "single:direct",
    "single:center",
    "single:diag1",
    "single:diag2",
    "hard",
    "soft",
    "oracle",
)


def ensemble_report(gt, heads, calibs, cfg: RunConfig) -> dict:
    """Per-estimator depth accuracy and AP over a decoded dataset.

    Detections are decoded once (soft ensemble), matched to ground truth by
    2D IoU > 0.5, then re-scored with each estimator's depth choice; the
    oracle picks the estimate closest to the matched ground-truth depth.
    Returns {"depth_mae": {mode: float}, "ap": {mode: EvalReport}, "n_matched": int}.
    """
    codec = cfg.codec_config()
    codec.ensemble = "soft"
    abs_err: dict[str, list[float]] = {m: [] for m in ESTIMATOR_MODES}
    per_mode_labels: dict[str, dict] = {m: {} for m in ESTIMATOR_MODES}
    n_matched = 0
    for stem in sorted(heads):
        cam = calibs[stem]
        dets = decode_detections(heads[stem], cam, codec)
        gt_here = [g for g in gt.get(stem, []) if g.class_name in codec.class_names]
        taken = [False] * len(gt_here)
        matches: dict[int, int] = {}
        for i in sorted(range(len(dets)), key=lambda j: -dets[j].score):
            det = dets[i]
            best, best_iou = -1, 0.5
            for gi, g in enumerate(gt_here):
                if taken[gi] or g.class_name != det.class_name:
                    continue
                overlap = iou2d(det.box2d, g.bbox)
                if overlap > best_iou:
                    best, best_iou = gi, overlap
            if best >= 0:
                taken[best] = True
                matches[i] = best
        n_matched += len(matches)
        for mode in ESTIMATOR_MODES:
            relabeled = []
            for i, det in enumerate(dets):
                z = _mode_depth(det, mode, gt_here[matches[i]].z if i in matches else None)
                det_m = redepth_detection(det, z, cam) if z != det.box3d.location.z else det
                relabeled.append(detection_to_label(det_m))
                if i in matches:
                    abs_err[mode].append(abs(z - gt_here[matches[i]].z))
            per_mode_labels[mode][stem] = relabeled
    eval_cfg = cfg.eval_config()
    reports = {m: evaluate(gt, per_mode_labels[m], eval_cfg) for m in ESTIMATOR_MODES}
    mae = {m: (float(np.mean(v)) if v else float("nan")) for m, v in abs_err.items()}
    return {"depth_mae": mae, "ap": reports, "n_matched": n_matched}


def _mode_depth(det, mode: str, z_true: float | None) -> float:
    if mode == "soft":
        return det.z_soft
    if mode == "hard":
        return hard_ensemble(det.depth_estimates)
    if mode == "oracle":
        if z_true is None:
            return det.z_soft
        return oracle_select(det.depth_estimates, z_true)
    source = DepthSource[mode.split(":", 1)[1].upper()]
    est = next(e for e in det.depth_estimates if e.source == source)
    if est.valid and np.isfinite(est.z) and est.z > 0:
        return est.z
    return det.z_soft


def format_ensemble_report(result: dict, cfg: RunConfig) -> str:
    lines = [f"{'estimator':<14} {'depth MAE':>10}  AP_{cfg.eval_mode} per class/difficulty"]
    for mode in ESTIMATOR_MODES:
        report = result["ap"][mode]
        cells = []
        for r in report.results:
            ap = r.ap_r11 if cfg.eval_mode == "R11" else r.ap_r40
            if ap is not None:
                cells.append(f"{r.class_name[:3]}/{r.difficulty.name[:1]}={ap:.3f}")
        mae = result["depth_mae"][mode]
        lines.append(f"{mode:<14} {mae:>10.4f}  {' '.join(cells)}")
    lines.append(f"matched pairs: {result['n_matched']}")
    return "\n".join(lines) + "\n"


def cmd_ensemble_report(args) -> int:
    cfg = _run_config(args)
    gt = _read_label_dir(Path(args.gt))
    calib_dir = Path(args.calib)
    heads = {}
    calibs = {}
    for head_path in _head_files(Path(args.heads)):
        stem = head_path.stem
        heads[stem] = load_head_outputs(head_path)
        calibs[stem] = _read_calib(calib_dir, stem, cfg)
    result = ensemble_report(gt, heads, calibs, cfg)
    text = format_ensemble_report(result, cfg)
    print(text, end="")
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        prefix.with_suffix(".txt").write_text(text)
        payload = {
            "depth_mae": result["depth_mae"],
            "n_matched": result["n_matched"],
            "ap": {m: rep.to_json_dict() for m, rep in result["ap"].items()},
        }
        prefix.with_suffix(".json").write_text(json.dumps(payload, indent=2))
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run config; flags override its values")
    parser.add_argument("--downsample", type=int, help="feature-map downsample ratio S")
    parser.add_argument("--image-w", dest="image_w", type=int, help="image width in pixels")
    parser.add_argument("--image-h", dest="image_h", type=int, help="image height in pixels")
    parser.add_argument("--score-thresh", dest="score_thresh", type=float)
    parser.add_argument("--max-dets", dest="max_dets", type=int)
    parser.add_argument("--ensemble", help="soft | hard | single:<source>")
    parser.add_argument("--center-mode", dest="center_mode", help="volumetric | bottom")
    parser.add_argument("--eval-mode", dest="eval_mode", help="R11 | R40")
    parser.add_argument("--jobs", type=int, help="parallel workers over frames")
    parser.add_argument("--seed", type=int, help="base random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mono3d",
        description="Synthetic scenes, target codecs, and AP3D evaluation "
        "for monocular 3D detection.",
        epilog=_EXIT_NOTE,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate KITTI-style scenes", epilog=_EXIT_NOTE)
    p.add_argument("--spec", help="scene spec JSON (SceneSpec fields plus n_scenes)")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--scenes", type=int, help="number of scenes (overrides spec)")
    p.add_argument("--seed", type=int, help="base seed; scene i uses seed+i")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="labels -> head-output grids", epilog=_EXIT_NOTE)
    p.add_argument("--labels", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("bin", "json"), default="bin")
    p.add_argument("--noise", help="NoiseSpec JSON applied after encoding (seeded per frame)")
    _add_common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="head-output grids -> KITTI predictions", epilog=_EXIT_NOTE)
    p.add_argument("--heads", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="AP3D of predictions against ground truth", epilog=_EXIT_NOTE)
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", help="report path prefix (.txt and .json)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "ensemble-report",
        help="per-estimator depth accuracy and AP table",
        epilog=_EXIT_NOTE,
    )
    p.add_argument("--gt", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--heads", required=True)
    p.add_argument("--out", help="report path prefix (.txt and .json)")
    _add_common(p)
    p.set_defaults(func=cmd_ensemble_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # named errors -> non-zero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
