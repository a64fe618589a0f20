"""Acceptance suite: one test per release criterion, with printed verdicts.

Run with `pytest tests/test_acceptance.py -v` (add -s to see the PASS lines).
"""

import math
import time

import numpy as np
import pytest

from mono3d.box3d import Box3D, corner_loss, corners, keypoints10
from mono3d.camera import CameraIntrinsics, Point3, project, wrap_angle
from mono3d.cli import RunConfig, ensemble_report
from mono3d.decode import CodecConfig, decode_detections, encode_targets
from mono3d.depthsolve import (
    DepthEstimate,
    DepthSource,
    depth_to_raw,
    direct_depth,
    hard_ensemble,
    keypoint_depths,
    soft_ensemble,
)
from mono3d.eval3d import evaluate, iou3d
from mono3d.kitti import (
    CalibParseError,
    LabelParseError,
    ObjectLabel,
    parse_calib,
    parse_label_file,
    serialize_labels,
)
from mono3d.losses import (
    LossConfig,
    decode_orientation,
    depth_unc_loss,
    dim_loss,
    encode_orientation,
    focal_heatmap_loss,
    giou_loss,
    keypoint_depth_loss,
    keypoint_loss,
    multibin_loss,
    offset_loss,
)
from mono3d.represent import RepKind, edge_ring_indices, extract_edge_vector, scatter_edge_vector
from mono3d.synthgen import NoiseSpec, SceneSpec, gen_scene, perturb

STUDY_CAM = CameraIntrinsics(fx=350.0, fy=350.0, cu=256.0, cv=128.0, image_w=512, image_h=256)


def _report(name):
    print(f"PASS {name}")


# ---------------------------------------------------------------------------


def test_c01_round_trip_exactness():
    """200 seeded scenes decode back to every object within tolerance, <30 s."""
    start = time.perf_counter()
    cfg = CodecConfig()
    n_total = n_outside = 0
    for seed in range(200):
        spec = SceneSpec(seed=seed, n_objects=4, truncation_fraction=0.5)
        labels, cam = gen_scene(spec)
        n_total += len(labels)
        for lab in labels:
            xc = project((lab.x, lab.y - lab.h / 2.0, lab.z), cam)
            if not (0 <= xc.u < cam.image_w and 0 <= xc.v < cam.image_h):
                n_outside += 1
        dets = decode_detections(encode_targets(labels, cam, cfg), cam, cfg)
        assert len(dets) == len(labels), f"seed {seed}: lost objects"
        used = set()
        for det in dets:
            errs = [
                abs(det.box3d.location.x - lab.x)
                + abs(det.box3d.location.y - lab.y)
                + abs(det.box3d.location.z - lab.z)
                for lab in labels
            ]
            i = int(np.argmin(errs))
            assert i not in used
            used.add(i)
            lab = labels[i]
            assert abs(det.box3d.location.x - lab.x) <= 1e-3
            assert abs(det.box3d.location.y - lab.y) <= 1e-3
            assert abs(det.box3d.location.z - lab.z) <= 1e-3
            assert abs(det.box3d.h - lab.h) <= 1e-6
            assert abs(det.box3d.w - lab.w) <= 1e-6
            assert abs(det.box3d.l - lab.l) <= 1e-6
            assert abs(wrap_angle(det.box3d.ry - lab.ry)) <= 1e-6
    elapsed = time.perf_counter() - start
    assert n_outside / n_total >= 0.3
    assert elapsed < 30.0, f"round-trip took {elapsed:.1f}s"
    _report(f"C01 round-trip exactness ({n_total} objects, "
            f"{n_outside / n_total:.0%} outside, {elapsed:.1f}s)")


def test_c02_depth_estimator_identity():
    """Noise-free geometry: all four estimators equal the true depth (1e-6 rel)."""
    cam = CameraIntrinsics(fx=721.5377, fy=721.5377, cu=640.0, cv=192.0)
    rng = np.random.default_rng(202)
    for _ in range(1000):
        z = rng.uniform(4.0, 70.0)
        box = Box3D(
            Point3(rng.uniform(-20, 20), rng.uniform(-1, 3), z),
            h=rng.uniform(0.6, 2.8),
            w=rng.uniform(0.4, 2.4),
            l=rng.uniform(0.5, 6.0),
            ry=rng.uniform(-math.pi, math.pi),
        )
        kps = keypoints10(box, cam)
        center, diag1, diag2 = keypoint_depths(kps, box.h, cam.fy)
        direct = direct_depth(depth_to_raw(z))
        for value in (center.z, diag1.z, diag2.z, direct):
            assert abs(value - z) <= 1e-6 * z
    _report("C02 depth estimator identity (1000 boxes)")


def test_c03_ensemble_algebra():
    rng = np.random.default_rng(303)
    transforms = (
        lambda s: 2.0 * s,
        lambda s: s * s,
        lambda s: math.exp(s),
        lambda s: math.log1p(s),
        lambda s: s / (1.0 + s),
    )
    for _ in range(500):
        zs = rng.uniform(1.0, 80.0, 4)
        sigmas = rng.uniform(0.05, 8.0, 4)
        ests = [
            DepthEstimate(z=float(z), sigma=float(s), source=DepthSource(i))
            for i, (z, s) in enumerate(zip(zs, sigmas))
        ]
        z_soft = soft_ensemble(ests)
        assert zs.min() - 1e-12 <= z_soft <= zs.max() + 1e-12
        equal = [DepthEstimate(z=float(z), sigma=1.7, source=DepthSource(i))
                 for i, z in enumerate(zs)]
        assert abs(soft_ensemble(equal) - zs.mean()) <= 1e-12 * max(1.0, zs.mean())
        scaled = [DepthEstimate(z=e.z, sigma=e.sigma * 123.45, source=e.source) for e in ests]
        assert abs(soft_ensemble(scaled) - z_soft) <= 1e-12 * max(1.0, abs(z_soft))
        choice = hard_ensemble(ests)
        for f in transforms:
            mapped = [DepthEstimate(z=e.z, sigma=f(e.sigma), source=e.source) for e in ests]
            assert hard_ensemble(mapped) == choice
    _report("C03 ensemble algebra (bounds, mean, scale and argmin invariance)")


def test_c04_uncertainty_loss_optimum():
    """Grid search over sigma confirms the minimizer sits at |error|."""
    rng = np.random.default_rng(404)
    coarse = np.logspace(-3, 3, 4001)
    log_coarse = np.log(coarse)
    for e in 10 ** rng.uniform(math.log10(0.02), math.log10(40.0), 100):
        vals = e / coarse + log_coarse
        i = int(np.argmin(vals))
        lo, hi = coarse[max(i - 1, 0)], coarse[min(i + 1, len(coarse) - 1)]
        fine = np.arange(lo, hi + 5e-4, 5e-4)
        best = float(fine[int(np.argmin(e / fine + np.log(fine)))])
        assert abs(best - e) <= 1e-3, f"sigma*={best} vs |e|={e}"
    _report("C04 uncertainty loss optimum sigma* = |e| (100 grid searches)")


def _mc_iou3d(a: Box3D, b: Box3D, n: int, rng) -> float:
    pts_all = np.concatenate([corners(a), corners(b)], axis=0)
    lo = pts_all.min(axis=0)
    hi = pts_all.max(axis=0)
    samples = rng.uniform(lo, hi, (n, 3))

    def inside(box):
        d = samples - np.asarray(box.location)
        c, s = math.cos(box.ry), math.sin(box.ry)
        x = c * d[:, 0] - s * d[:, 2]
        z = s * d[:, 0] + c * d[:, 2]
        y = d[:, 1]
        return (
            (np.abs(x) <= box.l / 2)
            & (np.abs(z) <= box.w / 2)
            & (y <= 0)
            & (y >= -box.h)
        )

    box_vol = float(np.prod(hi - lo))
    inter = box_vol * float(np.mean(inside(a) & inside(b)))
    union = a.h * a.w * a.l + b.h * b.w * b.l - inter
    return inter / union if union > 0 else 0.0


def test_c05_iou_monte_carlo_oracle():
    rng = np.random.default_rng(505)
    for k in range(100):
        a = Box3D(
            Point3(rng.uniform(-3, 3), rng.uniform(0, 2), rng.uniform(8, 25)),
            h=rng.uniform(0.8, 2.2),
            w=rng.uniform(0.8, 2.2),
            l=rng.uniform(1.0, 4.5),
            ry=rng.uniform(-math.pi, math.pi),
        )
        b = Box3D(
            Point3(
                a.location.x + rng.uniform(-1.2, 1.2),
                a.location.y + rng.uniform(-0.4, 0.4),
                a.location.z + rng.uniform(-1.2, 1.2),
            ),
            h=a.h * rng.uniform(0.8, 1.25),
            w=a.w * rng.uniform(0.8, 1.25),
            l=a.l * rng.uniform(0.8, 1.25),
            ry=a.ry + rng.uniform(-0.8, 0.8),
        )
        analytic = iou3d(a, b)
        mc = _mc_iou3d(a, b, 1_000_000, rng)
        assert abs(analytic - mc) <= 0.01, f"pair {k}: {analytic} vs MC {mc}"
    # analytic 45-degree fixture
    sq = Box3D(Point3(0, 1, 10), 1.0, 1.0, 1.0, 0.0)
    rot = Box3D(Point3(0, 1, 10), 1.0, 1.0, 1.0, math.pi / 4)
    inter = 2 * (math.sqrt(2.0) - 1.0)
    assert iou3d(sq, rot) == pytest.approx(inter / (2.0 - inter), abs=1e-3)
    assert iou3d(sq, rot) == pytest.approx(0.7071, abs=1e-3)
    _report("C05 rotated IoU vs 1e6-sample Monte-Carlo (100 pairs)")


def _gt_label(x, z=10.0, cls="Car", score=None, height=60.0):
    return ObjectLabel(
        class_name=cls, truncation=0.0, occlusion=0, alpha=0.0,
        bbox=(100.0 + 30 * x, 100.0, 200.0 + 30 * x, 100.0 + height),
        h=1.5, w=1.6, l=4.0, x=x, y=1.6, z=z, ry=0.0, score=score,
    )


def test_c06_ap_fixtures():
    gt = {"0": [_gt_label(0.0), _gt_label(4.0)]}
    det = {"0": [_gt_label(0.0, score=0.9), _gt_label(40.0, z=40.0, score=0.8)]}
    report = evaluate(gt, det)
    from mono3d.kitti import Difficulty

    assert report.ap("Car", Difficulty.EASY, "R40") == 0.5
    perfect = {"0": [_gt_label(0.0, score=1.0), _gt_label(4.0, score=1.0)]}
    report = evaluate(gt, perfect)
    for level in (Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD):
        assert report.ap("Car", level, "R40") == 1.0
        assert report.ap("Car", level, "R11") == 1.0
    _report("C06 AP fixtures (half-AP = 0.5000 exact, perfect detector = 1.0)")


def test_c07_ensemble_study_orders_estimators():
    """1000 noisy scenes: oracle <= soft <= best single <= worst single, and
    the soft ensemble's AP dominates every single estimator's AP; < 5 min."""
    start = time.perf_counter()
    run_cfg = RunConfig(
        image_w=STUDY_CAM.image_w,
        image_h=STUDY_CAM.image_h,
        classes=("Car",),
        iou_thresholds={"Car": 0.7},
        score_thresh=0.3,
    )
    gt, heads, calibs = {}, {}, {}
    codec = run_cfg.codec_config()
    for i in range(1000):
        spec = SceneSpec(
            seed=i,
            n_objects=2,
            class_mix={"Car": 1.0},
            camera=STUDY_CAM,
            depth_range=(8.0, 26.0),
            lateral_range=(-6.0, 6.0),
            margin_px=30.0,
        )
        labels, cam = gen_scene(spec)
        ho = encode_targets(labels, cam, codec)
        noise = NoiseSpec(seed=10_000 + i, depth_sigma=0.04, kpt_sigma=0.25)
        stem = f"{i:06d}"
        gt[stem] = labels
        heads[stem] = perturb(ho, noise, cam)
        calibs[stem] = cam
    result = ensemble_report(gt, heads, calibs, run_cfg)
    mae = result["depth_mae"]
    singles = [mae[m] for m in ("single:direct", "single:center", "single:diag1", "single:diag2")]
    assert result["n_matched"] >= 1900
    assert mae["oracle"] <= mae["soft"] <= min(singles) <= max(singles)

    def aggregate_ap(mode):
        rows = [r.ap_r40 for r in result["ap"][mode].results if r.n_gt > 0 and r.ap_r40 is not None]
        assert rows
        return float(np.mean(rows))

    soft_ap = aggregate_ap("soft")
    for mode in ("single:direct", "single:center", "single:diag1", "single:diag2"):
        assert soft_ap >= aggregate_ap(mode)
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0, f"study took {elapsed:.0f}s"
    _report(
        "C07 ensemble study: oracle {:.3f} <= soft {:.3f} <= best single {:.3f} "
        "<= worst single {:.3f}; soft AP {:.3f} dominates ({:.0f}s)".format(
            mae["oracle"], mae["soft"], min(singles), max(singles), soft_ap, elapsed
        )
    )


# --- criterion 8: loss oracles ----------------------------------------------


def _naive_focal(pred, gt, alpha, beta):
    total, n_pos = 0.0, 0
    for p, g in zip(pred.ravel(), gt.ravel()):
        if g == 1.0:
            n_pos += 1
            total += (1 - p) ** alpha * math.log(p)
        else:
            total += (1 - g) ** beta * p**alpha * math.log(1 - p)
    return -total / max(n_pos, 1)


def _naive_multibin(logits, sincos, alpha, cfg):
    exps = [math.exp(v) for v in logits]
    norm = sum(exps)
    cover = [
        i for i, c in enumerate(cfg.bin_centers)
        if abs(wrap_angle(alpha - c)) <= math.pi / cfg.num_bins + cfg.bin_margin
    ]
    cls = -sum(math.log(exps[i] / norm) for i in cover) / len(cover)
    res = 0.0
    for i in cover:
        r = wrap_angle(alpha - cfg.bin_centers[i])
        res += abs(sincos[i][0] - math.sin(r)) + abs(sincos[i][1] - math.cos(r))
    return cls + res / len(cover)


def test_c08_loss_oracles():
    rng = np.random.default_rng(808)
    cfg = LossConfig()
    rel = lambda a, b: abs(a - b) / max(abs(a), abs(b), 1e-12)

    for _ in range(1000):
        # focal
        gt = rng.uniform(0, 1, (6, 6))
        gt[rng.integers(0, 6, 2), rng.integers(0, 6, 2)] = 1.0
        pred = rng.uniform(1e-4, 1 - 1e-4, (6, 6))
        assert rel(focal_heatmap_loss(pred, gt, cfg),
                   _naive_focal(pred, gt, cfg.focal_alpha, cfg.focal_beta)) <= 1e-9
        # offsets, both branches
        p2, g2 = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
        naive_in = (abs(p2[0] - g2[0]) + abs(p2[1] - g2[1])) / 2
        naive_out = (math.log(1 + abs(p2[0] - g2[0])) + math.log(1 + abs(p2[1] - g2[1]))) / 2
        assert rel(offset_loss(p2, g2, RepKind.INSIDE), naive_in) <= 1e-9
        assert rel(offset_loss(p2, g2, RepKind.OUTSIDE), naive_out) <= 1e-9
        # dims
        deltas = rng.uniform(-0.5, 0.5, 3)
        gt_dims = rng.uniform(0.5, 4.0, 3)
        mean = cfg.class_mean_dims["Car"]
        naive_dim = sum(abs(mean[k] * math.exp(deltas[k]) - gt_dims[k]) for k in range(3))
        assert rel(dim_loss(deltas, gt_dims, "Car", cfg), naive_dim) <= 1e-9
        # multibin
        alpha = float(rng.uniform(-math.pi + 1e-9, math.pi))
        logits = rng.normal(0, 2, 4)
        sincos = rng.normal(0, 1, (4, 2))
        assert rel(multibin_loss(logits, sincos, alpha, cfg),
                   _naive_multibin(logits, sincos, alpha, cfg)) <= 1e-9
        # keypoints
        pk, gk = rng.uniform(-3, 3, (10, 2)), rng.uniform(-3, 3, (10, 2))
        mask = rng.uniform(0, 1, 10) > 0.3
        if mask.any():
            naive_kp = sum(
                abs(pk[i, 0] - gk[i, 0]) + abs(pk[i, 1] - gk[i, 1])
                for i in range(10) if mask[i]
            ) / mask.sum()
            assert rel(keypoint_loss(pk, gk, mask), naive_kp) <= 1e-9
        # depth losses
        zp, zg, sig = rng.uniform(1, 60), rng.uniform(1, 60), rng.uniform(0.01, 5)
        assert rel(depth_unc_loss(zp, zg, sig), abs(zp - zg) / sig + math.log(sig)) <= 1e-9
        ests = [
            DepthEstimate(z=float(rng.uniform(1, 60)), sigma=float(rng.uniform(0.05, 4)),
                          valid=bool(rng.integers(2)), source=DepthSource(i + 1))
            for i in range(3)
        ]
        naive_kd = sum(
            abs(e.z - zg) / e.sigma + (math.log(e.sigma) if e.valid else 0.0) for e in ests
        )
        assert rel(keypoint_depth_loss(ests, zg), naive_kd) <= 1e-9
        # giou
        a = (rng.uniform(0, 50), rng.uniform(0, 50), 0.0, 0.0)
        a = (a[0], a[1], a[0] + rng.uniform(1, 40), a[1] + rng.uniform(1, 40))
        b = (rng.uniform(0, 50), rng.uniform(0, 50), 0.0, 0.0)
        b = (b[0], b[1], b[0] + rng.uniform(1, 40), b[1] + rng.uniform(1, 40))
        iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
        ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
        inter = iw * ih
        union = ((a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter)
        hull = ((max(a[2], b[2]) - min(a[0], b[0])) * (max(a[3], b[3]) - min(a[1], b[1])))
        naive_giou = 1.0 - (inter / union - (hull - union) / hull)
        assert rel(giou_loss(a, b), naive_giou) <= 1e-9

    # corner loss vs 24-coordinate brute force
    for _ in range(200):
        boxes = []
        for _ in range(2):
            boxes.append(Box3D(
                Point3(rng.uniform(-10, 10), rng.uniform(-1, 2), rng.uniform(5, 40)),
                h=rng.uniform(0.5, 2.5), w=rng.uniform(0.5, 2.5),
                l=rng.uniform(0.5, 5.0), ry=rng.uniform(-math.pi, math.pi),
            ))
        ca, cb = corners(boxes[0]), corners(boxes[1])
        brute = sum(abs(ca[i][k] - cb[i][k]) for i in range(8) for k in range(3))
        assert rel(corner_loss(boxes[0], boxes[1]), brute) <= 1e-9

    # minima at ground truth
    assert offset_loss((0.2, 0.8), (0.2, 0.8), RepKind.INSIDE) == 0.0
    assert offset_loss((0.2, 0.8), (0.2, 0.8), RepKind.OUTSIDE) == 0.0
    gt_dims = (1.9, 1.7, 4.4)
    best = [math.log(gt_dims[k] / cfg.class_mean_dims["Car"][k]) for k in range(3)]
    assert dim_loss(best, gt_dims, "Car", cfg) == pytest.approx(0.0, abs=1e-12)
    logits, sincos = encode_orientation(0.7, cfg)
    assert decode_orientation(logits, sincos, cfg) == pytest.approx(0.7, abs=1e-12)
    for z in (4.0, 11.0, 37.0):
        assert depth_unc_loss(z, z, 1.3) <= depth_unc_loss(z + 0.5, z, 1.3)
    box = Box3D(Point3(1, 1, 12), 1.5, 1.6, 4.0, 0.4)
    assert corner_loss(box, box) == 0.0
    assert giou_loss((0, 0, 2, 2), (0, 0, 2, 2)) == 0.0
    gt_map = np.zeros((5, 5))
    gt_map[2, 2] = 1.0
    near = np.clip(gt_map, 1e-7, 1 - 1e-7)
    far = np.clip(gt_map, 0.3, 0.7)
    assert focal_heatmap_loss(near, gt_map, cfg) < focal_heatmap_loss(far, gt_map, cfg)
    _report("C08 loss oracles (1000 random inputs each, minima at ground truth)")


def test_c09_edge_decoupling():
    # ring invariants across every map size
    for h in range(2, 65):
        for w in range(2, 65):
            rows, cols = edge_ring_indices(h, w)
            assert len(rows) == 2 * (h + w) - 4
            assert len(set(zip(rows.tolist(), cols.tolist()))) == len(rows)
            fm = np.ones((h, w))
            scatter_edge_vector(fm, extract_edge_vector(fm))
            assert fm[rows, cols].min() == fm[rows, cols].max() == 2.0
            interior = np.ones((h, w), dtype=bool)
            interior[rows, cols] = False
            assert fm[interior].max(initial=1.0) == 1.0

    # instrumented decode: inside objects never read boundary-ring cells
    cfg = CodecConfig()
    spec = SceneSpec(seed=42, n_objects=5, truncation_fraction=0.0, margin_px=12.0)
    labels, cam = gen_scene(spec)
    ho = encode_targets(labels, cam, cfg)
    baseline = decode_detections(ho, cam, cfg)
    assert len(baseline) == len(labels)
    poisoned = ho.copy()
    rows, cols = edge_ring_indices(ho.hf, ho.wf)
    poisoned.heatmap[:, rows, cols] = -1.0
    for name in ("offset", "box2d", "dim", "orient", "kpt", "depth",
                 "depth_log_sigma", "kpt_log_sigma"):
        getattr(poisoned, name)[:, rows, cols] = np.nan
    decoded = decode_detections(poisoned, cam, cfg)
    assert len(decoded) == len(baseline)
    for a, b in zip(decoded, baseline):
        assert a.score == b.score and a.class_name == b.class_name
        assert a.box3d == b.box3d
        assert a.box2d == b.box2d

    # converse: boundary-ring peaks never read interior cells
    spec_out = SceneSpec(seed=43, n_objects=3, truncation_fraction=1.0)
    labels_out, cam_out = gen_scene(spec_out)
    ho_out = encode_targets(labels_out, cam_out, cfg)
    baseline_out = decode_detections(ho_out, cam_out, cfg)
    assert len(baseline_out) == len(labels_out)
    poisoned_out = ho_out.copy()
    rows, cols = edge_ring_indices(ho_out.hf, ho_out.wf)
    interior = np.ones((ho_out.hf, ho_out.wf), dtype=bool)
    interior[rows, cols] = False
    poisoned_out.heatmap[:, interior] = -1.0
    for name in ("offset", "box2d", "dim", "orient", "kpt", "depth",
                 "depth_log_sigma", "kpt_log_sigma"):
        getattr(poisoned_out, name)[:, interior] = np.nan
    decoded_out = decode_detections(poisoned_out, cam_out, cfg)
    assert len(decoded_out) == len(baseline_out)
    for a, b in zip(decoded_out, baseline_out):
        assert a.box3d == b.box3d and a.box2d == b.box2d
    _report("C09 edge decoupling (ring invariants 2..64, poisoned decode identical both ways)")


def test_c10_format_fidelity():
    rng = np.random.default_rng(1010)
    labels = []
    for _ in range(10_000):
        u1, v1 = rng.uniform(0, 1200), rng.uniform(0, 350)
        labels.append(ObjectLabel(
            class_name=str(rng.choice(["Car", "Pedestrian", "Cyclist", "Van", "Truck"])),
            truncation=float(rng.uniform(0, 1)),
            occlusion=int(rng.integers(0, 4)),
            alpha=float(rng.uniform(-np.pi, np.pi)),
            bbox=(u1, v1, u1 + rng.uniform(1, 300), v1 + rng.uniform(1, 120)),
            h=float(rng.uniform(0.4, 3.2)),
            w=float(rng.uniform(0.3, 2.8)),
            l=float(rng.uniform(0.4, 9.0)),
            x=float(rng.uniform(-45, 45)),
            y=float(rng.uniform(-3, 4)),
            z=float(rng.uniform(0.5, 95)),
            ry=float(rng.uniform(-np.pi, np.pi)),
            score=float(rng.uniform(0, 1)) if rng.integers(2) else None,
        ))
    text = serialize_labels(labels)
    assert serialize_labels(parse_label_file(text)) == text

    # malformed label inputs
    good = serialize_labels(labels[:1]).strip()
    fourteen = " ".join(good.split()[:14])
    with pytest.raises(LabelParseError, match="line 1"):
        parse_label_file(fourteen)
    with pytest.raises(LabelParseError, match="line 2"):
        parse_label_file(good + "\nCar 1 2\n")
    with pytest.raises(LabelParseError, match="line 1"):
        parse_label_file(good + " extra extra")  # 17+ fields
    broken = good.split()
    broken[5] = "oops"
    with pytest.raises(LabelParseError, match="line 1"):
        parse_label_file(" ".join(broken))

    # malformed calibration inputs
    with pytest.raises(CalibParseError):
        parse_calib("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n")
    with pytest.raises(CalibParseError):
        parse_calib("P2: 1 2 3 4\n")
    with pytest.raises(CalibParseError):
        parse_calib("P2: 1 2 3 4 5 6 7 8 9 10 11 nan-sense\n")
    _report("C10 format fidelity (10k rows idempotent, malformed inputs rejected)")
