"""KITTI-style evaluation: IoU primitives, matching, AP, AOS, OS, 3D AP.

Detections are matched to ground truth greedily in descending score order
at a fixed IoU threshold; ground truths stricter than the evaluated
difficulty bucket are ignored (they neither match nor turn detections
into false positives). Average precision uses the 11-point recall
interpolation the original benchmark tables were computed with; the
40-point variant is available through the config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np

from .geometry import Box2D, Dimensions, Pose
from .kitti import DONT_CARE, Difficulty, KittiRecord, difficulty_of

FP = -1
IGNORED_DET = -2

# gt difficulties that count toward each evaluated bucket
_COUNTABLE = {
    Difficulty.EASY: {Difficulty.EASY},
    Difficulty.MODERATE: {Difficulty.EASY, Difficulty.MODERATE},
    Difficulty.HARD: {Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD},
}

_COLLINEAR_EPS = 1e-12


class PRPoint(NamedTuple):
    recall: float
    precision: float
    orientation_similarity: float


def iou_2d(a: Box2D, b: Box2D) -> float:
    """Intersection over union of two axis-aligned boxes."""
    iw = min(a.u_max, b.u_max) - max(a.u_min, b.u_min)
    ih = min(a.v_max, b.v_max) - max(a.v_min, b.v_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.width * a.height + b.width * b.height - inter
    return inter / union


def bev_corners(pose: Pose, dims: Dimensions) -> np.ndarray:
    """Ground-plane footprint corners (x, z), counterclockwise."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    local = np.array(
        [
            [+dims.l / 2, +dims.w / 2],
            [-dims.l / 2, +dims.w / 2],
            [-dims.l / 2, -dims.w / 2],
            [+dims.l / 2, -dims.w / 2],
        ]
    )
    rot = np.array([[c, s], [-s, c]])
    return local @ rot.T + np.array([pose.t[0], pose.t[2]])


def polygon_area(points: np.ndarray) -> float:
    """Shoelace area of a simple polygon."""
    if len(points) < 3:
        return 0.0
    x, y = points[:, 0], points[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon by a convex counterclockwise one."""
    output = [tuple(p) for p in subject]
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        inputs = output
        output = []
        prev = inputs[-1]
        prev_in = ex * (prev[1] - ay) - ey * (prev[0] - ax) >= -_COLLINEAR_EPS
        for cur in inputs:
            cur_in = ex * (cur[1] - ay) - ey * (cur[0] - ax) >= -_COLLINEAR_EPS
            if cur_in != prev_in:
                dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                denom = ex * dy - ey * dx
                if abs(denom) > _COLLINEAR_EPS:
                    s = (ex * (ay - prev[1]) - ey * (ax - prev[0])) / -denom
                    output.append((prev[0] + s * dx, prev[1] + s * dy))
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    return np.array(output) if output else np.empty((0, 2))


def iou_bev(a: tuple, b: tuple) -> float:
    """IoU of the yaw-rotated ground rectangles of two (Pose, Dimensions)."""
    ca, cb = bev_corners(*a), bev_corners(*b)
    inter = polygon_area(clip_polygon(ca, cb))
    if inter <= 0.0:
        return 0.0
    union = polygon_area(ca) + polygon_area(cb) - inter
    return inter / union if union > 0.0 else 0.0


def iou_3d(a: tuple, b: tuple) -> float:
    """IoU of two upright cuboids: BEV overlap times vertical overlap."""
    pose_a, dims_a = a
    pose_b, dims_b = b
    # boxes span [y - h, y] with y pointing down and a bottom-face anchor
    overlap = min(pose_a.t[1], pose_b.t[1]) - max(
        pose_a.t[1] - dims_a.h, pose_b.t[1] - dims_b.h
    )
    if overlap <= 0.0:
        return 0.0
    inter_bev = polygon_area(clip_polygon(bev_corners(*a), bev_corners(*b)))
    inter = inter_bev * overlap
    if inter <= 0.0:
        return 0.0
    union = dims_a.l * dims_a.h * dims_a.w + dims_b.l * dims_b.h * dims_b.w - inter
    return inter / union if union > 0.0 else 0.0


def orientation_similarity(delta: float) -> float:
    """Similarity (1 + cos(delta)) / 2 of an orientation error."""
    return (1.0 + math.cos(delta)) / 2.0


def match_detections(
    gt: Sequence,
    det: Sequence,
    iou_fn: Callable,
    threshold: float,
    gt_ignored: Sequence[bool] | None = None,
) -> list:
    """Greedy score-ordered assignment of detections to ground truths.

    Returns (det_index, code) pairs in processing order, where code is the
    matched gt index, FP (-1), or IGNORED_DET (-2). Each detection takes
    the unmatched countable gt of highest IoU >= threshold (ties to the
    lower gt index); failing that, overlap with any ignored gt at the same
    threshold discards the detection instead of counting it as FP.
    """
    if gt_ignored is None:
        gt_ignored = [False] * len(gt)
    order = sorted(range(len(det)), key=lambda i: (-det[i].score, i))
    taken = [False] * len(gt)
    result = []
    for i in order:
        best_j, best_iou = FP, threshold
        for j, g in enumerate(gt):
            if gt_ignored[j] or taken[j]:
                continue
            iou = iou_fn(g, det[i])
            if iou > best_iou or (iou == best_iou and best_j == FP):
                best_j, best_iou = j, iou
        if best_j != FP:
            taken[best_j] = True
            result.append((i, best_j))
            continue
        hits_ignored = any(
            gt_ignored[j] and iou_fn(g, det[i]) >= threshold for j, g in enumerate(gt)
        )
        result.append((i, IGNORED_DET if hits_ignored else FP))
    return result


def ap_interpolated(pr: Sequence[PRPoint], field: str, n_points: int = 11) -> float:
    """Interpolated average of a PR-point field over fixed recall thresholds.

    The 11-point variant averages the max field value at recall >= r for
    r in {0, 0.1, ..., 1.0}; the 40-point variant uses {1/40, ..., 1.0}.
    """
    values = np.array([getattr(p, field) for p in pr])
    recalls = np.array([p.recall for p in pr])
    if n_points == 11:
        thresholds = np.linspace(0.0, 1.0, 11)
    elif n_points == 40:
        thresholds = np.linspace(0.025, 1.0, 40)
    else:
        raise ValueError(f"n_points must be 11 or 40, got {n_points}")
    total = 0.0
    for r in thresholds:
        mask = recalls >= r - 1e-12
        if mask.any():
            total += float(values[mask].max())
    return total / len(thresholds)


def ap_11point(pr: Sequence[PRPoint], field: str = "precision") -> float:
    """KITTI 11-point interpolated average precision / orientation similarity."""
    return ap_interpolated(pr, field, n_points=11)


@dataclass(frozen=True)
class EvalConfig:
    class_name: str = "Car"
    iou_2d_threshold: float = 0.7
    iou_3d_thresholds: tuple = (0.5, 0.7)
    n_recall_points: int = 11


@dataclass(frozen=True)
class DifficultyMetrics:
    ap_2d: float
    aos: float
    os: float
    ap_3d_50: float
    ap_3d_70: float
    n_gt: int


@dataclass(frozen=True)
class EvalReport:
    per_difficulty: dict

    def key_values(self) -> list:
        out = []
        for diff in (Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD):
            m = self.per_difficulty[diff]
            tag = diff.value.lower()
            out += [
                (f"ap_2d_{tag}", m.ap_2d),
                (f"aos_{tag}", m.aos),
                (f"os_{tag}", m.os),
                (f"ap_3d_50_{tag}", m.ap_3d_50),
                (f"ap_3d_70_{tag}", m.ap_3d_70),
            ]
        return out


def _difficulty_split(records: Sequence[KittiRecord], bucket: Difficulty, class_name: str):
    """Partition one frame's gt into countable / ignored-for-this-bucket."""
    countable, ignored = [], []
    for r in records:
        if r.object_type == class_name:
            if difficulty_of(r) in _COUNTABLE[bucket]:
                countable.append(r)
            else:
                ignored.append(r)
        elif r.object_type == DONT_CARE:
            ignored.append(r)
    return countable, ignored


def _pr_points(
    gt_frames: Mapping,
    det_frames: Mapping,
    bucket: Difficulty,
    cfg: EvalConfig,
    iou_fn: Callable,
    threshold: float,
    use_3d_ignored: bool,
) -> tuple:
    """Detection stream matched per frame, reduced to global PR points."""
    stream = []
    n_gt = 0
    for frame in sorted(set(gt_frames) | set(det_frames)):
        gt_all = gt_frames.get(frame, [])
        det = [r for r in det_frames.get(frame, []) if r.object_type == cfg.class_name]
        countable, ignored = _difficulty_split(gt_all, bucket, cfg.class_name)
        if use_3d_ignored:
            # DontCare rows carry no valid 3D geometry
            ignored = [r for r in ignored if r.object_type != DONT_CARE]
        n_gt += len(countable)
        merged = countable + ignored
        flags = [False] * len(countable) + [True] * len(ignored)
        for i, code in match_detections(merged, det, iou_fn, threshold, gt_ignored=flags):
            if code == IGNORED_DET:
                continue
            sim = 0.0
            if code >= 0:
                sim = orientation_similarity(det[i].rotation_y - merged[code].rotation_y)
            stream.append((-det[i].score, frame, i, code >= 0, sim))
    stream.sort()
    points = []
    tp = 0
    sim_sum = 0.0
    for rank, (_, _, _, is_tp, sim) in enumerate(stream, start=1):
        tp += int(is_tp)
        sim_sum += sim
        if n_gt > 0:
            points.append(PRPoint(tp / n_gt, tp / rank, sim_sum / rank))
    return points, n_gt


def _record_iou_2d(g: KittiRecord, d: KittiRecord) -> float:
    return iou_2d(g.bbox, d.bbox)


def _record_iou_3d(g: KittiRecord, d: KittiRecord) -> float:
    return iou_3d((g.pose(), g.dimensions()), (d.pose(), d.dimensions()))


def evaluate(gt_frames: Mapping, det_frames: Mapping, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Full per-difficulty evaluation of detection frames against labels.

    Both arguments map frame ids to record lists. Produces 2D AP at the
    configured IoU, AOS, OS = AOS / AP, and 3D AP at the configured 3D IoU
    thresholds, for the Easy/Moderate/Hard buckets.
    """
    per_difficulty = {}
    for bucket in (Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD):
        pr, n_gt = _pr_points(
            gt_frames, det_frames, bucket, cfg, _record_iou_2d,
            cfg.iou_2d_threshold, use_3d_ignored=False,
        )
        ap = ap_interpolated(pr, "precision", cfg.n_recall_points) if pr else 0.0
        aos = ap_interpolated(pr, "orientation_similarity", cfg.n_recall_points) if pr else 0.0
        ap3d = {}
        for thr in cfg.iou_3d_thresholds:
            pr3, _ = _pr_points(
                gt_frames, det_frames, bucket, cfg, _record_iou_3d, thr,
                use_3d_ignored=True,
            )
            ap3d[thr] = ap_interpolated(pr3, "precision", cfg.n_recall_points) if pr3 else 0.0
        per_difficulty[bucket] = DifficultyMetrics(
            ap_2d=ap,
            aos=aos,
            os=aos / ap if ap > 0.0 else 0.0,
            ap_3d_50=ap3d.get(0.5, 0.0),
            ap_3d_70=ap3d.get(0.7, 0.0),
            n_gt=n_gt,
        )
    return EvalReport(per_difficulty=per_difficulty)


def format_report(report: EvalReport) -> str:
    """Aligned text table plus a machine-readable key=value block."""
    lines = [
        f"{'':10s} {'Easy':>10s} {'Moderate':>10s} {'Hard':>10s}",
    ]
    rows = (
        ("AOS", "aos"),
        ("AP", "ap_2d"),
        ("OS", "os"),
        ("3D AP@0.5", "ap_3d_50"),
        ("3D AP@0.7", "ap_3d_70"),
    )
    buckets = (Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD)
    for label, attr in rows:
        vals = [getattr(report.per_difficulty[b], attr) for b in buckets]
        lines.append(f"{label:10s} " + " ".join(f"{v:10.4f}" for v in vals))
    lines.append("")
    for key, value in report.key_values():
        lines.append(f"{key}={value:.9f}")
    return "\n".join(lines) + "\n"
