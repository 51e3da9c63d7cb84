"""Detection and occupancy evaluation.

Detection follows the center-distance protocol: per class, predictions
are greedily matched to ground truth in descending score order within a
distance threshold (planar center distance, meters); AP is the
trapezoidal area under the precision-recall sweep; true-positive errors
are averaged at the largest threshold. The composite detection score is
(4 * mAP + sum over the four errors of (1 - min(1, err))) / 8.

Occupancy uses per-class IoU = TP / (TP + FP + FN), mIoU over semantic
classes present in either grid, and a scene-completion IoU on the
binarized occupied-vs-free split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .heads_losses import BoxSet, OccGrid

__all__ = [
    "DEFAULT_THRESHOLDS",
    "DetEval",
    "OccEval",
    "match_by_center_distance",
    "average_precision",
    "true_positive_errors",
    "ods",
    "occupancy_iou",
    "evaluate_detection",
]

DEFAULT_THRESHOLDS = (1.0, 2.0, 4.0)


def match_by_center_distance(pred: BoxSet, gt: BoxSet, threshold: float):
    """Greedy matching by descending score; each gt is matched at most once.

    Every prediction takes the nearest unmatched ground truth within the
    threshold (planar center distance). Returns (pairs, fp_idx, fn_idx)
    where pairs is a list of (pred_idx, gt_idx).
    """
    order = np.argsort(-pred.scores, kind="stable")
    taken = np.zeros(len(gt), dtype=bool)
    pairs = []
    fps = []
    for i in order:
        best, best_d = -1, np.inf
        for j in range(len(gt)):
            if taken[j]:
                continue
            d = float(np.hypot(pred.centers[i, 0] - gt.centers[j, 0],
                               pred.centers[i, 1] - gt.centers[j, 1]))
            if d <= threshold and d < best_d:
                best, best_d = j, d
        if best >= 0:
            taken[best] = True
            pairs.append((int(i), best))
        else:
            fps.append(int(i))
    fns = [j for j in range(len(gt)) if not taken[j]]
    return pairs, fps, fns


def average_precision(scored_hits, n_gt: int) -> float:
    """AP from (score, is_tp) samples pooled over frames.

    Trapezoidal integration over the precision-recall sweep in descending
    score order; zero if there are no ground-truth boxes or no predictions.
    """
    if n_gt == 0 or not scored_hits:
        return 0.0
    arr = sorted(scored_hits, key=lambda sh: -sh[0])
    tp = np.cumsum([1.0 if h else 0.0 for _, h in arr])
    fp = np.cumsum([0.0 if h else 1.0 for _, h in arr])
    recall = tp / n_gt
    precision = tp / np.maximum(tp + fp, 1e-12)
    r = np.concatenate([[0.0], recall])
    p = np.concatenate([[precision[0]], precision])
    return float(np.sum((r[1:] - r[:-1]) * (p[1:] + p[:-1]) / 2.0))


def _size_iou(size_a: np.ndarray, size_b: np.ndarray) -> float:
    """IoU of axis-aligned, concentric boxes given only their sizes."""
    inter = float(np.prod(np.minimum(size_a, size_b)))
    union = float(np.prod(size_a) + np.prod(size_b)) - inter
    return inter / union if union > 0 else 0.0


def _yaw_diff(a: float, b: float) -> float:
    return abs(((a - b + np.pi) % (2.0 * np.pi)) - np.pi)


def true_positive_errors(matched_pairs):
    """(mATE, mASE, mAOE, mAVE) over matched (pred_box, gt_box) row pairs.

    Boxes are 10-parameter rows. All-zero tuple when nothing matched.
    """
    if not matched_pairs:
        return 0.0, 0.0, 0.0, 0.0
    ate, ase, aoe, ave = [], [], [], []
    for pb, gb in matched_pairs:
        ate.append(float(np.hypot(pb[3] - gb[3], pb[4] - gb[4])))
        ase.append(1.0 - _size_iou(pb[0:3], gb[0:3]))
        aoe.append(_yaw_diff(float(np.arctan2(pb[7], pb[6])),
                             float(np.arctan2(gb[7], gb[6]))))
        ave.append(float(np.hypot(pb[8] - gb[8], pb[9] - gb[9])))
    return (float(np.mean(ate)), float(np.mean(ase)),
            float(np.mean(aoe)), float(np.mean(ave)))


def ods(map_value: float, mate: float, mase: float, maoe: float, mave: float) -> float:
    """Composite detection score; each error clamps at 1 before it counts."""
    errs = (mate, mase, maoe, mave)
    return (4.0 * map_value + sum(1.0 - min(1.0, e) for e in errs)) / 8.0


@dataclass
class DetEval:
    """Full detection evaluation over a set of frames."""

    ap: dict                 # {class: {threshold: AP}}
    mean_ap: float
    mate: float
    mase: float
    maoe: float
    mave: float
    ods: float
    pr_points: dict = field(default_factory=dict)  # {class: [(recall, precision), ...]}

    def to_dict(self) -> dict:
        return {
            "ap": {str(c): {str(t): v for t, v in per.items()} for c, per in self.ap.items()},
            "mAP": self.mean_ap,
            "mATE": self.mate, "mASE": self.mase, "mAOE": self.maoe, "mAVE": self.mave,
            "ODS": self.ods,
        }


def evaluate_detection(frames, n_classes: int, thresholds=DEFAULT_THRESHOLDS) -> DetEval:
    """Evaluate (pred: BoxSet, gt: BoxSet) frame pairs.

    mAP averages per-class AP over thresholds, skipping classes with no
    ground truth anywhere; TP errors are computed at the largest
    threshold over all matched pairs.
    """
    thresholds = tuple(sorted(thresholds))
    ap_table: dict = {}
    pr_points: dict = {}
    class_aps = []
    tp_pairs = []
    for c in range(n_classes):
        gt_count = sum(int(np.sum(gt.classes == c)) for _, gt in frames)
        if gt_count == 0:
            continue
        per_thr = {}
        for thr in thresholds:
            scored = []
            for pred, gt in frames:
                psel = _select_class(pred, c)
                gsel = _select_class(gt, c)
                pairs, fps, _ = match_by_center_distance(psel, gsel, thr)
                for i, j in pairs:
                    scored.append((float(psel.scores[i]), True))
                    if thr == thresholds[-1]:
                        tp_pairs.append((psel.params[i], gsel.params[j]))
                for i in fps:
                    scored.append((float(psel.scores[i]), False))
            per_thr[thr] = average_precision(scored, gt_count)
            if thr == thresholds[-1]:
                pr_points[c] = _pr_sweep(scored, gt_count)
        ap_table[c] = per_thr
        class_aps.append(np.mean(list(per_thr.values())))
    mean_ap = float(np.mean(class_aps)) if class_aps else 0.0
    mate, mase, maoe, mave = true_positive_errors(tp_pairs)
    return DetEval(ap_table, mean_ap, mate, mase, maoe, mave,
                   ods(mean_ap, mate, mase, maoe, mave), pr_points)


def _select_class(boxes: BoxSet, cls: int) -> BoxSet:
    keep = boxes.classes == cls
    return BoxSet(boxes.params[keep], boxes.classes[keep], boxes.scores[keep])


def _pr_sweep(scored, n_gt: int):
    if not scored or n_gt == 0:
        return []
    arr = sorted(scored, key=lambda sh: -sh[0])
    tp = fp = 0
    points = []
    for _, hit in arr:
        tp += int(hit)
        fp += int(not hit)
        points.append((tp / n_gt, tp / (tp + fp)))
    return points


@dataclass
class OccEval:
    per_class_iou: dict      # {class label: IoU} over semantic labels present
    mean_iou: float
    scene_completion_iou: float

    def to_dict(self) -> dict:
        return {
            "per_class_iou": {str(k): v for k, v in self.per_class_iou.items()},
            "mIoU": self.mean_iou,
            "SC_IoU": self.scene_completion_iou,
        }


def occupancy_iou(pred: OccGrid, gt: OccGrid, n_classes: int = 11) -> OccEval:
    """Per-class and scene-completion IoU between two label grids.

    Semantic classes are labels 1..n_classes; label 0 is free space.
    Classes absent from both grids are excluded from the mean.
    """
    if pred.labels.shape != gt.labels.shape:
        raise ValueError("occupancy grids must share a shape")
    per_class = {}
    for c in range(1, n_classes + 1):
        p = pred.labels == c
        g = gt.labels == c
        tp = int(np.sum(p & g))
        fp = int(np.sum(p & ~g))
        fn = int(np.sum(~p & g))
        if tp + fp + fn == 0:
            continue
        per_class[c] = tp / (tp + fp + fn)
    mean_iou = float(np.mean(list(per_class.values()))) if per_class else 0.0
    p_occ = pred.labels != 0
    g_occ = gt.labels != 0
    tp = int(np.sum(p_occ & g_occ))
    fp = int(np.sum(p_occ & ~g_occ))
    fn = int(np.sum(~p_occ & g_occ))
    sc = tp / (tp + fp + fn) if (tp + fp + fn) else 1.0
    return OccEval(per_class, mean_iou, sc)
