"""Multi-task heads, set matching, and every loss with analytic gradients.

Boxes use a fixed 10-parameter layout [l, w, h, x, y, z, cos, sin, vx, vy]
in metric units. Occupancy labels are integers with 0 = free and 1..K the
semantic classes, matching the occupancy head's logit channels. Losses
return (value, gradient) pairs so the whole suite can be verified against
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor_ops as T
from .blocks import Mlp
from .rng import stream
from .view_transform import DeformAttnParams, deform_attn_2d

__all__ = [
    "BOX_PARAMS",
    "BoxSet",
    "OccGrid",
    "LossReport",
    "DetectionHeadParams",
    "detection_head",
    "decode_detections",
    "OccupancyHeadParams",
    "occupancy_head",
    "hungarian_match",
    "focal_loss",
    "l1_loss",
    "cross_entropy_loss",
    "geo_scal_loss",
    "sem_scal_loss",
    "bce_loss",
    "dice_loss",
    "bce_dice",
    "detection_loss",
    "occ_loss",
    "aux_loss",
    "total_loss",
]

BOX_PARAMS = 10  # l, w, h, x, y, z, cos(yaw), sin(yaw), v_x, v_y


@dataclass
class BoxSet:
    """Arrays of 3D boxes: (N, 10) params, (N,) class ids and scores."""

    params: np.ndarray
    classes: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64).reshape(-1, BOX_PARAMS)
        self.classes = np.asarray(self.classes, dtype=np.int64).reshape(-1)
        self.scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        if not (len(self.params) == len(self.classes) == len(self.scores)):
            raise ValueError("params, classes and scores must have equal length")

    def __len__(self) -> int:
        return len(self.params)

    @staticmethod
    def empty() -> "BoxSet":
        return BoxSet(np.zeros((0, BOX_PARAMS)), np.zeros(0, dtype=np.int64), np.zeros(0))

    @property
    def centers(self) -> np.ndarray:
        return self.params[:, 3:6]

    @property
    def sizes(self) -> np.ndarray:
        return self.params[:, 0:3]

    @property
    def yaws(self) -> np.ndarray:
        return np.arctan2(self.params[:, 7], self.params[:, 6])

    @property
    def velocities(self) -> np.ndarray:
        return self.params[:, 8:10]


@dataclass
class OccGrid:
    """Dense semantic occupancy: integer labels, 0 = free, 1..K semantic."""

    labels: np.ndarray  # (H, W, Z)
    x_bounds: tuple = (-60.0, 60.0)
    y_bounds: tuple = (-40.0, 40.0)
    z_bounds: tuple = (-3.0, 5.0)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 3:
            raise ValueError("occupancy labels must be (H, W, Z)")


# ---------------------------------------------------------------------------
# heads
# ---------------------------------------------------------------------------

@dataclass
class DetectionHeadParams:
    """Learned query embeddings attending into the fused BEV map."""

    embeddings: np.ndarray    # (n_queries, C)
    ref_points: np.ndarray    # (n_queries, 2) in BEV grid units (x, y)
    attn: DeformAttnParams
    mlp: Mlp
    n_classes: int

    @staticmethod
    def seeded(seed: int, channels: int, n_queries: int, n_classes: int,
               bev_extents, n_heads: int = 4, n_points: int = 4,
               hidden: int | None = None) -> "DetectionHeadParams":
        h, w = bev_extents
        rng = stream(seed, "detection_head")
        emb = rng.normal(0.0, 1.0, size=(n_queries, channels))
        refs = np.stack([rng.uniform(0, w - 1, size=n_queries),
                         rng.uniform(0, h - 1, size=n_queries)], axis=1)
        attn = DeformAttnParams.seeded(seed, "det_head", channels, n_heads, n_points, ndim=2)
        mlp = Mlp.seeded(seed, "det_head", channels, hidden or 2 * channels,
                         n_classes + BOX_PARAMS)
        return DetectionHeadParams(emb, refs, attn, mlp, n_classes)


def detection_head(f_bev: np.ndarray, params: DetectionHeadParams):
    """Per-query class logits (n_q, K) and raw box params (n_q, 10)."""
    ctx = deform_attn_2d(params.embeddings, params.ref_points, f_bev, params.attn)
    out = params.mlp(ctx)
    return out[:, :params.n_classes], out[:, params.n_classes:]


def decode_detections(class_logits: np.ndarray, box_params: np.ndarray,
                      top_k: int | None = None) -> BoxSet:
    """Sigmoid scores, argmax class, normalized yaw, optional top-k cut."""
    probs = T.sigmoid(class_logits)
    classes = probs.argmax(axis=1)
    scores = probs.max(axis=1)
    boxes = np.array(box_params, dtype=np.float64)
    norm = np.hypot(boxes[:, 6], boxes[:, 7])
    safe = norm > 1e-12
    boxes[safe, 6] /= norm[safe]
    boxes[safe, 7] /= norm[safe]
    boxes[~safe, 6] = 1.0
    boxes[~safe, 7] = 0.0
    boxes[:, 0:3] = np.maximum(boxes[:, 0:3], 1e-3)
    if top_k is not None and len(boxes) > top_k:
        order = np.argsort(-scores, kind="stable")[:top_k]
        boxes, classes, scores = boxes[order], classes[order], scores[order]
    return BoxSet(boxes, classes, scores)


@dataclass
class OccupancyHeadParams:
    mlp: Mlp
    n_classes: int  # semantic classes; logits have n_classes + 1 channels, 0 = free

    @staticmethod
    def seeded(seed: int, channels: int, n_classes: int,
               hidden: int | None = None) -> "OccupancyHeadParams":
        return OccupancyHeadParams(
            Mlp.seeded(seed, "occ_head", channels, hidden or 2 * channels, n_classes + 1),
            n_classes)


def occupancy_head(f_vox: np.ndarray, params: OccupancyHeadParams) -> np.ndarray:
    """Per-voxel logits (H, W, Z, K+1) from a (C, H, W, Z) volume."""
    c = f_vox.shape[0]
    flat = f_vox.reshape(c, -1).T
    logits = params.mlp(flat)
    return logits.reshape(*f_vox.shape[1:], params.n_classes + 1)


# ---------------------------------------------------------------------------
# Hungarian matching
# ---------------------------------------------------------------------------

def _solve_square(cost: np.ndarray):
    """Jonker-Volgenant shortest augmenting paths on a square matrix.

    Returns (col_to_row, row_duals, col_duals); the reduced costs
    cost - u[:, None] - v[None, :] are nonnegative and zero on matched
    edges, so every perfect matching on tight edges is optimal.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)  # match[j] = row on column j, 1-indexed
    way = np.zeros(n + 1, dtype=np.int64)
    c1 = np.zeros((n + 1, n + 1))
    c1[1:, 1:] = cost - cost.min() if n else cost  # keep entries nonnegative
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            cur = c1[i0, 1:] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:])
            if np.any(better):
                idx = np.flatnonzero(better) + 1
                minv[idx] = cur[idx - 1]
                way[idx] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            rows = match[used]
            u[rows] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    return match[1:] - 1, u[1:], v[1:]


class _TightMatching:
    """Perfect matching over the tight-edge graph with edge rerouting."""

    def __init__(self, tight: np.ndarray, col_to_row: np.ndarray):
        self.adj = [np.flatnonzero(tight[:, j]).tolist() for j in range(tight.shape[1])]
        self.col_to_row = col_to_row.copy()
        self.row_to_col = {int(r): j for j, r in enumerate(col_to_row)}
        self.banned: set = set()

    def _augment(self, col: int, visited: set) -> bool:
        # iterative DFS over alternating paths; flips matches on success
        stack = [(col, iter(self.adj[col]))]
        path = []
        while stack:
            j, rows = stack[-1]
            advanced = False
            for i in rows:
                if i in visited or i in self.banned:
                    continue
                visited.add(i)
                holder = self.row_to_col.get(i)
                path.append((j, i))
                if holder is None:
                    for pj, pi in path:
                        self.row_to_col[pi] = pj
                        self.col_to_row[pj] = pi
                    return True
                stack.append((holder, iter(self.adj[holder])))
                advanced = True
                break
            if not advanced:
                stack.pop()
                if path:
                    path.pop()
        return False

    def try_fix(self, col: int, row: int) -> bool:
        """Force (row, col) if a perfect matching still exists; else no-op."""
        cur = int(self.col_to_row[col])
        if cur == row:
            self.banned.add(row)
            return True
        if row not in self.adj[col]:
            return False
        displaced = self.row_to_col.get(row)
        # tentatively place (row, col); the old row of `col` becomes free
        del self.row_to_col[cur]
        self.row_to_col[row] = col
        self.col_to_row[col] = row
        if displaced is None:
            self.banned.add(row)
            return True
        self.col_to_row[displaced] = -1
        if self._augment(displaced, {row}):
            self.banned.add(row)
            return True
        # rollback
        self.col_to_row[displaced] = row
        self.row_to_col[row] = displaced
        self.col_to_row[col] = cur
        self.row_to_col[cur] = col
        return False


def minimum_assignment(cost: np.ndarray) -> np.ndarray:
    """Optimal assignment of every column to a distinct row, (M, 2) pairs.

    Pairs are (row, col) sorted by column index. Among equal-cost optima
    the assignment preferring the lowest row per column, in column order,
    is returned; the tie set comes from the solver's dual certificate.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n_rows, n_cols = cost.shape
    if n_cols > n_rows:
        raise ValueError(f"need at least as many rows as columns ({n_rows} < {n_cols})")
    if n_cols == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    # pad with zero-cost dummy columns so the problem is square; dummies
    # absorb unmatched rows without changing any assignment's total
    square = np.zeros((n_rows, n_rows))
    square[:, :n_cols] = cost
    col_to_row, u, v = _solve_square(square)

    scale = max(1.0, float(np.max(np.abs(square))))
    tol = 1e-9 * scale
    slack = (square - square.min()) - u[:, None] - v[None, :]
    tight = slack <= tol

    matching = _TightMatching(tight, col_to_row)
    fixed = np.empty(n_cols, dtype=np.int64)
    for j in range(n_cols):
        for i in matching.adj[j]:
            if i in matching.banned:
                continue
            if matching.try_fix(j, i):
                break
        fixed[j] = matching.col_to_row[j]
    return np.stack([fixed, np.arange(n_cols)], axis=1)


def match_cost_matrix(class_probs: np.ndarray, box_params: np.ndarray, gt: BoxSet,
                      lambda_cls: float, lambda_reg: float) -> np.ndarray:
    """(n_pred, n_gt) matching costs from per-class probabilities and raw boxes."""
    eps = 1e-12
    cls_cost = -np.log(np.clip(class_probs[:, gt.classes], eps, 1.0))
    reg_cost = np.abs(box_params[:, None, :] - gt.params[None, :, :]).mean(axis=2)
    return lambda_cls * cls_cost + lambda_reg * reg_cost


def hungarian_match(pred: BoxSet, gt: BoxSet, lambda_cls: float = 2.0,
                    lambda_reg: float = 0.25, class_probs: np.ndarray | None = None) -> np.ndarray:
    """One-to-one assignment of ground-truth boxes to predictions.

    Pair cost: lambda_cls * (-log p_pred(class_gt)) + lambda_reg * mean
    absolute difference of the 10 box parameters. ``class_probs`` supplies
    the full (n_pred, K) distribution; without it the decoded score stands
    in (score for the box's own class, 1 - score elsewhere). Returns
    (M, 2) rows of (pred index, gt index) sorted by gt index.
    """
    n_pred, n_gt = len(pred), len(gt)
    if n_gt > n_pred:
        raise ValueError(f"cannot match {n_gt} ground-truth boxes to {n_pred} predictions")
    if n_gt == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if class_probs is None:
        k = int(max(pred.classes.max(initial=0), gt.classes.max(initial=0))) + 1
        class_probs = np.where(
            pred.classes[:, None] == np.arange(k)[None, :],
            pred.scores[:, None], 1.0 - pred.scores[:, None])
    cost = match_cost_matrix(np.asarray(class_probs, dtype=np.float64),
                             pred.params, gt, lambda_cls, lambda_reg)
    return minimum_assignment(cost)


# ---------------------------------------------------------------------------
# losses (value, gradient) pairs
# ---------------------------------------------------------------------------

def focal_loss(probs: np.ndarray, targets: np.ndarray, alpha: float = 0.25,
               gamma: float = 2.0):
    """Mean focal loss over probabilities against binary targets."""
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    n = p.size
    pos = alpha * (1 - p) ** gamma * (-np.log(np.clip(p, 1e-300, None)))
    neg = (1 - alpha) * p ** gamma * (-np.log(np.clip(1 - p, 1e-300, None)))
    value = float(np.sum(t * pos + (1 - t) * neg) / n)
    dpos = alpha * (gamma * (1 - p) ** (gamma - 1) * np.log(np.clip(p, 1e-300, None))
                    - (1 - p) ** gamma / np.clip(p, 1e-300, None))
    dneg = (1 - alpha) * (gamma * p ** (gamma - 1) * (-np.log(np.clip(1 - p, 1e-300, None)))
                          + p ** gamma / np.clip(1 - p, 1e-300, None))
    grad = (t * dpos + (1 - t) * dneg) / n
    return value, grad


def l1_loss(pred: np.ndarray, target: np.ndarray):
    """Mean absolute difference over all elements."""
    d = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    value = float(np.mean(np.abs(d)))
    grad = np.sign(d) / d.size
    return value, grad


def _softmax_chain(probs: np.ndarray, dprobs: np.ndarray) -> np.ndarray:
    inner = np.sum(dprobs * probs, axis=-1, keepdims=True)
    return probs * (dprobs - inner)


def cross_entropy_loss(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy; logits (..., K), integer labels (...)."""
    lg = np.asarray(logits, dtype=np.float64)
    lb = np.asarray(labels, dtype=np.int64)
    probs = T.softmax(lg, axis=-1)
    flat_p = probs.reshape(-1, lg.shape[-1])
    flat_l = lb.reshape(-1)
    n = flat_l.size
    picked = flat_p[np.arange(n), flat_l]
    value = float(np.mean(-np.log(np.clip(picked, 1e-300, None))))
    onehot = np.zeros_like(flat_p)
    onehot[np.arange(n), flat_l] = 1.0
    grad = ((flat_p - onehot) / n).reshape(lg.shape)
    return value, grad


def _scal_terms(p: np.ndarray, y: np.ndarray):
    """-log precision/recall/specificity of soft prediction p vs binary y.

    Returns (value, dvalue/dp); terms whose denominator is empty are
    skipped.
    """
    eps = 1e-300
    value = 0.0
    grad = np.zeros_like(p)
    inter = float(np.sum(p * y))
    sum_p = float(np.sum(p))
    sum_y = float(np.sum(y))
    if sum_p > 0 and sum_y > 0:
        value += -np.log(max(inter / sum_p, eps))  # precision
        grad += -(y / max(inter, eps)) + 1.0 / sum_p
    if sum_y > 0:
        value += -np.log(max(inter / sum_y, eps))  # recall
        grad += -(y / max(inter, eps))
    neg = 1.0 - y
    sum_neg = float(np.sum(neg))
    if sum_neg > 0:
        spec_num = float(np.sum((1 - p) * neg))
        value += -np.log(max(spec_num / sum_neg, eps))  # specificity
        grad += neg / max(spec_num, eps)
    return value, grad


def geo_scal_loss(logits: np.ndarray, labels: np.ndarray):
    """Scene-level affinity loss on the occupied-vs-free split.

    logits are (..., K+1) with channel 0 = free; labels are integers.
    """
    lg = np.asarray(logits, dtype=np.float64)
    probs = T.softmax(lg, axis=-1)
    flat_p = probs.reshape(-1, lg.shape[-1])
    y_occ = (np.asarray(labels).reshape(-1) != 0).astype(np.float64)
    p_occ = 1.0 - flat_p[:, 0]
    value, d_occ = _scal_terms(p_occ, y_occ)
    dprobs = np.zeros_like(flat_p)
    dprobs[:, 0] = -d_occ
    grad = _softmax_chain(flat_p, dprobs).reshape(lg.shape)
    return float(value), grad


def sem_scal_loss(logits: np.ndarray, labels: np.ndarray):
    """Class-wise affinity loss averaged over classes present in the labels."""
    lg = np.asarray(logits, dtype=np.float64)
    k = lg.shape[-1]
    probs = T.softmax(lg, axis=-1)
    flat_p = probs.reshape(-1, k)
    flat_l = np.asarray(labels).reshape(-1)
    value = 0.0
    dprobs = np.zeros_like(flat_p)
    count = 0
    for c in range(k):
        y = (flat_l == c).astype(np.float64)
        if y.sum() == 0:
            continue
        count += 1
        v, d = _scal_terms(flat_p[:, c], y)
        value += v
        dprobs[:, c] += d
    if count == 0:
        return 0.0, np.zeros_like(lg)
    value /= count
    dprobs /= count
    grad = _softmax_chain(flat_p, dprobs).reshape(lg.shape)
    return float(value), grad


def bce_loss(probs: np.ndarray, targets: np.ndarray):
    """Mean binary cross-entropy over probabilities."""
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    n = p.size
    pc = np.clip(p, 1e-300, None)
    qc = np.clip(1 - p, 1e-300, None)
    value = float(np.sum(-t * np.log(pc) - (1 - t) * np.log(qc)) / n)
    grad = (-t / pc + (1 - t) / qc) / n
    return value, grad


def dice_loss(probs: np.ndarray, targets: np.ndarray, eps: float = 1.0):
    """Soft Dice loss with additive smoothing."""
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    num = 2.0 * float(np.sum(p * t)) + eps
    den = float(np.sum(p) + np.sum(t)) + eps
    value = 1.0 - num / den
    grad = (num - 2.0 * t * den) / den ** 2
    return value, grad


def bce_dice(probs: np.ndarray, targets: np.ndarray):
    """BCE + Dice for one mask; gradient w.r.t. the probabilities."""
    bv, bg = bce_loss(probs, targets)
    dv, dg = dice_loss(probs, targets)
    return bv + dv, bg + dg


# ---------------------------------------------------------------------------
# composite losses
# ---------------------------------------------------------------------------

@dataclass
class LossReport:
    """Per-term values; total = det + occ + aux."""

    det: float
    occ: float
    aux: float
    terms: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.det + self.occ + self.aux


def detection_loss(class_logits: np.ndarray, box_params: np.ndarray, gt: BoxSet,
                   lambda_cls: float = 2.0, lambda_reg: float = 0.25):
    """Set-matched detection loss: lambda_cls * focal + lambda_reg * L1.

    Returns (value, terms dict). Classification focal runs over all
    query/class sigmoid probabilities with matched queries as positives;
    regression L1 runs over matched boxes only (zero when no ground truth).
    """
    probs = T.sigmoid(class_logits)
    match = np.zeros((0, 2), dtype=np.int64)
    if len(gt):
        cost = match_cost_matrix(probs, box_params, gt, lambda_cls, lambda_reg)
        match = minimum_assignment(cost)
    targets = np.zeros_like(probs)
    if len(match):
        targets[match[:, 0], gt.classes[match[:, 1]]] = 1.0
    cls_value, _ = focal_loss(probs, targets)
    if len(match):
        reg_value, _ = l1_loss(box_params[match[:, 0]], gt.params[match[:, 1]])
    else:
        reg_value = 0.0
    value = lambda_cls * cls_value + lambda_reg * reg_value
    return value, {"cls": cls_value, "reg": reg_value, "match": match}


def occ_loss(logits: np.ndarray, gt: OccGrid):
    """Cross-entropy plus the two affinity losses; grad w.r.t. logits."""
    ce_v, ce_g = cross_entropy_loss(logits, gt.labels)
    geo_v, geo_g = geo_scal_loss(logits, gt.labels)
    sem_v, sem_g = sem_scal_loss(logits, gt.labels)
    return ce_v + geo_v + sem_v, ce_g + geo_g + sem_g, {
        "ce": ce_v, "geo_scal": geo_v, "sem_scal": sem_v}


def aux_loss(occ_probs: np.ndarray, occ_target: np.ndarray,
             seg_probs: np.ndarray, seg_target: np.ndarray):
    """BCE + Dice on the binary occupancy mask and the BEV foreground mask."""
    ov, _ = bce_dice(occ_probs, occ_target)
    sv, _ = bce_dice(seg_probs, seg_target)
    return ov + sv, {"occ_mask": ov, "seg_mask": sv}


def total_loss(det: float, occ: float, aux: float) -> float:
    """Plain sum of the three task losses."""
    return det + occ + aux
