"""End-to-end forward pipeline over synthetic or serialized scenes.

Per frame: radar sweeps are accumulated and encoded to BEV features,
camera features are back-projected into coarse voxel queries, the voxel
encoder refines them, the temporal encoder fuses history, the cross-modal
stage exchanges BEV/voxel context, and the heads emit detections and
semantic occupancy. With ground truth present, all losses and the metric
suite are computed. Everything is driven by one seed; identical runs
produce bitwise-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor_ops as T
from .config import PipelineConfig
from .fusion import FusionParams, aux_heads, enhance_bev, enhance_voxel, upsample_voxel
from .geometry import make_ref_grid_2d, make_ref_grid_3d
from .heads_losses import (BoxSet, DetectionHeadParams, OccGrid, OccupancyHeadParams,
                           aux_loss, decode_detections, detection_head, detection_loss,
                           occ_loss, occupancy_head, total_loss)
from .metrics import evaluate_detection, occupancy_iou
from .radar import BevBackboneParams, PillarConfig, bev_backbone, compensate_and_accumulate, pillarize
from .synthscene import Scene, SceneConfig, generate_scene, rasterize_gt, render_camera_features, simulate_radar_sweep
from .temporal import TemporalBuffer, TemporalParams, dte_step
from .view_transform import (RadarBranchParams, VoxelEncoderParams, combine_queries,
                             image_query_branch, radar_query_branch, voxel_encoder)

__all__ = ["PipelineParams", "DUMP_STAGES", "run_pipeline", "scene_for_config", "dump_features"]

DUMP_STAGES = (
    "radar_bev", "queries", "queries_encoded", "temporal_vox", "temporal_bev",
    "fused_vox", "fused_bev", "aux_occ", "aux_seg", "occ_pred",
)


@dataclass
class PipelineParams:
    """All seeded weights plus the reference grids, built once per config."""

    cfg: PipelineConfig
    vox_grid: object
    bev_grid: object
    backbone: BevBackboneParams
    radar_branch: RadarBranchParams
    encoder: VoxelEncoderParams
    temporal: TemporalParams
    fusion: FusionParams
    det_head: DetectionHeadParams
    occ_head: OccupancyHeadParams

    @staticmethod
    def build(cfg: PipelineConfig) -> "PipelineParams":
        cfg.validate()
        vox_grid = make_ref_grid_3d(cfg.x_bounds, cfg.y_bounds, cfg.z_bounds, cfg.voxel_extents)
        bev_grid = make_ref_grid_2d(cfg.x_bounds, cfg.y_bounds, cfg.bev_extents)
        history = cfg.temporal_frames - 1
        return PipelineParams(
            cfg, vox_grid, bev_grid,
            BevBackboneParams.seeded(cfg.seed, cfg.radar_channels),
            RadarBranchParams.seeded(cfg.seed, cfg.radar_channels, cfg.channels),
            VoxelEncoderParams.seeded(cfg.seed, cfg.channels, cfg.encoder_layers,
                                      cfg.attn_heads, cfg.attn_points),
            TemporalParams.seeded(cfg.seed, cfg.channels, cfg.radar_channels,
                                  max(history, 1), cfg.attn_heads, cfg.attn_points),
            FusionParams.seeded(cfg.seed, cfg.channels, cfg.radar_channels),
            DetectionHeadParams.seeded(cfg.seed, cfg.channels, cfg.n_queries,
                                       cfg.n_det_classes, cfg.bev_extents,
                                       cfg.attn_heads, cfg.attn_points),
            OccupancyHeadParams.seeded(cfg.seed, cfg.channels, cfg.n_occ_classes),
        )


def scene_for_config(cfg: PipelineConfig, n_steps: int, ego_mode: str = "free") -> Scene:
    """Synthesize a scene whose rig and bounds match the pipeline config."""
    sc = SceneConfig(
        n_steps=n_steps, n_cameras=cfg.cameras,
        image_extent=cfg.image_extent, feature_extent=cfg.feature_extent,
        x_bounds=cfg.x_bounds, y_bounds=cfg.y_bounds, z_bounds=cfg.z_bounds,
        ego_mode=ego_mode,
    )
    return generate_scene(cfg.seed, sc)


def _process_frame(scene: Scene, step: int, params: PipelineParams,
                   buffer: TemporalBuffer):
    cfg = params.cfg
    first_sweep = max(0, step - cfg.sweeps + 1)
    sweeps = [simulate_radar_sweep(scene, s, r, current_step=step)
              for s in range(first_sweep, step + 1)
              for r in range(len(scene.radar_poses))]
    cloud = compensate_and_accumulate(sweeps)
    pillar_cfg = PillarConfig(cfg.x_bounds, cfg.y_bounds, cfg.z_bounds, cfg.bev_extents)
    pseudo = pillarize(cloud, pillar_cfg, cfg.radar_channels, cfg.seed)
    f_radar = bev_backbone(pseudo, params.backbone)

    feats = [render_camera_features(scene, step, i, cfg.channels)
             for i in range(len(scene.cameras))]
    q_radar = radar_query_branch(f_radar, params.vox_grid, params.radar_branch)
    q_image = image_query_branch(feats, scene.cameras, params.vox_grid, cfg.channels)
    queries = combine_queries(q_radar, q_image)
    encoded = voxel_encoder(queries, feats, scene.cameras, params.encoder)

    temporal = params.temporal if cfg.temporal_frames > 1 else None
    fused_vox, fused_bev, _ = dte_step(buffer, encoded.tensor, f_radar,
                                       scene.ego_poses[step], params.vox_grid,
                                       params.bev_grid, temporal)

    up = upsample_voxel(fused_vox, params.fusion)
    enh_vox = enhance_voxel(up, fused_bev, params.fusion)
    enh_bev = enhance_bev(fused_bev, up, params.fusion)
    m_vox, m_bev = aux_heads(enh_vox, enh_bev, params.fusion)

    cls_logits, box_params = detection_head(enh_bev, params.det_head)
    detections = decode_detections(cls_logits, box_params, top_k=cfg.top_k)
    occ_logits = occupancy_head(enh_vox, params.occ_head)
    occ_pred = OccGrid(np.argmax(occ_logits, axis=-1),
                       cfg.x_bounds, cfg.y_bounds, cfg.z_bounds)

    gt_boxes, gt_occ, gt_mask = rasterize_gt(scene, step, cfg.occ_extents, cfg.bev_extents)
    det_v, det_terms = detection_loss(cls_logits, box_params, gt_boxes,
                                      cfg.lambda_cls, cfg.lambda_reg)
    occ_v, _, occ_terms = occ_loss(occ_logits, gt_occ)
    aux_v, aux_terms = aux_loss(m_vox, (gt_occ.labels != 0).astype(np.float64),
                                m_bev, gt_mask)
    losses = {
        "det": det_v, "occ": occ_v, "aux": aux_v,
        "total": total_loss(det_v, occ_v, aux_v),
        "det_cls": det_terms["cls"], "det_reg": det_terms["reg"],
        **{k: v for k, v in occ_terms.items()},
        **{k: v for k, v in aux_terms.items()},
    }
    stages = {
        "radar_bev": f_radar, "queries": queries.tensor,
        "queries_encoded": encoded.tensor, "temporal_vox": fused_vox,
        "temporal_bev": fused_bev, "fused_vox": enh_vox, "fused_bev": enh_bev,
        "aux_occ": m_vox, "aux_seg": m_bev,
        "occ_pred": occ_pred.labels.astype(np.float64),
    }
    return detections, occ_pred, gt_boxes, gt_occ, losses, stages


def dump_features(stages: dict, stage: str, frame: int, out_dir) -> list:
    """Write one stage's tensor (binary + text) and a PGM preview.

    2D maps render the per-cell channel norm; 3D masks/volumes render the
    max over the height axis; probabilities are scaled by 255.
    """
    if stage not in stages:
        raise ValueError(f"unknown stage {stage!r}; valid stages: {', '.join(DUMP_STAGES)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    x = np.asarray(stages[stage], dtype=np.float64)
    base = out_dir / f"{stage}_f{frame:03d}"
    written = [base.with_suffix(".dtns"), base.with_suffix(".txt"), base.with_suffix(".pgm")]
    base.with_suffix(".dtns").write_bytes(T.dump_binary(x))
    base.with_suffix(".txt").write_text(T.dump_text(x))

    if stage in ("aux_occ", "aux_seg"):
        img = x.max(axis=-1) if x.ndim == 3 else x
        img8 = np.clip(img * 255.0, 0, 255).astype(np.uint8)
    else:
        if x.ndim == 4:      # (C, H, W, Z) -> channel norm, max over height
            img = np.sqrt(np.square(x).sum(axis=0)).max(axis=-1)
        elif x.ndim == 3:    # (C, H, W) -> channel norm
            img = np.sqrt(np.square(x).sum(axis=0))
        else:
            img = x
        peak = img.max()
        img8 = (img / peak * 255.0).astype(np.uint8) if peak > 0 else np.zeros_like(img, dtype=np.uint8)
    h, w = img8.shape
    with open(base.with_suffix(".pgm"), "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(img8.tobytes())
    return written


def run_pipeline(cfg: PipelineConfig, scene: Scene, n_frames: int | None = None,
                 dump_stages=(), out_dir="out") -> dict:
    """Run the full pipeline over a scene and return the report dict.

    The report carries per-frame losses, detection metrics (per-class AP
    table, the four TP errors, the composite score) and occupancy IoU;
    ``dump_stages`` writes inspection dumps for every frame.
    """
    cfg.validate()
    params = PipelineParams.build(cfg)
    steps = scene.config.n_steps if n_frames is None else min(n_frames, scene.config.n_steps)
    buffer = TemporalBuffer(capacity=cfg.temporal_frames - 1)

    frames = []
    occ_preds = []
    occ_gts = []
    frame_losses = []
    predictions = []
    out_dir = Path(out_dir)
    for step in range(steps):
        det, occ_pred, gt_boxes, gt_occ, losses, stages = _process_frame(
            scene, step, params, buffer)
        frames.append((det, gt_boxes))
        occ_preds.append(occ_pred.labels)
        occ_gts.append(gt_occ.labels)
        frame_losses.append(losses)
        predictions.append({
            "frame": step,
            "boxes": det.params.tolist(),
            "classes": det.classes.tolist(),
            "scores": det.scores.tolist(),
            "occupancy_dump": f"occ_pred_f{step:03d}.dtns",
        })
        for stage in dump_stages:
            dump_features(stages, stage, step, out_dir)

    det_eval = evaluate_detection(frames, cfg.n_det_classes, cfg.match_thresholds)
    occ_eval = occupancy_iou(
        OccGrid(np.concatenate(occ_preds, axis=2)),
        OccGrid(np.concatenate(occ_gts, axis=2)),
        cfg.n_occ_classes)
    report = {
        "frames": steps,
        "seed": cfg.seed,
        "losses": frame_losses,
        "detection": det_eval.to_dict(),
        "occupancy": occ_eval.to_dict(),
    }
    return {"report": report, "det_eval": det_eval, "occ_eval": occ_eval,
            "predictions": predictions}


def write_report(result: dict, report_path, out_dir) -> None:
    """Write the metrics report, predictions file, and PR-point CSVs."""
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(json.dumps(result["report"], indent=2, sort_keys=True))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "predictions.json").write_text(json.dumps(result["predictions"], sort_keys=True))
    lines = ["class,recall,precision"]
    for cls, points in sorted(result["det_eval"].pr_points.items()):
        for r, p in points:
            lines.append(f"{cls},{float(r)!r},{float(p)!r}")
    (out / "pr_points.csv").write_text("\n".join(lines) + "\n")
