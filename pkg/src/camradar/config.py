"""Pipeline configuration with validated defaults.

The reference configuration mirrors the full-scale setup: point-cloud
range (-60, 60) x (-40, 40) x (-3, 5) m, voxel queries 80x120x8, BEV maps
160x240, occupancy 160x240x16, 900 object queries, loss weights 2.0 and
0.25. ``desk_scale`` shrinks every extent about 4x so the whole pipeline
runs in seconds.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

__all__ = ["PipelineConfig", "paper_scale", "desk_scale", "load_config"]


@dataclass
class PipelineConfig:
    # metric range, shared by every grid
    x_bounds: tuple = (-60.0, 60.0)
    y_bounds: tuple = (-40.0, 40.0)
    z_bounds: tuple = (-3.0, 5.0)
    # grid extents (rows span y, columns span x)
    voxel_extents: tuple = (80, 120, 8)
    bev_extents: tuple = (160, 240)
    occ_extents: tuple = (160, 240, 16)
    # temporal window: total frames, current + history
    temporal_frames: int = 4
    encoder_layers: int = 3
    attn_heads: int = 4
    attn_points: int = 4
    # channel widths
    channels: int = 32          # voxel query / image feature channels
    radar_channels: int = 16    # radar BEV channels
    n_queries: int = 900
    top_k: int = 300
    n_det_classes: int = 4
    n_occ_classes: int = 11
    sweeps: int = 3
    seed: int = 0
    lambda_cls: float = 2.0
    lambda_reg: float = 0.25
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    match_thresholds: tuple = (1.0, 2.0, 4.0)
    # synthetic-scene knobs
    cameras: int = 6
    image_extent: tuple = (544, 960)
    feature_extent: tuple = (34, 60)

    def validate(self) -> "PipelineConfig":
        def err(msg):
            raise ValueError(f"configuration error: {msg}")

        for name in ("x_bounds", "y_bounds", "z_bounds"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                err(f"{name} must be ordered min < max, got {(lo, hi)}")
        hv, wv, zv = self.voxel_extents
        hb, wb = self.bev_extents
        ho, wo, zo = self.occ_extents
        if (hv, wv) != (hb // 2, wb // 2) or hb % 2 or wb % 2:
            err(f"voxel_extents {self.voxel_extents} must be half the BEV extents {self.bev_extents}")
        if (ho, wo) != (hb, wb):
            err(f"occ_extents {self.occ_extents} must match BEV extents {self.bev_extents}")
        if zo != 2 * zv:
            err(f"occ z extent {zo} must be twice the voxel z extent {zv}")
        if min(hv, wv, zv) < 1:
            err("voxel extents must be positive")
        if self.temporal_frames < 1:
            err("temporal_frames must be >= 1")
        if self.encoder_layers < 1:
            err("encoder_layers must be >= 1")
        if self.channels % self.attn_heads:
            err(f"channels {self.channels} must divide into {self.attn_heads} heads")
        if self.radar_channels % self.attn_heads:
            err(f"radar_channels {self.radar_channels} must divide into {self.attn_heads} heads")
        if self.n_queries < 1 or self.top_k < 1:
            err("n_queries and top_k must be positive")
        if not (isinstance(self.sweeps, int) and self.sweeps >= 1):
            err("sweeps must be a positive integer")
        ih, iw = self.image_extent
        fh, fw = self.feature_extent
        if ih % fh or iw % fw:
            err(f"feature_extent {self.feature_extent} must divide image_extent {self.image_extent}")
        if self.cameras < 1:
            err("cameras must be >= 1")
        if any(t <= 0 for t in self.match_thresholds):
            err("match thresholds must be positive")
        return self


def paper_scale(**overrides) -> PipelineConfig:
    """Full-scale configuration; slow, kept for completeness."""
    return replace(PipelineConfig(), **overrides).validate()


def desk_scale(**overrides) -> PipelineConfig:
    """Small configuration that runs end-to-end in seconds."""
    cfg = PipelineConfig(
        voxel_extents=(20, 30, 4),
        bev_extents=(40, 60),
        occ_extents=(40, 60, 8),
        temporal_frames=2,
        encoder_layers=2,
        channels=16,
        radar_channels=8,
        n_queries=64,
        top_k=32,
        cameras=2,
        image_extent=(136, 240),
        feature_extent=(17, 30),
    )
    return replace(cfg, **overrides).validate()


def load_config(path) -> PipelineConfig:
    """Load a JSON config; keys mirror the dataclass fields.

    Nested convenience keys are accepted: encoder.layers, attn.heads,
    attn.points, temporal.frames, seed.
    """
    with open(path) as fh:
        data = json.load(fh)
    flat = {}
    alias = {
        ("encoder", "layers"): "encoder_layers",
        ("attn", "heads"): "attn_heads",
        ("attn", "points"): "attn_points",
        ("temporal", "frames"): "temporal_frames",
    }
    for key, value in data.items():
        if isinstance(value, dict):
            for sub, v in value.items():
                name = alias.get((key, sub))
                if name is None:
                    raise ValueError(f"configuration error: unknown key {key}.{sub}")
                flat[name] = v
        else:
            flat[key] = value
    base = desk_scale() if flat.pop("preset", "desk") == "desk" else paper_scale()
    known = set(asdict(base).keys())
    for key, value in flat.items():
        if key not in known:
            raise ValueError(f"configuration error: unknown key {key}")
        if isinstance(value, list):
            flat[key] = tuple(value)
    return replace(base, **flat).validate()
