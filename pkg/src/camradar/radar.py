"""4D radar preprocessing: sweep accumulation with radial-velocity
compensation, and a fixed-feature pillar encoder producing BEV maps.

Accumulated points carry 7 attributes [x, y, z, v_x, v_y, power, snr] in
the current ego frame. v_rel is the measured relative radial velocity,
positive for receding targets; the compensation removes the ego-motion
component so static scatterers come out with zero velocity.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import tensor_ops as T
from .blocks import ConvBlock2D, ResidualStack2D
from .geometry import Pose
from .rng import stream

__all__ = [
    "RadarSweep",
    "AccumulatedCloud",
    "compensate_and_accumulate",
    "pillar_features",
    "pillarize",
    "PillarConfig",
    "bev_backbone",
    "BevBackboneParams",
    "sweep_to_csv",
    "sweep_points_from_csv",
]

POINT_DIM = 7  # x, y, z, v_x, v_y, power, snr

RAW_PILLAR_FEATURES = 7  # log count, mean z, mean v_x, mean v_y, max power, max snr, mean center offset


@dataclass
class RadarSweep:
    """One radar sweep: raw points plus the calibration to replay it.

    ``points`` is (N, 6) with columns x, y, z, power, snr, v_rel in the
    radar frame. ``ego_velocity`` is the ego velocity at sweep time,
    expressed in that sweep's ego frame.
    """

    points: np.ndarray
    radar_to_ego: Pose
    ego_velocity: np.ndarray
    sweep_to_current_ego: Pose
    timestamp: float = 0.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 6)
        self.ego_velocity = np.asarray(self.ego_velocity, dtype=np.float64).reshape(3)


@dataclass
class AccumulatedCloud:
    """Compensated multi-sweep cloud, (N, 7) in the current ego frame."""

    points: np.ndarray
    skipped_zero_range: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, POINT_DIM)


def compensate_and_accumulate(sweeps) -> AccumulatedCloud:
    """Accumulate sweeps into the current ego frame with compensated velocities.

    Per point: decompose the measured relative radial velocity against the
    ego velocity expressed in the radar frame, recover the ground radial
    speed, expand it into planar (v_x, v_y) components along the line of
    sight (the vertical component is discarded), and rotate those into the
    current ego frame. Positions go through radar-to-ego then
    sweep-to-current rigid transforms. Zero-range points are skipped and
    counted. Sweep order, then point order, fixes the output ordering.
    """
    chunks = []
    skipped = 0
    for sweep in sweeps:
        if sweep.radar_to_ego is None or sweep.sweep_to_current_ego is None:
            raise ValueError("sweep is missing calibration poses")
        pts = sweep.points
        if pts.size == 0:
            continue
        xyz = pts[:, 0:3]
        power = pts[:, 3]
        snr = pts[:, 4]
        v_rel = pts[:, 5]

        r = np.linalg.norm(xyz, axis=1)
        ok = r > 0.0
        skipped += int(np.count_nonzero(~ok))
        if not np.any(ok):
            continue
        xyz, power, snr, v_rel, r = xyz[ok], power[ok], snr[ok], v_rel[ok], r[ok]

        phi = np.arctan2(xyz[:, 1], xyz[:, 0])
        theta = np.arcsin(np.clip(xyz[:, 2] / r, -1.0, 1.0))

        r_re = sweep.radar_to_ego.rotation
        v_rad = r_re.T @ sweep.ego_velocity  # ego velocity in the radar frame

        cos_t, sin_t = np.cos(theta), np.sin(theta)
        cos_p, sin_p = np.cos(phi), np.sin(phi)
        v_r_com = (v_rad[0] * cos_p * cos_t
                   + v_rad[1] * sin_p * cos_t
                   + v_rad[2] * sin_t
                   + v_rel)
        v_comp = np.stack([v_r_com * cos_t * cos_p,
                           v_r_com * cos_t * sin_p,
                           np.zeros_like(v_r_com)], axis=1)

        rot_to_current = sweep.sweep_to_current_ego.rotation @ r_re
        v_ego = v_comp @ rot_to_current.T

        pos_ego = sweep.radar_to_ego.apply(xyz)
        pos_cur = sweep.sweep_to_current_ego.apply(pos_ego)

        chunks.append(np.concatenate([pos_cur, v_ego[:, 0:2],
                                      power[:, None], snr[:, None]], axis=1))

    if not chunks:
        return AccumulatedCloud(np.zeros((0, POINT_DIM)), skipped)
    return AccumulatedCloud(np.concatenate(chunks, axis=0), skipped)


@dataclass
class PillarConfig:
    """BEV pillar binning over the configured metric range."""

    x_bounds: tuple
    y_bounds: tuple
    z_bounds: tuple
    extents: tuple  # (H, W); rows span y, columns span x


def pillar_features(cloud: AccumulatedCloud, cfg: PillarConfig) -> np.ndarray:
    """Raw per-pillar statistics, (7, H, W), before channel projection.

    Features: [log1p(count), mean z, mean v_x, mean v_y, max power,
    max snr, mean planar offset from the pillar center]. Empty pillars are
    zero; out-of-range points are dropped.
    """
    h, w = cfg.extents
    raw = np.zeros((RAW_PILLAR_FEATURES, h, w))
    pts = cloud.points
    if pts.size:
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        in_range = ((x >= cfg.x_bounds[0]) & (x < cfg.x_bounds[1])
                    & (y >= cfg.y_bounds[0]) & (y < cfg.y_bounds[1])
                    & (z > cfg.z_bounds[0]) & (z < cfg.z_bounds[1]))
        pts = pts[in_range]
    if pts.size:
        cell_x = (cfg.x_bounds[1] - cfg.x_bounds[0]) / w
        cell_y = (cfg.y_bounds[1] - cfg.y_bounds[0]) / h
        col = np.floor((pts[:, 0] - cfg.x_bounds[0]) / cell_x).astype(np.int64).clip(0, w - 1)
        row = np.floor((pts[:, 1] - cfg.y_bounds[0]) / cell_y).astype(np.int64).clip(0, h - 1)
        flat = row * w + col

        count = np.bincount(flat, minlength=h * w).astype(np.float64)
        occupied = count > 0
        safe = np.where(occupied, count, 1.0)

        def mean_of(vals):
            return np.where(occupied, np.bincount(flat, weights=vals, minlength=h * w) / safe, 0.0)

        cx = cfg.x_bounds[0] + (col + 0.5) * cell_x
        cy = cfg.y_bounds[0] + (row + 0.5) * cell_y
        offset = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy)

        max_pow = np.full(h * w, -np.inf)
        np.maximum.at(max_pow, flat, pts[:, 5])
        max_snr = np.full(h * w, -np.inf)
        np.maximum.at(max_snr, flat, pts[:, 6])

        raw[0] = np.log1p(count).reshape(h, w)
        raw[1] = mean_of(pts[:, 2]).reshape(h, w)
        raw[2] = mean_of(pts[:, 3]).reshape(h, w)
        raw[3] = mean_of(pts[:, 4]).reshape(h, w)
        raw[4] = np.where(occupied, max_pow, 0.0).reshape(h, w)
        raw[5] = np.where(occupied, max_snr, 0.0).reshape(h, w)
        raw[6] = mean_of(offset).reshape(h, w)
    return raw


def pillarize(cloud: AccumulatedCloud, cfg: PillarConfig, channels: int, seed: int) -> np.ndarray:
    """Pillar statistics mixed to ``channels`` by a seeded bias-free map."""
    raw = pillar_features(cloud, cfg)
    proj = stream(seed, "pillar_projection").normal(
        0.0, 1.0 / np.sqrt(RAW_PILLAR_FEATURES), size=(channels, RAW_PILLAR_FEATURES))
    return np.einsum("of,fhw->ohw", proj, raw, optimize=True)


@dataclass
class BevBackboneParams:
    """Two residual conv stages standing in for the usual BEV backbone."""

    stage1: ResidualStack2D
    stage2: ResidualStack2D

    @staticmethod
    def seeded(seed: int, channels: int) -> "BevBackboneParams":
        return BevBackboneParams(
            ResidualStack2D.seeded(seed, "bev_backbone.1", channels),
            ResidualStack2D.seeded(seed, "bev_backbone.2", channels),
        )


def bev_backbone(pseudo_image: np.ndarray, params: BevBackboneParams) -> np.ndarray:
    """Shape-preserving refinement of the radar pseudo image."""
    return params.stage2(params.stage1(pseudo_image))


def sweep_to_csv(points: np.ndarray) -> str:
    """Serialize raw sweep points to CSV with header x,y,z,power,snr,v_rel."""
    buf = io.StringIO()
    buf.write("x,y,z,power,snr,v_rel\n")
    for row in np.asarray(points, dtype=np.float64).reshape(-1, 6):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def sweep_points_from_csv(text: str) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0].replace(" ", "") != "x,y,z,power,snr,v_rel":
        raise ValueError("radar CSV must start with header x,y,z,power,snr,v_rel")
    if len(lines) == 1:
        return np.zeros((0, 6))
    return np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
