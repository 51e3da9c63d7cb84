"""Temporal feature fusion across BEV and voxel spaces.

History features are aligned to the current frame by warping the current
reference points into each historical ego frame and sampling (trilinear
for volumes, bilinear for BEV), merged by residual conv blocks, and fused
with the current frame by deformable attention summed over the two value
sources. The rolling buffer stores pre-fusion features so errors never
recirculate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor_ops as T
from .blocks import MergeBlock2D, MergeBlock3D
from .geometry import Pose, RefGrid2D, RefGrid3D, warp_points
from .view_transform import DeformAttnParams, deform_attn_2d, deform_attn_3d

__all__ = [
    "TemporalBuffer",
    "TemporalParams",
    "align_history_voxel",
    "align_history_bev",
    "merge_history_voxel",
    "merge_history_bev",
    "fuse_temporal_voxel",
    "fuse_temporal_bev",
    "dte_step",
]


def align_history_voxel(hist: np.ndarray, grid: RefGrid3D,
                        pose_t: Pose, pose_hist: Pose) -> np.ndarray:
    """Resample a historical voxel volume onto the current frame's grid."""
    warped = warp_points(grid.centers.reshape(-1, 3), pose_t, pose_hist)
    coords = grid.metric_to_grid(warped)
    c = hist.shape[0]
    return T.trilinear_sample(hist, coords).reshape(c, *grid.extents)


def align_history_bev(hist: np.ndarray, grid: RefGrid2D,
                      pose_t: Pose, pose_hist: Pose) -> np.ndarray:
    """2D analogue of align_history_voxel; reference heights are zero."""
    warped = warp_points(grid.centers.reshape(-1, 3), pose_t, pose_hist)
    coords = grid.metric_to_grid(warped)
    c = hist.shape[0]
    return T.bilinear_sample(hist, coords).reshape(c, *grid.extents)


def merge_history_voxel(aligned, block: MergeBlock3D) -> np.ndarray:
    """Concatenate aligned history along channels, reduce back to C."""
    if not aligned:
        raise ValueError("merge needs at least one aligned history entry")
    return block(np.concatenate(aligned, axis=0))


def merge_history_bev(aligned, block: MergeBlock2D) -> np.ndarray:
    if not aligned:
        raise ValueError("merge needs at least one aligned history entry")
    return block(np.concatenate(aligned, axis=0))


def fuse_temporal_voxel(current: np.ndarray, hist: np.ndarray, grid: RefGrid3D,
                        params: DeformAttnParams) -> np.ndarray:
    """Sum of deformable attention over the current and history volumes.

    Queries are the current-frame features at each voxel; both branches
    share the same attention parameters.
    """
    c = current.shape[0]
    q = current.reshape(c, -1).T
    refs = grid.metric_to_grid(grid.centers.reshape(-1, 3))
    out = deform_attn_3d(q, refs, current, params) + deform_attn_3d(q, refs, hist, params)
    return out.T.reshape(current.shape)


def fuse_temporal_bev(current: np.ndarray, hist: np.ndarray, grid: RefGrid2D,
                      params: DeformAttnParams) -> np.ndarray:
    """2D analogue of fuse_temporal_voxel."""
    c = current.shape[0]
    q = current.reshape(c, -1).T
    refs = grid.metric_to_grid(grid.centers.reshape(-1, 3))
    out = deform_attn_2d(q, refs, current, params) + deform_attn_2d(q, refs, hist, params)
    return out.T.reshape(current.shape)


@dataclass
class TemporalParams:
    merge_vox: MergeBlock3D
    merge_bev: MergeBlock2D
    attn_vox: DeformAttnParams
    attn_bev: DeformAttnParams

    @staticmethod
    def seeded(seed: int, c_vox: int, c_bev: int, history: int,
               n_heads: int = 4, n_points: int = 4) -> "TemporalParams":
        return TemporalParams(
            MergeBlock3D.seeded(seed, "temporal_merge_vox", c_vox * history, c_vox),
            MergeBlock2D.seeded(seed, "temporal_merge_bev", c_bev * history, c_bev),
            DeformAttnParams.seeded(seed, "temporal_vox", c_vox, n_heads, n_points, ndim=3),
            DeformAttnParams.seeded(seed, "temporal_bev", c_bev, n_heads, n_points, ndim=2),
        )


@dataclass
class TemporalBuffer:
    """FIFO of the last ``capacity`` frames' pre-fusion features and poses."""

    capacity: int
    vox: list = field(default_factory=list)
    bev: list = field(default_factory=list)
    poses: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.poses)

    def push(self, vox: np.ndarray, bev: np.ndarray, pose: Pose) -> None:
        self.vox.append(vox)
        self.bev.append(bev)
        self.poses.append(pose)
        while len(self.poses) > self.capacity:
            self.vox.pop(0)
            self.bev.pop(0)
            self.poses.pop(0)

    def reset(self) -> None:
        """Scene boundary: drop all history."""
        self.vox.clear()
        self.bev.clear()
        self.poses.clear()


def dte_step(buffer: TemporalBuffer, current_vox: np.ndarray, current_bev: np.ndarray,
             pose: Pose, vox_grid: RefGrid3D, bev_grid: RefGrid2D,
             params: TemporalParams | None):
    """One temporal-encoder step; returns (fused_vox, fused_bev, buffer).

    An empty buffer (or capacity 0) passes the current features through
    unchanged. The buffer is updated with the pre-fusion current features,
    newest last.
    """
    if pose is None:
        raise ValueError("dte_step requires the current ego pose")
    history = len(buffer)
    if history == 0:
        fused_vox, fused_bev = current_vox, current_bev
    else:
        if params is None:
            raise ValueError("temporal params required when history is present")
        # newest history first, matching the merge blocks' channel layout
        aligned_vox = [align_history_voxel(h, vox_grid, pose, ph)
                       for h, ph in zip(reversed(buffer.vox), reversed(buffer.poses))]
        aligned_bev = [align_history_bev(h, bev_grid, pose, ph)
                       for h, ph in zip(reversed(buffer.bev), reversed(buffer.poses))]
        # during warm-up the oldest entry is repeated to fill the merge
        # block's fixed channel width
        while len(aligned_vox) < buffer.capacity:
            aligned_vox.append(aligned_vox[-1])
            aligned_bev.append(aligned_bev[-1])
        hist_vox = merge_history_voxel(aligned_vox, params.merge_vox)
        hist_bev = merge_history_bev(aligned_bev, params.merge_bev)
        fused_vox = fuse_temporal_voxel(current_vox, hist_vox, vox_grid, params.attn_vox)
        fused_bev = fuse_temporal_bev(current_bev, hist_bev, bev_grid, params.attn_bev)
    if buffer.capacity > 0:
        buffer.push(current_vox, current_bev, pose)
    return fused_vox, fused_bev, buffer
