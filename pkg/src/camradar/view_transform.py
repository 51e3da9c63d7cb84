"""Camera/radar view transformation into the voxel query space.

Coarse voxel queries are seeded from two branches: radar BEV features
resized, channel-mixed and replicated along height; and image features
back-projected onto voxel centers with nearest-neighbour lookup, later
views overwriting earlier ones. An encoder then refines the queries with
cross-view deformable attention and local 3D convolutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor_ops as T
from .blocks import ConvBlock2D, ResidualStack3D, rms_norm_channels
from .geometry import CameraModel, RefGrid3D, project_to_image
from .rng import stream

__all__ = [
    "VoxelQueries",
    "DeformAttnParams",
    "radar_query_branch",
    "image_query_branch",
    "combine_queries",
    "deform_attn_2d",
    "deform_attn_3d",
    "cross_view_attention",
    "voxel_local_interaction",
    "voxel_encoder",
]


@dataclass
class VoxelQueries:
    """Per-voxel feature vectors, (C, H_V, W_V, Z_V), tied to their grid."""

    tensor: np.ndarray
    grid: RefGrid3D

    def __post_init__(self):
        self.tensor = np.asarray(self.tensor, dtype=np.float64)
        if self.tensor.shape[1:] != tuple(self.grid.extents):
            raise ValueError(
                f"query tensor {self.tensor.shape[1:]} does not match grid {self.grid.extents}")


@dataclass
class DeformAttnParams:
    """Seeded projections for multi-head deformable attention.

    ``ndim`` is 2 for BEV-plane sampling, 3 for volumes. Channels are
    split across heads; attention weights are soft-maxed per head over the
    sampling points so they sum to one. All projections are bias-free.
    """

    n_heads: int
    n_points: int
    ndim: int
    offset_w: np.ndarray  # (heads*points*ndim, C)
    weight_w: np.ndarray  # (heads*points, C)
    value_w: np.ndarray   # (C, C_value)
    out_w: np.ndarray     # (C, C)

    @staticmethod
    def seeded(seed: int, tag: str, channels: int, n_heads: int = 4,
               n_points: int = 4, ndim: int = 2, value_channels: int | None = None) -> "DeformAttnParams":
        if channels % n_heads:
            raise ValueError(f"channels {channels} must divide evenly into {n_heads} heads")
        cv = value_channels if value_channels is not None else channels
        rng = stream(seed, "deform_attn", tag)
        scale = 1.0 / np.sqrt(channels)
        return DeformAttnParams(
            n_heads, n_points, ndim,
            rng.normal(0.0, scale, size=(n_heads * n_points * ndim, channels)),
            rng.normal(0.0, scale, size=(n_heads * n_points, channels)),
            rng.normal(0.0, 1.0 / np.sqrt(cv), size=(channels, cv)),
            rng.normal(0.0, scale, size=(channels, channels)),
        )

    @property
    def channels(self) -> int:
        return self.out_w.shape[0]

    def sampling(self, queries: np.ndarray):
        """Offsets (N, heads, points, ndim) and weights (N, heads, points)."""
        q = np.atleast_2d(queries)
        n = q.shape[0]
        offsets = (q @ self.offset_w.T).reshape(n, self.n_heads, self.n_points, self.ndim)
        logits = (q @ self.weight_w.T).reshape(n, self.n_heads, self.n_points)
        weights = T.softmax(logits, axis=-1)
        return offsets, weights


def _deform_attn(queries, refs, value, params: DeformAttnParams, sampler):
    q = np.asarray(queries, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    refs = np.atleast_2d(np.asarray(refs, dtype=np.float64))
    n, c = q.shape[0], params.channels
    head_dim = c // params.n_heads

    proj_value = np.einsum("oc,c...->o...", params.value_w, value, optimize=True)
    offsets, weights = params.sampling(q)
    # sample every (query, head, point) location in one flat call
    locs = (refs[:, None, None, :] + offsets).reshape(-1, params.ndim)
    sampled = sampler(proj_value, locs)  # (C, N*heads*points)
    sampled = sampled.T.reshape(n, params.n_heads, params.n_points, c)
    # each head only reads its own channel slice
    idx = np.arange(c).reshape(params.n_heads, head_dim)
    per_head = np.take_along_axis(
        sampled, idx[None, :, None, :].repeat(params.n_points, axis=2), axis=3
    )  # (N, heads, points, head_dim) -- gather of head slices
    mixed = np.einsum("nhp,nhpd->nhd", weights, per_head, optimize=True).reshape(n, c)
    out = mixed @ params.out_w.T
    return out[0] if single else out


def deform_attn_2d(queries, refs, value_map: np.ndarray, params: DeformAttnParams):
    """Deformable attention into a (C_v, H, W) map.

    ``queries`` is (C,) or (N, C); ``refs`` the matching (x, y) grid-unit
    reference points. Sampling points are ref + predicted offsets; each
    head's weights sum to one.
    """
    if params.ndim != 2:
        raise ValueError("params were built for 3D sampling")
    return _deform_attn(queries, refs, value_map, params, T.bilinear_sample)


def deform_attn_3d(queries, refs, value_vol: np.ndarray, params: DeformAttnParams):
    """Deformable attention into a (C_v, H, W, Z) volume with 3D offsets."""
    if params.ndim != 3:
        raise ValueError("params were built for 2D sampling")
    return _deform_attn(queries, refs, value_vol, params, T.trilinear_sample)


@dataclass
class RadarBranchParams:
    cbr: ConvBlock2D

    @staticmethod
    def seeded(seed: int, c_radar: int, c_query: int) -> "RadarBranchParams":
        return RadarBranchParams(ConvBlock2D.seeded(seed, "query_radar_cbr", c_radar, c_query))


def radar_query_branch(f_radar: np.ndarray, grid: RefGrid3D, params: RadarBranchParams) -> VoxelQueries:
    """Radar BEV features -> voxel queries: resize, CBR, replicate along Z."""
    h, w, z = grid.extents
    resized = T.resize_bilinear(f_radar, h, w)
    mixed = params.cbr(resized)
    return VoxelQueries(np.repeat(mixed[..., None], z, axis=-1), grid)


def image_query_branch(features, cams, grid: RefGrid3D, channels: int) -> VoxelQueries:
    """Back-project image features onto voxel centers (nearest neighbour).

    Voxels seen by no camera stay zero; when several views hit the same
    voxel the last view in ``cams`` order wins.
    """
    if len(features) != len(cams):
        raise ValueError("need exactly one camera model per feature map")
    h, w, z = grid.extents
    out = np.zeros((channels, h, w, z))
    centers = grid.centers.reshape(-1, 3)
    for fmap, cam in zip(features, cams):
        u, v, _, valid = project_to_image(centers, cam)
        if not np.any(valid):
            continue
        hc, wc = cam.feature_extent
        # round-half-up, clamped so u just below the validity bound stays inside
        cu = np.floor(u[valid] + 0.5).astype(np.int64).clip(0, wc - 1)
        cv = np.floor(v[valid] + 0.5).astype(np.int64).clip(0, hc - 1)
        flat = out.reshape(channels, -1)
        flat[:, np.flatnonzero(valid)] = fmap[:, cv, cu]
    return VoxelQueries(out, grid)


def combine_queries(q_radar: VoxelQueries, q_image: VoxelQueries) -> VoxelQueries:
    """Element-wise sum of the radar and image query branches."""
    if q_radar.tensor.shape != q_image.tensor.shape:
        raise ValueError(
            f"branch shapes differ: {q_radar.tensor.shape} vs {q_image.tensor.shape}")
    return VoxelQueries(q_radar.tensor + q_image.tensor, q_radar.grid)


def cross_view_attention(queries: VoxelQueries, features, cams,
                         params: DeformAttnParams) -> VoxelQueries:
    """Average deformable attention over the camera views that see each voxel.

    Voxels hit by no view pass through unchanged.
    """
    c = queries.tensor.shape[0]
    centers = queries.grid.centers.reshape(-1, 3)
    q_flat = queries.tensor.reshape(c, -1).T  # (N, C)
    acc = np.zeros_like(q_flat)
    hits = np.zeros(len(q_flat), dtype=np.int64)
    for fmap, cam in zip(features, cams):
        u, v, _, valid = project_to_image(centers, cam)
        if not np.any(valid):
            continue
        idx = np.flatnonzero(valid)
        refs = np.stack([u[idx], v[idx]], axis=1)
        acc[idx] += deform_attn_2d(q_flat[idx], refs, fmap, params)
        hits[idx] += 1
    hit = hits > 0
    out = q_flat.copy()
    out[hit] = acc[hit] / hits[hit][:, None]
    return VoxelQueries(out.T.reshape(queries.tensor.shape), queries.grid)


def voxel_local_interaction(queries: VoxelQueries, block: ResidualStack3D) -> VoxelQueries:
    """Residual 3x3x3 convolution mixing neighbouring voxel features."""
    return VoxelQueries(block(queries.tensor), queries.grid)


@dataclass
class VoxelEncoderParams:
    attn: DeformAttnParams
    local: list  # one ResidualStack3D per layer

    @staticmethod
    def seeded(seed: int, channels: int, layers: int, n_heads: int = 4,
               n_points: int = 4) -> "VoxelEncoderParams":
        attn = DeformAttnParams.seeded(seed, "cross_view", channels, n_heads, n_points, ndim=2)
        local = [ResidualStack3D.seeded(seed, f"encoder_local.{i}", channels)
                 for i in range(layers)]
        return VoxelEncoderParams(attn, local)


def voxel_encoder(queries: VoxelQueries, features, cams,
                  params: VoxelEncoderParams) -> VoxelQueries:
    """L layers of {cross-view attention, local 3D conv}, residual + RMS norm."""
    if not params.local:
        raise ValueError("encoder needs at least one layer")
    q = queries
    for block in params.local:
        attended = cross_view_attention(q, features, cams, params.attn)
        mid = rms_norm_channels(q.tensor + attended.tensor)
        out = rms_norm_channels(block(mid))
        q = VoxelQueries(out, q.grid)
    return q
