"""Cross-modal exchange between BEV and voxel features.

Voxel features are upsampled to the full occupancy resolution, enriched
with height-replicated BEV features through a sigmoid-gated residual, and
vice versa with a height-mean squeeze. Two auxiliary heads emit binary
occupancy and foreground-segmentation probability masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor_ops as T
from .blocks import ConvBlock2D, ConvBlock3D
from .rng import stream

__all__ = [
    "FusionParams",
    "FusedFeatures",
    "upsample_voxel",
    "enhance_voxel",
    "enhance_bev",
    "aux_heads",
]


def _deconv_kernel(seed: int, tag: str, c_in: int, c_out: int, k: int = 2) -> np.ndarray:
    rng = stream(seed, "deconv3d", tag)
    return rng.normal(0.0, 1.0 / np.sqrt(c_in * k ** 3), size=(c_in, c_out, k, k, k))


@dataclass
class FusionParams:
    upsample_kernel: np.ndarray        # (C, C, 2, 2, 2), stride 2
    bev_to_vox: ConvBlock2D            # f2D in the voxel branch, C_bev -> C
    vox_mix: ConvBlock3D               # f3D on the concatenated volume, 2C -> C
    vox_gate: np.ndarray               # g3D kernel, C -> C
    vox_squeeze: ConvBlock2D           # CBR on the height-squeezed volume, C -> C
    bev_mix: ConvBlock2D               # f2D on the concatenated map, (C_bev + C) -> C
    bev_gate: np.ndarray               # g2D kernel, C -> C
    occ_mask_kernel: np.ndarray        # (1, C, 3, 3, 3)
    occ_mask_bias: float
    seg_mask_kernel: np.ndarray        # (1, C, 3, 3)
    seg_mask_bias: float

    @staticmethod
    def seeded(seed: int, c_vox: int, c_bev: int) -> "FusionParams":
        g3 = stream(seed, "fusion_gate3d").normal(0.0, 1.0 / np.sqrt(c_vox * 27),
                                                  size=(c_vox, c_vox, 3, 3, 3))
        g2 = stream(seed, "fusion_gate2d").normal(0.0, 1.0 / np.sqrt(c_vox * 9),
                                                  size=(c_vox, c_vox, 3, 3))
        occ_k = stream(seed, "aux_occ").normal(0.0, 1.0 / np.sqrt(c_vox * 27),
                                               size=(1, c_vox, 3, 3, 3))
        seg_k = stream(seed, "aux_seg").normal(0.0, 1.0 / np.sqrt(c_vox * 9),
                                               size=(1, c_vox, 3, 3))
        return FusionParams(
            _deconv_kernel(seed, "vox_up", c_vox, c_vox),
            ConvBlock2D.seeded(seed, "fusion_bev_to_vox", c_bev, c_vox),
            ConvBlock3D.seeded(seed, "fusion_vox_mix", 2 * c_vox, c_vox),
            g3,
            ConvBlock2D.seeded(seed, "fusion_vox_squeeze", c_vox, c_vox),
            ConvBlock2D.seeded(seed, "fusion_bev_mix", c_bev + c_vox, c_vox),
            g2,
            occ_k, 0.0,
            seg_k, 0.0,
        )


@dataclass
class FusedFeatures:
    """Final multi-task representations plus the auxiliary masks."""

    voxel: np.ndarray    # (C, H, W, Z)
    bev: np.ndarray      # (C, H, W)
    aux_occ: np.ndarray  # (H, W, Z) probabilities
    aux_seg: np.ndarray  # (H, W) probabilities


def upsample_voxel(low: np.ndarray, params: FusionParams) -> np.ndarray:
    """Transposed-conv upsampling, factor 2 along every spatial axis."""
    return T.conv_transpose3d(low, params.upsample_kernel, stride=2)


def enhance_voxel(f_vox: np.ndarray, f_bev: np.ndarray, params: FusionParams) -> np.ndarray:
    """Gated residual injection of BEV context into the voxel volume.

    temp = f3D(concat[F_vox, replicate_z(f2D(F_bev))]);
    fused = F_vox + sigmoid(g3D(temp)) * temp.
    """
    if f_vox.shape[1:3] != f_bev.shape[1:]:
        raise ValueError(
            f"voxel plane {f_vox.shape[1:3]} does not match BEV extent {f_bev.shape[1:]}")
    z = f_vox.shape[3]
    bev_ctx = params.bev_to_vox(f_bev)
    expanded = np.repeat(bev_ctx[..., None], z, axis=-1)
    temp = params.vox_mix(np.concatenate([f_vox, expanded], axis=0))
    gate = T.sigmoid(T.conv3d(temp, params.vox_gate, padding=1))
    return f_vox + gate * temp


def enhance_bev(f_bev: np.ndarray, f_vox: np.ndarray, params: FusionParams) -> np.ndarray:
    """Gated residual injection of height-squeezed voxel context into BEV.

    The squeeze is a mean over the height axis. The residual branch is the
    transformed voxel projection (not the raw BEV input), exactly as the
    fusion equations are written.
    """
    if f_vox.shape[1:3] != f_bev.shape[1:]:
        raise ValueError(
            f"voxel plane {f_vox.shape[1:3]} does not match BEV extent {f_bev.shape[1:]}")
    squeezed = f_vox.mean(axis=3)
    bev_prime = params.vox_squeeze(squeezed)
    temp = params.bev_mix(np.concatenate([f_bev, bev_prime], axis=0))
    gate = T.sigmoid(T.conv2d(temp, params.bev_gate, padding=1))
    return bev_prime + gate * temp


def aux_heads(fused_vox: np.ndarray, fused_bev: np.ndarray, params: FusionParams):
    """Binary occupancy mask (H, W, Z) and BEV foreground mask (H, W)."""
    occ_logit = T.conv3d(fused_vox, params.occ_mask_kernel, padding=1)[0] + params.occ_mask_bias
    seg_logit = T.conv2d(fused_bev, params.seg_mask_kernel, padding=1)[0] + params.seg_mask_bias
    return T.sigmoid(occ_logit), T.sigmoid(seg_logit)
