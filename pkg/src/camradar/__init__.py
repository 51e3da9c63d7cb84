"""Camera / 4D-radar fusion for joint 3D detection and semantic occupancy.

Forward-only, deterministic, numpy-backed: radar sweep accumulation with
Doppler compensation, coarse voxel queries from both modalities, a
deformable-attention voxel encoder, dual-space temporal fusion, gated
cross-modal BEV/voxel exchange, multi-task heads with analytic-gradient
losses, and the detection/occupancy metric suite.
"""

from .config import PipelineConfig, desk_scale, load_config, paper_scale
from .pipeline import run_pipeline, scene_for_config

__all__ = [
    "PipelineConfig",
    "desk_scale",
    "paper_scale",
    "load_config",
    "run_pipeline",
    "scene_for_config",
]

__version__ = "0.1.0"
