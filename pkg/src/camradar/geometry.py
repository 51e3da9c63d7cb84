"""Rigid transforms, pinhole cameras and reference-point grids.

Frame conventions used everywhere in the package:

* ego frame: x forward, y left, z up (meters);
* camera frame: x right, y down, z forward (depth);
* BEV / voxel grids: the first spatial axis (H, "rows") spans the metric
  y range, the second (W, "columns") spans the metric x range, the third
  (Z) spans height. With the reference ranges x in (-60, 60) m over
  W cells and y in (-40, 40) m over H cells this gives square cells
  (e.g. 0.5 m at 160x240, 1 m at 80x120).

Grid-unit sampling coordinates follow tensor_ops: a point's x grid unit
indexes the W axis, y the H axis, so cell centers land on the integer
lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Pose",
    "CameraModel",
    "RefGrid3D",
    "RefGrid2D",
    "project_to_image",
    "warp_points",
    "make_ref_grid_3d",
    "make_ref_grid_2d",
]

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class Pose:
    """SE(3) transform: p_out = rotation @ p_in + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        if not np.isclose(np.linalg.det(r), 1.0, atol=1e-6):
            raise ValueError("rotation must have determinant +1")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_yaw(yaw: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        c, s = np.cos(yaw), np.sin(yaw)
        r = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return Pose(r, np.asarray(translation, dtype=np.float64))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (N, 3) or (3,) points."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: "Pose") -> "Pose":
        """self after other: (self ∘ other)(p) = self(other(p))."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def invert(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: 3x4 intrinsics (pixel units) plus ego-to-camera pose.

    ``image_extent`` is (H_I, W_I) in pixels, ``feature_extent`` (H_C, W_C)
    in feature cells; the backbone stride per axis must divide the image
    extent exactly.
    """

    intrinsics: np.ndarray
    ego_to_cam: Pose
    image_extent: tuple
    feature_extent: tuple

    def __post_init__(self):
        k = np.asarray(self.intrinsics, dtype=np.float64).reshape(3, 4)
        object.__setattr__(self, "intrinsics", k)
        object.__setattr__(self, "image_extent", tuple(int(v) for v in self.image_extent))
        object.__setattr__(self, "feature_extent", tuple(int(v) for v in self.feature_extent))
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise ValueError("focal lengths must be positive")
        hi, wi = self.image_extent
        hc, wc = self.feature_extent
        if hi % hc or wi % wc:
            raise ValueError("feature extent must divide image extent by an integer stride")

    @property
    def stride(self) -> tuple:
        return (self.image_extent[0] // self.feature_extent[0],
                self.image_extent[1] // self.feature_extent[1])

    @staticmethod
    def simple(fx, fy, cx, cy, ego_to_cam: Pose, image_extent, feature_extent) -> "CameraModel":
        k = np.array([[fx, 0.0, cx, 0.0], [0.0, fy, cy, 0.0], [0.0, 0.0, 1.0, 0.0]])
        return CameraModel(k, ego_to_cam, image_extent, feature_extent)


def project_to_image(points: np.ndarray, cam: CameraModel):
    """Project ego-frame points into a camera's feature grid.

    Returns (u, v, depth, valid): u/v in feature-grid units, depth in
    meters along the optical axis. valid iff 0 <= u < W_C, 0 <= v < H_C
    and depth > 0. Points are flagged, never dropped.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    cam_pts = cam.ego_to_cam.apply(pts)
    homo = np.concatenate([cam_pts, np.ones((len(cam_pts), 1))], axis=1)
    proj = homo @ cam.intrinsics.T
    depth = proj[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u_pix = np.where(depth != 0.0, proj[:, 0] / depth, np.inf)
        v_pix = np.where(depth != 0.0, proj[:, 1] / depth, np.inf)
    sy, sx = cam.stride
    u = u_pix / sx
    v = v_pix / sy
    hc, wc = cam.feature_extent
    valid = (depth > 0) & (u >= 0) & (u < wc) & (v >= 0) & (v < hc)
    return u, v, depth, valid


def warp_points(points: np.ndarray, pose_t: Pose, pose_hist: Pose) -> np.ndarray:
    """Map points given in the ego frame at time t into a historical ego frame.

    Both poses are ego-to-world; the result is pose_hist^-1 ∘ pose_t
    applied to the points.
    """
    return pose_hist.invert().compose(pose_t).apply(points)


@dataclass(frozen=True)
class RefGrid3D:
    """Voxel grid over (y rows, x columns, z) with cell-center reference points."""

    extents: tuple  # (H, W, Z)
    x_bounds: tuple
    y_bounds: tuple
    z_bounds: tuple
    centers: np.ndarray = field(init=False, repr=False)  # (H, W, Z, 3) metric xyz

    def __post_init__(self):
        h, w, z = self.extents
        cx, cy, cz = self.cell_size
        xs = self.x_bounds[0] + (np.arange(w) + 0.5) * cx
        ys = self.y_bounds[0] + (np.arange(h) + 0.5) * cy
        zs = self.z_bounds[0] + (np.arange(z) + 0.5) * cz
        object.__setattr__(self, "centers", _centers_3d(xs, ys, zs))

    @property
    def cell_size(self) -> tuple:
        h, w, z = self.extents
        return ((self.x_bounds[1] - self.x_bounds[0]) / w,
                (self.y_bounds[1] - self.y_bounds[0]) / h,
                (self.z_bounds[1] - self.z_bounds[0]) / z)

    def metric_to_grid(self, points: np.ndarray) -> np.ndarray:
        """Metric (x, y, z) -> sampling coords (x_col, y_row, z_layer)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        cx, cy, cz = self.cell_size
        gx = (pts[:, 0] - self.x_bounds[0]) / cx - 0.5
        gy = (pts[:, 1] - self.y_bounds[0]) / cy - 0.5
        gz = (pts[:, 2] - self.z_bounds[0]) / cz - 0.5
        return np.stack([gx, gy, gz], axis=1)


def _centers_3d(xs, ys, zs) -> np.ndarray:
    h, w, z = len(ys), len(xs), len(zs)
    out = np.empty((h, w, z, 3))
    out[..., 0] = xs[None, :, None]
    out[..., 1] = ys[:, None, None]
    out[..., 2] = zs[None, None, :]
    return out


@dataclass(frozen=True)
class RefGrid2D:
    """BEV grid over (y rows, x columns); reference heights are exactly zero."""

    extents: tuple  # (H, W)
    x_bounds: tuple
    y_bounds: tuple
    centers: np.ndarray = field(init=False, repr=False)  # (H, W, 3), z = 0

    def __post_init__(self):
        h, w = self.extents
        cx, cy = self.cell_size
        xs = self.x_bounds[0] + (np.arange(w) + 0.5) * cx
        ys = self.y_bounds[0] + (np.arange(h) + 0.5) * cy
        out = np.zeros((h, w, 3))
        out[..., 0] = xs[None, :]
        out[..., 1] = ys[:, None]
        object.__setattr__(self, "centers", out)

    @property
    def cell_size(self) -> tuple:
        h, w = self.extents
        return ((self.x_bounds[1] - self.x_bounds[0]) / w,
                (self.y_bounds[1] - self.y_bounds[0]) / h)

    def metric_to_grid(self, points: np.ndarray) -> np.ndarray:
        """Metric (x, y[, z]) -> sampling coords (x_col, y_row)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        cx, cy = self.cell_size
        gx = (pts[:, 0] - self.x_bounds[0]) / cx - 0.5
        gy = (pts[:, 1] - self.y_bounds[0]) / cy - 0.5
        return np.stack([gx, gy], axis=1)


def _check_bounds(bounds):
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo < hi:
        raise ValueError(f"bounds must be ordered min < max, got {bounds}")
    return (lo, hi)


def make_ref_grid_3d(x_bounds, y_bounds, z_bounds, extents) -> RefGrid3D:
    """Build a (H, W, Z) voxel grid of cell-center reference points."""
    extents = tuple(int(e) for e in extents)
    if len(extents) != 3 or any(e < 1 for e in extents):
        raise ValueError(f"extents must be three positive ints, got {extents}")
    return RefGrid3D(extents, _check_bounds(x_bounds), _check_bounds(y_bounds),
                     _check_bounds(z_bounds))


def make_ref_grid_2d(x_bounds, y_bounds, extents) -> RefGrid2D:
    """Build a (H, W) BEV grid of cell-center reference points at z = 0."""
    extents = tuple(int(e) for e in extents)
    if len(extents) != 2 or any(e < 1 for e in extents):
        raise ValueError(f"extents must be two positive ints, got {extents}")
    return RefGrid2D(extents, _check_bounds(x_bounds), _check_bounds(y_bounds))
