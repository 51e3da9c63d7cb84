"""Deterministic synthetic worlds with physically consistent sensors.

A scene holds a planar ego trajectory, constant-velocity boxes, a static
ground/wall layout, and camera/radar rigs. Radar sweeps emit the relative
radial velocity a Doppler sensor would measure, so running them through
the compensation pipeline recovers zero velocity for static scatterers
exactly. Camera "features" are procedural class/instance encodings of the
frontmost visible object per feature cell.

Ego motion modes:

* ``free``: random planar trajectory (speed and yaw-rate profiles);
* ``radial``: ego translates along +x without yaw and dynamic objects sit
  on the x axis at radar height moving along it, the one geometry where a
  single radial measurement determines the full planar ground velocity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor_ops as T
from .geometry import CameraModel, Pose, make_ref_grid_2d, make_ref_grid_3d, project_to_image
from .heads_losses import BoxSet, OccGrid
from .radar import RadarSweep
from .rng import stream

__all__ = [
    "SEMANTIC_CLASSES",
    "DETECTION_CLASSES",
    "FREE_LABEL",
    "SceneConfig",
    "SceneObject",
    "Scene",
    "generate_scene",
    "simulate_radar_sweep",
    "render_camera_features",
    "rasterize_gt",
    "save_scene",
    "load_scene",
]

SEMANTIC_CLASSES = (
    "car", "pedestrian", "rider", "large_vehicle", "cycle", "road_obstacle",
    "traffic_fence", "driveable_surface", "sidewalk", "vegetation", "manmade",
)
DETECTION_CLASSES = ("car", "pedestrian", "rider", "large_vehicle")
FREE_LABEL = 0  # occupancy label 0; semantic label for class i is i + 1

_BASE_SIZES = {
    0: (4.5, 1.9, 1.6),
    1: (0.6, 0.6, 1.7),
    2: (1.8, 0.7, 1.6),
    3: (10.0, 2.8, 3.4),
}
_MAX_SPEED = {0: 10.0, 1: 1.5, 2: 5.0, 3: 8.0}

_GROUND_LABEL = SEMANTIC_CLASSES.index("driveable_surface") + 1
_WALL_LABEL = SEMANTIC_CLASSES.index("manmade") + 1
_GROUND_DEPTH = 0.4  # slab from z = -depth to 0
_WALL_HEIGHT = 2.0
_WALL_THICKNESS = 0.5
_RADAR_HEIGHT = 0.8
_CAMERA_HEIGHT = 1.6


@dataclass
class SceneConfig:
    n_steps: int = 4
    dt: float = 0.5
    n_cars: int = 2
    n_pedestrians: int = 1
    n_riders: int = 1
    n_large_vehicles: int = 1
    n_cameras: int = 6
    n_radars: int = 6
    image_extent: tuple = (544, 960)
    feature_extent: tuple = (34, 60)
    x_bounds: tuple = (-60.0, 60.0)
    y_bounds: tuple = (-40.0, 40.0)
    z_bounds: tuple = (-3.0, 5.0)
    ego_mode: str = "free"  # free | radial | static_ego
    with_walls: bool = True


@dataclass
class SceneObject:
    class_id: int            # detection class, 0..3
    size: np.ndarray         # (l, w, h) meters
    center0: np.ndarray      # world center at t = 0
    yaw: float               # world yaw, constant
    velocity: np.ndarray     # (v_x, v_y) world, constant

    def center_at(self, t: float) -> np.ndarray:
        c = np.array(self.center0, dtype=np.float64)
        c[0] += self.velocity[0] * t
        c[1] += self.velocity[1] * t
        return c

    @property
    def occ_label(self) -> int:
        return self.class_id + 1


@dataclass
class Scene:
    seed: int
    config: SceneConfig
    ego_poses: list            # Pose per step, ego -> world
    ego_velocities: np.ndarray  # (n_steps, 3) world frame
    objects: list
    cameras: list              # CameraModel, mounting fixed on the ego
    radar_poses: list          # Pose per radar, radar -> ego

    def time_of(self, step: int) -> float:
        return step * self.config.dt


def _camera_rig(cfg: SceneConfig) -> list:
    cams = []
    hi, wi = cfg.image_extent
    fx = fy = 0.8 * wi
    cx, cy = wi / 2.0, hi / 2.0
    for i in range(cfg.n_cameras):
        yaw = 2.0 * np.pi * i / max(cfg.n_cameras, 1)
        fwd = np.array([np.cos(yaw), np.sin(yaw), 0.0])
        right = np.array([np.sin(yaw), -np.cos(yaw), 0.0])
        down = np.array([0.0, 0.0, -1.0])
        r = np.stack([right, down, fwd])  # rows: camera axes in ego coords
        center = np.array([0.3 * np.cos(yaw), 0.3 * np.sin(yaw), _CAMERA_HEIGHT])
        cams.append(CameraModel.simple(
            fx, fy, cx, cy, Pose(r, -r @ center), cfg.image_extent, cfg.feature_extent))
    return cams


def _radar_rig(cfg: SceneConfig) -> list:
    poses = []
    if cfg.ego_mode == "radial":
        # mounts on the x axis only, so dynamic targets stay radial
        offsets = [0.5, -0.5, 1.0, -1.0, 1.5, -1.5]
        for i in range(cfg.n_radars):
            poses.append(Pose(np.eye(3), np.array([offsets[i % len(offsets)], 0.0, _RADAR_HEIGHT])))
        return poses
    for i in range(cfg.n_radars):
        yaw = 2.0 * np.pi * i / max(cfg.n_radars, 1)
        poses.append(Pose.from_yaw(yaw, (1.0 * np.cos(yaw), 1.0 * np.sin(yaw), _RADAR_HEIGHT)))
    return poses


def generate_scene(seed: int, config: SceneConfig | None = None) -> Scene:
    """Seeded scene: same (seed, config) always builds the same world."""
    cfg = config or SceneConfig()
    rng = stream(seed, "scene")

    n = cfg.n_steps
    yaws = np.zeros(n)
    positions = np.zeros((n, 3))
    velocities = np.zeros((n, 3))
    if cfg.ego_mode == "radial":
        speeds = rng.uniform(0.0, 12.0, size=n)
        for t in range(1, n):
            positions[t] = positions[t - 1] + np.array([speeds[t - 1], 0.0, 0.0]) * cfg.dt
        velocities[:, 0] = speeds
    elif cfg.ego_mode == "static_ego":
        pass
    else:
        speeds = rng.uniform(0.0, 12.0, size=n)
        yaw_rates = rng.uniform(-0.4, 0.4, size=n)
        for t in range(1, n):
            yaws[t] = yaws[t - 1] + yaw_rates[t - 1] * cfg.dt
            fwd = np.array([np.cos(yaws[t - 1]), np.sin(yaws[t - 1]), 0.0])
            positions[t] = positions[t - 1] + fwd * speeds[t - 1] * cfg.dt
        for t in range(n):
            velocities[t] = np.array([np.cos(yaws[t]), np.sin(yaws[t]), 0.0]) * speeds[t]
    poses = [Pose.from_yaw(yaws[t], positions[t]) for t in range(n)]

    objects = []
    counts = (cfg.n_cars, cfg.n_pedestrians, cfg.n_riders, cfg.n_large_vehicles)
    for class_id, count in enumerate(counts):
        for _ in range(count):
            size = np.array(_BASE_SIZES[class_id]) * rng.uniform(0.9, 1.1, size=3)
            if cfg.ego_mode == "radial":
                cx = rng.uniform(8.0, 45.0) * rng.choice([-1.0, 1.0])
                center = np.array([cx, 0.0, _RADAR_HEIGHT])
                speed = rng.uniform(-_MAX_SPEED[class_id], _MAX_SPEED[class_id])
                vel = np.array([speed, 0.0])
                yaw = 0.0
            else:
                center = np.array([
                    rng.uniform(cfg.x_bounds[0] * 0.7, cfg.x_bounds[1] * 0.7),
                    rng.uniform(cfg.y_bounds[0] * 0.7, cfg.y_bounds[1] * 0.7),
                    size[2] / 2.0,
                ])
                yaw = rng.uniform(-np.pi, np.pi)
                speed = rng.uniform(0.0, _MAX_SPEED[class_id])
                vel = speed * np.array([np.cos(yaw), np.sin(yaw)])
            objects.append(SceneObject(class_id, size, center, yaw, vel))

    return Scene(seed, cfg, poses, velocities, objects, _camera_rig(cfg), _radar_rig(cfg))


def _box_surface_points(obj: SceneObject, t: float, per_edge: int = 4) -> np.ndarray:
    """Deterministic grid on the four side faces and the top face (world)."""
    l, w, h = obj.size
    c = obj.center_at(t)
    cy, sy = np.cos(obj.yaw), np.sin(obj.yaw)
    lin = np.linspace(-0.5, 0.5, per_edge)
    pts = []
    for a in lin:
        for b in lin:
            pts.append((0.5 * l, a * w, b * h))     # +x face
            pts.append((-0.5 * l, a * w, b * h))    # -x face
            pts.append((a * l, 0.5 * w, b * h))     # +y face
            pts.append((a * l, -0.5 * w, b * h))    # -y face
            pts.append((a * l, b * w, 0.5 * h))     # top
    pts = np.asarray(pts)
    world = np.empty_like(pts)
    world[:, 0] = c[0] + cy * pts[:, 0] - sy * pts[:, 1]
    world[:, 1] = c[1] + sy * pts[:, 0] + cy * pts[:, 1]
    world[:, 2] = c[2] + pts[:, 2]
    return world


def _radial_sample_points(obj: SceneObject, t: float) -> np.ndarray:
    """Points on the object's motion axis at the box ends (world frame)."""
    c = obj.center_at(t)
    l = obj.size[0]
    return np.array([[c[0] + 0.5 * l, c[1], c[2]], [c[0] - 0.5 * l, c[1], c[2]]])


def _ground_points(radar_world: np.ndarray) -> np.ndarray:
    ranges = np.arange(6.0, 31.0, 6.0)
    azimuths = np.linspace(0.0, 2.0 * np.pi, 12, endpoint=False)
    g = np.stack(np.meshgrid(ranges, azimuths), axis=-1).reshape(-1, 2)
    pts = np.stack([radar_world[0] + g[:, 0] * np.cos(g[:, 1]),
                    radar_world[1] + g[:, 0] * np.sin(g[:, 1]),
                    np.zeros(len(g))], axis=1)
    return pts


def simulate_radar_sweep(scene: Scene, step: int, radar_idx: int,
                         points_per_object: int = 4, current_step: int | None = None,
                         jitter: float = 0.0, include_ground: bool = True) -> RadarSweep:
    """Simulate one radar sweep at ``step`` calibrated to ``current_step``.

    Emits v_rel = (point ground velocity - ego velocity) projected on the
    radar-to-point line of sight, positive for receding targets; the
    radar's own velocity is taken as the ego velocity (no lever-arm term),
    mirroring what the compensation assumes. ``jitter`` adds Gaussian
    position noise in meters (0 keeps the sweep exact).
    """
    cfg = scene.config
    cur = step if current_step is None else current_step
    ego_pose = scene.ego_poses[step]
    radar_pose = scene.radar_poses[radar_idx]
    ego_v_world = scene.ego_velocities[step]
    radar_world = ego_pose.apply(radar_pose.translation)

    t = scene.time_of(step)
    world_pts = []
    world_vels = []
    for obj in scene.objects:
        if cfg.ego_mode == "radial":
            pts = _radial_sample_points(obj, t)
        else:
            per_edge = max(2, int(round(np.sqrt(points_per_object))))
            pts = _box_surface_points(obj, t, per_edge)[: max(points_per_object, 1)]
        world_pts.append(pts)
        world_vels.append(np.tile([obj.velocity[0], obj.velocity[1], 0.0], (len(pts), 1)))
    if include_ground:
        gp = _ground_points(radar_world)
        world_pts.append(gp)
        world_vels.append(np.zeros((len(gp), 3)))
    if world_pts:
        world_pts = np.concatenate(world_pts, axis=0)
        world_vels = np.concatenate(world_vels, axis=0)
    else:
        world_pts = np.zeros((0, 3))
        world_vels = np.zeros((0, 3))

    if jitter > 0 and len(world_pts):
        noise = stream(scene.seed, "radar_jitter", f"{step}.{radar_idx}")
        world_pts = world_pts + noise.normal(0.0, jitter, size=world_pts.shape)

    los = world_pts - radar_world
    rng_norm = np.linalg.norm(los, axis=1, keepdims=True)
    unit = np.divide(los, rng_norm, out=np.zeros_like(los), where=rng_norm > 0)
    v_rel = np.einsum("nd,nd->n", world_vels - ego_v_world, unit)

    ego_pts = ego_pose.invert().apply(world_pts)
    radar_pts = radar_pose.invert().apply(ego_pts)

    r = rng_norm[:, 0]
    power = 30.0 - 0.2 * r
    snr = 20.0 * np.exp(-r / 100.0)

    raw = np.concatenate([radar_pts, power[:, None], snr[:, None], v_rel[:, None]], axis=1)
    sweep_to_current = scene.ego_poses[cur].invert().compose(ego_pose)
    ego_v_sweep_frame = ego_pose.rotation.T @ ego_v_world
    return RadarSweep(raw, radar_pose, ego_v_sweep_frame, sweep_to_current,
                      timestamp=t)


def _object_encoding(seed: int, idx: int, class_id: int, channels: int) -> np.ndarray:
    enc = stream(seed, "obj_enc", str(idx)).uniform(0.2, 1.0, size=channels)
    enc[class_id % channels] += 1.0
    return enc


def render_camera_features(scene: Scene, step: int, cam_idx: int, channels: int) -> np.ndarray:
    """Procedural (C, H_C, W_C) features: frontmost object encoding per cell.

    Object surfaces are sampled and projected with a depth buffer
    (painter's algorithm by depth); cells seeing no object carry a
    deterministic background encoding.
    """
    cam = scene.cameras[cam_idx]
    hc, wc = cam.feature_extent
    bg = stream(scene.seed, "bg_enc").uniform(0.0, 0.1, size=channels)
    out = np.tile(bg[:, None, None], (1, hc, wc))
    depth_buf = np.full((hc, wc), np.inf)

    t = scene.time_of(step)
    ego_inv = scene.ego_poses[step].invert()
    for idx, obj in enumerate(scene.objects):
        world = _box_surface_points(obj, t, per_edge=10)
        ego_pts = ego_inv.apply(world)
        u, v, depth, valid = project_to_image(ego_pts, cam)
        if not np.any(valid):
            continue
        enc = _object_encoding(scene.seed, idx, obj.class_id, channels)
        cu = np.floor(u[valid] + 0.5).astype(np.int64).clip(0, wc - 1)
        cv = np.floor(v[valid] + 0.5).astype(np.int64).clip(0, hc - 1)
        for x, y, d in zip(cu, cv, depth[valid]):
            if d < depth_buf[y, x]:
                depth_buf[y, x] = d
                out[:, y, x] = enc
    return out


def _points_in_box(points: np.ndarray, center: np.ndarray, size, yaw: float,
                   planar: bool = False) -> np.ndarray:
    d = points - center
    cy, sy = np.cos(yaw), np.sin(yaw)
    local_x = cy * d[..., 0] + sy * d[..., 1]
    local_y = -sy * d[..., 0] + cy * d[..., 1]
    inside = (np.abs(local_x) <= size[0] / 2.0) & (np.abs(local_y) <= size[1] / 2.0)
    if not planar:
        inside &= np.abs(d[..., 2]) <= size[2] / 2.0
    return inside


def rasterize_gt(scene: Scene, step: int, occ_extents, bev_extents):
    """Ground truth at ``step``: (BoxSet, OccGrid, BEV foreground mask).

    Boxes are expressed in the current ego frame. Occupancy combines the
    static ground slab and walls with the object interiors; the BEV mask
    is the union of box footprints.
    """
    cfg = scene.config
    t = scene.time_of(step)
    ego_pose = scene.ego_poses[step]
    ego_inv = ego_pose.invert()
    ego_yaw = float(np.arctan2(ego_pose.rotation[1, 0], ego_pose.rotation[0, 0]))

    params = []
    classes = []
    for obj in scene.objects:
        center_ego = ego_inv.apply(obj.center_at(t))
        yaw_ego = obj.yaw - ego_yaw
        vel_ego = ego_pose.rotation.T @ np.array([obj.velocity[0], obj.velocity[1], 0.0])
        params.append([obj.size[0], obj.size[1], obj.size[2],
                       center_ego[0], center_ego[1], center_ego[2],
                       np.cos(yaw_ego), np.sin(yaw_ego), vel_ego[0], vel_ego[1]])
        classes.append(obj.class_id)
    boxes = BoxSet(np.asarray(params, dtype=np.float64).reshape(-1, 10),
                   np.asarray(classes, dtype=np.int64),
                   np.ones(len(params)))

    oh, ow, oz = occ_extents
    grid3 = make_ref_grid_3d(cfg.x_bounds, cfg.y_bounds, cfg.z_bounds, occ_extents)
    centers_ego = grid3.centers.reshape(-1, 3)
    centers_world = ego_pose.apply(centers_ego)

    labels = np.zeros(len(centers_world), dtype=np.int64)
    ground = (centers_world[:, 2] <= 0.0) & (centers_world[:, 2] >= -_GROUND_DEPTH)
    labels[ground] = _GROUND_LABEL
    if cfg.with_walls:
        near_top = np.abs(centers_world[:, 1] - (cfg.y_bounds[1] - 2.0)) <= _WALL_THICKNESS
        near_bot = np.abs(centers_world[:, 1] - (cfg.y_bounds[0] + 2.0)) <= _WALL_THICKNESS
        wall = (near_top | near_bot) & (centers_world[:, 2] > 0) & (centers_world[:, 2] <= _WALL_HEIGHT)
        labels[wall] = _WALL_LABEL
    for obj in scene.objects:
        inside = _points_in_box(centers_world, obj.center_at(t), obj.size, obj.yaw)
        labels[inside] = obj.occ_label
    occ = OccGrid(labels.reshape(oh, ow, oz), cfg.x_bounds, cfg.y_bounds, cfg.z_bounds)

    grid2 = make_ref_grid_2d(cfg.x_bounds, cfg.y_bounds, bev_extents)
    bev_centers = ego_pose.apply(grid2.centers.reshape(-1, 3))
    mask = np.zeros(len(bev_centers), dtype=bool)
    for obj in scene.objects:
        c = obj.center_at(t)
        mask |= _points_in_box(bev_centers, c, obj.size, obj.yaw, planar=True)
    return boxes, occ, mask.reshape(bev_extents).astype(np.float64)


# ---------------------------------------------------------------------------
# scene directory serialization
# ---------------------------------------------------------------------------

def save_scene(scene: Scene, directory, occ_extents=(40, 60, 8)) -> None:
    """Write poses.csv, objects.csv, calib.txt, meta.json, radar CSVs and
    per-frame occupancy dumps under ``directory``."""
    from .radar import sweep_to_csv

    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    cfg = scene.config

    meta = {
        "seed": scene.seed,
        "config": {
            "n_steps": cfg.n_steps, "dt": cfg.dt,
            "n_cars": cfg.n_cars, "n_pedestrians": cfg.n_pedestrians,
            "n_riders": cfg.n_riders, "n_large_vehicles": cfg.n_large_vehicles,
            "n_cameras": cfg.n_cameras, "n_radars": cfg.n_radars,
            "image_extent": list(cfg.image_extent),
            "feature_extent": list(cfg.feature_extent),
            "x_bounds": list(cfg.x_bounds), "y_bounds": list(cfg.y_bounds),
            "z_bounds": list(cfg.z_bounds),
            "ego_mode": cfg.ego_mode, "with_walls": cfg.with_walls,
        },
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2))

    with open(root / "poses.csv", "w") as fh:
        fh.write("step," + ",".join(f"r{i}{j}" for i in range(3) for j in range(3))
                 + ",tx,ty,tz,vx,vy,vz\n")
        for s, pose in enumerate(scene.ego_poses):
            vals = list(pose.rotation.ravel()) + list(pose.translation) + list(scene.ego_velocities[s])
            fh.write(f"{s}," + ",".join(repr(float(v)) for v in vals) + "\n")

    with open(root / "objects.csv", "w") as fh:
        fh.write("class_id,l,w,h,x0,y0,z0,yaw,vx,vy\n")
        for obj in scene.objects:
            vals = [obj.size[0], obj.size[1], obj.size[2], obj.center0[0],
                    obj.center0[1], obj.center0[2], obj.yaw, obj.velocity[0], obj.velocity[1]]
            fh.write(f"{obj.class_id}," + ",".join(repr(float(v)) for v in vals) + "\n")

    with open(root / "calib.txt", "w") as fh:
        for cam in scene.cameras:
            fh.write("camera " + " ".join(repr(float(v)) for v in cam.intrinsics.ravel()))
            fh.write(" " + " ".join(repr(float(v)) for v in cam.ego_to_cam.rotation.ravel()))
            fh.write(" " + " ".join(repr(float(v)) for v in cam.ego_to_cam.translation))
            fh.write(f" {cam.image_extent[0]} {cam.image_extent[1]}"
                     f" {cam.feature_extent[0]} {cam.feature_extent[1]}\n")
        for pose in scene.radar_poses:
            fh.write("radar " + " ".join(repr(float(v)) for v in pose.rotation.ravel()))
            fh.write(" " + " ".join(repr(float(v)) for v in pose.translation) + "\n")

    sweep_dir = root / "sweeps"
    sweep_dir.mkdir(exist_ok=True)
    for s in range(cfg.n_steps):
        for ridx in range(cfg.n_radars):
            sweep = simulate_radar_sweep(scene, s, ridx)
            (sweep_dir / f"step{s:03d}_radar{ridx}.csv").write_text(sweep_to_csv(sweep.points))

    occ_dir = root / "occ"
    occ_dir.mkdir(exist_ok=True)
    for s in range(cfg.n_steps):
        _, occ, _ = rasterize_gt(scene, s, occ_extents, occ_extents[:2])
        (occ_dir / f"step{s:03d}.dtns").write_bytes(T.dump_binary(occ.labels.astype(np.float64)))


def load_scene(directory) -> Scene:
    """Rebuild a scene from a directory written by save_scene."""
    root = Path(directory)
    meta_path = root / "meta.json"
    if not meta_path.exists():
        raise ValueError(f"not a scene directory (missing meta.json): {root}")
    meta = json.loads(meta_path.read_text())
    c = meta["config"]
    cfg = SceneConfig(
        n_steps=c["n_steps"], dt=c["dt"], n_cars=c["n_cars"],
        n_pedestrians=c["n_pedestrians"], n_riders=c["n_riders"],
        n_large_vehicles=c["n_large_vehicles"], n_cameras=c["n_cameras"],
        n_radars=c["n_radars"], image_extent=tuple(c["image_extent"]),
        feature_extent=tuple(c["feature_extent"]), x_bounds=tuple(c["x_bounds"]),
        y_bounds=tuple(c["y_bounds"]), z_bounds=tuple(c["z_bounds"]),
        ego_mode=c["ego_mode"], with_walls=c["with_walls"],
    )

    poses = []
    velocities = []
    pose_lines = (root / "poses.csv").read_text().strip().splitlines()[1:]
    for ln in pose_lines:
        vals = [float(v) for v in ln.split(",")[1:]]
        poses.append(Pose(np.array(vals[0:9]).reshape(3, 3), np.array(vals[9:12])))
        velocities.append(vals[12:15])

    objects = []
    obj_lines = (root / "objects.csv").read_text().strip().splitlines()[1:]
    for ln in obj_lines:
        parts = ln.split(",")
        class_id = int(parts[0])
        vals = [float(v) for v in parts[1:]]
        objects.append(SceneObject(class_id, np.array(vals[0:3]), np.array(vals[3:6]),
                                   vals[6], np.array(vals[7:9])))

    cameras = []
    radar_poses = []
    for ln in (root / "calib.txt").read_text().strip().splitlines():
        parts = ln.split()
        if parts[0] == "camera":
            vals = [float(v) for v in parts[1:]]
            k = np.array(vals[0:12]).reshape(3, 4)
            pose = Pose(np.array(vals[12:21]).reshape(3, 3), np.array(vals[21:24]))
            ie = (int(vals[24]), int(vals[25]))
            fe = (int(vals[26]), int(vals[27]))
            cameras.append(CameraModel(k, pose, ie, fe))
        elif parts[0] == "radar":
            vals = [float(v) for v in parts[1:]]
            radar_poses.append(Pose(np.array(vals[0:9]).reshape(3, 3), np.array(vals[9:12])))

    return Scene(meta["seed"], cfg, poses, np.asarray(velocities, dtype=np.float64),
                 objects, cameras, radar_poses)
