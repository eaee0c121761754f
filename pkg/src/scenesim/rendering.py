"""Verification rendering: background volume render + sprite foreground.

This path exists so composed frames can be inspected end to end; asset
meshes are the business of an external renderer consuming the export
document. Vehicles are drawn as projected, Lambertian-shaded boxes with a
ground-footprint shadow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from .compositor import BackgroundDepth, ForegroundLayer, composite
from .fields import RadianceField
from .geometry import pixel_rays, project_point
from .lighting import blend_environment, capture_surround, shade_lambertian
from .photometry import RaySampling, render_rays
from .scene import CameraModel, ExposureStats, PlacedVehicle, SceneState

SHADOW_STRENGTH = 0.6
PROBE_RESOLUTION = (16, 32)


@dataclass
class RenderOptions:
    width: int = 160
    height: int = 120
    samples: int = 32
    frames: int = 4
    fps: float = 10.0


def render_background(camera: CameraModel, field: RadianceField,
                      sampling: RaySampling, stats: ExposureStats) -> np.ndarray:
    """HDR background through the camera, exposure-normalized for display."""
    w, h = camera.image_size
    us, vs = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
    origins, dirs = pixel_rays(camera, us.ravel(), vs.ravel())
    hdr, _ = render_rays(origins, dirs, field, sampling, camera.exposure, stats)
    return hdr.reshape(h, w, 3)


def _box_corners(vehicle: PlacedVehicle, dims) -> np.ndarray:
    length, width, height = dims
    x, y, heading = vehicle.pose
    c, s = math.cos(heading), math.sin(heading)
    corners = []
    for dx in (-length / 2, length / 2):
        for dy in (-width / 2, width / 2):
            for dz in (0.0, height):
                wx = x + c * dx - s * dy
                wy = y + s * dx + c * dy
                corners.append((wx, wy, dz))
    return np.array(corners)


def _convex_hull(points: list[tuple[float, float]]):
    """Andrew monotone chain; returns hull vertices CCW."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def render_foreground(camera: CameraModel, vehicles: list[PlacedVehicle],
                      dims_by_vehicle: dict[str, tuple],
                      colors_by_vehicle: dict[str, tuple],
                      field: RadianceField, sky: np.ndarray | None,
                      sampling: RaySampling) -> ForegroundLayer:
    """Project each vehicle box into the image as a shaded sprite layer."""
    w, h = camera.image_size
    fg = ForegroundLayer.empty(h, w)
    order = sorted(vehicles, key=lambda v: -_cam_distance(camera, v))
    for vehicle in order:
        dims = dims_by_vehicle.get(vehicle.instance_id, (4.5, 1.9, 1.5))
        albedo = colors_by_vehicle.get(vehicle.instance_id, (0.5, 0.5, 0.5))
        corners = _box_corners(vehicle, dims)
        projected = []
        depth = None
        for cnr in corners:
            proj = project_point(camera, cnr)
            if proj is None:
                projected = []
                break
            projected.append((proj[0], proj[1]))
            depth = proj[2] if depth is None else min(depth, proj[2])
        if not projected:
            continue
        hull = _convex_hull(projected)
        if len(hull) < 3:
            continue

        center = np.array([vehicle.pose[0], vehicle.pose[1], dims[2] / 2])
        probe = capture_surround(center + np.array([0, 0, dims[2]]), field,
                                 sampling, *PROBE_RESOLUTION)
        env = blend_environment(probe, sky) if sky is not None else probe.surround
        shade = shade_lambertian((0.0, 0.0, 1.0), albedo, env)

        mask_img = Image.new("L", (w, h), 0)
        ImageDraw.Draw(mask_img).polygon(hull, fill=255)
        mask = np.asarray(mask_img) > 0
        fg.rgb[mask] = np.clip(shade, 0.0, None)
        fg.alpha[mask] = 1.0
        fg.depth[mask] = max(depth, 0.1)

        shadow_hull = _ground_shadow_hull(camera, vehicle, dims)
        if shadow_hull:
            sh_img = Image.new("L", (w, h), 0)
            ImageDraw.Draw(sh_img).polygon(shadow_hull, fill=255)
            sh_mask = (np.asarray(sh_img) > 0) & ~mask
            fg.shadow[sh_mask] = np.minimum(fg.shadow[sh_mask], SHADOW_STRENGTH)
    return fg


def _cam_distance(camera: CameraModel, vehicle: PlacedVehicle) -> float:
    p = np.array([vehicle.pose[0], vehicle.pose[1], 0.0])
    return float(np.linalg.norm(p - camera.extrinsic.translation))


def _ground_shadow_hull(camera, vehicle, dims):
    length, width, _ = dims
    x, y, heading = vehicle.pose
    c, s = math.cos(heading), math.sin(heading)
    pts = []
    for dx in (-0.65 * length, 0.65 * length):
        for dy in (-0.65 * width, 0.65 * width):
            wx = x + c * dx - s * dy
            wy = y + s * dx + c * dy
            proj = project_point(camera, np.array([wx, wy, 0.0]))
            if proj is None:
                return None
            pts.append((proj[0], proj[1]))
    return _convex_hull(pts)


def scaled_camera(camera: CameraModel, width: int, height: int) -> CameraModel:
    """Resize the camera model to the verification render resolution."""
    sx = width / camera.image_size[0]
    sy = height / camera.image_size[1]
    fx, fy, cx, cy = camera.intrinsics
    return CameraModel(id=camera.id,
                       intrinsics=(fx * sx, fy * sy, cx * sx, cy * sy),
                       image_size=(width, height),
                       extrinsic=camera.extrinsic,
                       exposure=camera.exposure)


def render_frames(state: SceneState, field: RadianceField,
                  dims_by_vehicle: dict, colors_by_vehicle: dict,
                  options: RenderOptions) -> list[np.ndarray]:
    """Compose verification frames along the active trajectories."""
    cam = scaled_camera(state.rig.reference, options.width, options.height)
    stats = ExposureStats.from_rig(state.rig)
    sampling = RaySampling(options.samples)
    bg = render_background(cam, field, sampling, stats)

    frames = []
    dt = 1.0 / options.fps
    for i in range(options.frames):
        t = i * dt
        posed = []
        for v in state.vehicles:
            if v.instance_id in state.deleted_ids:
                continue
            if v.trajectory is not None:
                t_max = v.trajectory.samples[-1][0]
                x, y, hd = v.trajectory.pose_at(min(t, t_max))
                posed.append(PlacedVehicle(v.instance_id, v.asset_id,
                                           (x, y, hd), None, v.attributes))
            else:
                posed.append(v)
        fg = render_foreground(cam, posed, dims_by_vehicle, colors_by_vehicle,
                               field, state.skydome, sampling)
        frames.append(composite(fg, bg, BackgroundDepth.empty()))
    return frames
