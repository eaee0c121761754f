"""Camera geometry: view deltas, multi-camera alignment, rays, equirect maps.

Equirectangular convention (shared with the lighting modules): row 0 is the
zenith (+z), row h-1 the nadir; columns span azimuth [0, 2pi) CCW from +x.
Pixel directions are taken at pixel centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import CameraModel, Pose6D


@dataclass(frozen=True)
class ViewDelta:
    """Viewpoint adjustment in the ego frame."""

    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)  # yaw, pitch, roll (rad)

    def matrix(self) -> np.ndarray:
        yaw, pitch, roll = self.rotation
        rz = _rot_z(yaw)
        ry = _rot_y(pitch)
        rx = _rot_x(roll)
        m = np.eye(4)
        m[:3, :3] = rz @ ry @ rx
        m[:3, 3] = self.translation
        return m


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        d = np.asarray(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("zero-length ray direction")
        self.direction = d / n


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def apply_view_delta(extrinsic: Pose6D, delta: ViewDelta) -> Pose6D:
    """Left-multiply the extrinsic by the delta transform (ego frame)."""
    m = delta.matrix() @ extrinsic.matrix()
    pose = Pose6D.from_matrix(m)
    # keep orthonormality exact under long compositions
    u, _, vt = np.linalg.svd(pose.rotation)
    pose.rotation = u @ vt
    return pose


@dataclass
class AlignmentInput:
    """Poses in the external unified space plus vehicle-space anchors.

    external[(i, k)]: pose of camera i at trigger k in the external space.
    front_vehicle_0 / front_vehicle_1: front camera (i=0) poses at triggers
    0 and 1 in the vehicle space.
    """

    external: dict[tuple[int, int], Pose6D]
    front_vehicle_0: Pose6D
    front_vehicle_1: Pose6D


def align_cameras(inp: AlignmentInput) -> dict[tuple[int, int], Pose6D]:
    """Map external-space poses into the vehicle space.

    Anchored at the front camera's trigger-0 pose; the scale factor is the
    norm ratio of the trigger 0->1 translation deltas in the two spaces.
    """
    if (0, 0) not in inp.external or (0, 1) not in inp.external:
        raise ValueError("front camera poses at triggers 0 and 1 required")

    r_v0 = inp.front_vehicle_0.rotation
    t_v0 = inp.front_vehicle_0.translation
    ext00 = inp.external[(0, 0)]
    ext01 = inp.external[(0, 1)]

    dm = np.linalg.norm(ext01.translation - ext00.translation)
    dv = np.linalg.norm(inp.front_vehicle_1.translation - t_v0)
    if dm == 0.0 or dv == 0.0:
        raise ValueError("degenerate scale: coincident anchor poses")
    scale = dm / dv

    r_bridge = r_v0 @ ext00.rotation.T
    out: dict[tuple[int, int], Pose6D] = {}
    for key, pose in inp.external.items():
        rot = r_bridge @ pose.rotation
        trans = r_bridge @ (pose.translation - ext00.translation) / scale + t_v0
        out[key] = Pose6D(rot, trans)
    return out


def pixel_ray(camera: CameraModel, pixel: tuple[float, float]) -> Ray:
    """Back-project a pixel through the pinhole model into a world ray.

    Camera frame: x right, y down, z forward (optical axis); the extrinsic
    maps camera frame to world.
    """
    u, v = pixel
    w, h = camera.image_size
    if not (0 <= u < w and 0 <= v < h):
        raise ValueError(f"pixel ({u}, {v}) outside {w}x{h} image")
    d_cam = np.array([(u - camera.cx) / camera.fx,
                      (v - camera.cy) / camera.fy, 1.0])
    d_world = camera.extrinsic.rotation @ d_cam
    return Ray(camera.extrinsic.translation, d_world)


def pixel_rays(camera: CameraModel, us: np.ndarray, vs: np.ndarray):
    """Vectorized back-projection: (N,) pixel coords -> origins, unit dirs."""
    d_cam = np.stack([(us - camera.cx) / camera.fx,
                      (vs - camera.cy) / camera.fy,
                      np.ones_like(us, dtype=float)], axis=-1)
    d_world = d_cam @ camera.extrinsic.rotation.T
    d_world /= np.linalg.norm(d_world, axis=-1, keepdims=True)
    origins = np.broadcast_to(camera.extrinsic.translation, d_world.shape).copy()
    return origins, d_world


def project_point(camera: CameraModel, point: np.ndarray):
    """World point -> (u, v, depth) under the pinhole model; depth is the
    camera-frame z. Returns None when the point is behind the camera."""
    p_cam = camera.extrinsic.rotation.T @ (np.asarray(point, float) - camera.extrinsic.translation)
    if p_cam[2] <= 1e-9:
        return None
    u = camera.fx * p_cam[0] / p_cam[2] + camera.cx
    v = camera.fy * p_cam[1] / p_cam[2] + camera.cy
    return (u, v, float(p_cam[2]))


def equirect_dir(row: int, col: int, h: int, w: int) -> np.ndarray:
    """Unit direction at a pixel center of an h x w equirect grid."""
    if not (0 <= row < h and 0 <= col < w):
        raise ValueError(f"equirect index ({row}, {col}) out of range for {h}x{w}")
    theta = math.pi * (row + 0.5) / h        # polar angle from +z
    phi = 2.0 * math.pi * (col + 0.5) / w    # azimuth CCW from +x
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def equirect_pixel(direction: np.ndarray, h: int, w: int) -> tuple[int, int]:
    """Inverse of equirect_dir for pixel-center directions."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    theta = math.acos(np.clip(d[2], -1.0, 1.0))
    phi = math.atan2(d[1], d[0]) % (2.0 * math.pi)
    row = min(h - 1, max(0, int(theta / math.pi * h)))
    col = int(phi / (2.0 * math.pi) * w) % w
    return (row, col)


def equirect_grid(h: int, w: int) -> np.ndarray:
    """All pixel-center directions as an (h, w, 3) array."""
    rows = (np.arange(h) + 0.5) * math.pi / h
    cols = (np.arange(w) + 0.5) * 2.0 * math.pi / w
    theta, phi = np.meshgrid(rows, cols, indexing="ij")
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
