"""Built-in demo scene: a two-lane street with a left and a right cross
street, a three-camera rig with distinct exposures, and a simple sky."""

from __future__ import annotations

import math

import numpy as np

from .geometry import equirect_grid
from .scene import (CameraModel, CameraRig, LaneMap, LaneNode, LaneType,
                    Pose6D, SceneState, Trajectory)

NODE_STEP = 2.0  # m between consecutive lane-node midpoints


def _lane(points: list[tuple[float, float]],
          lane_type: LaneType = LaneType.CENTERLINE) -> list[LaneNode]:
    return [LaneNode(points[i], points[i + 1], lane_type)
            for i in range(len(points) - 1)]


def _straight(x0, y0, x1, y1, step=NODE_STEP):
    n = max(1, round(math.dist((x0, y0), (x1, y1)) / step))
    return [(x0 + (x1 - x0) * i / n, y0 + (y1 - y0) * i / n)
            for i in range(n + 1)]


def _arc(cx, cy, radius, a0, a1, step=NODE_STEP):
    arc_len = abs(a1 - a0) * radius
    n = max(2, round(arc_len / step))
    return [(cx + radius * math.cos(a0 + (a1 - a0) * i / n),
             cy + radius * math.sin(a0 + (a1 - a0) * i / n))
            for i in range(n + 1)]


def demo_lane_map() -> LaneMap:
    nodes: list[LaneNode] = []
    # ego lane: +x at y=0 (right-hand traffic, ego drives here)
    nodes += _lane(_straight(2, 0, 78, 0))
    # oncoming lane: -x at y=+3.5
    nodes += _lane(_straight(78, 3.5, 2, 3.5))
    # left cross street (+y) at x=40, reachable via a quarter arc
    nodes += _lane(_arc(30, 10, 10, -math.pi / 2, 0.0))
    nodes += _lane(_straight(40, 10, 40, 19))
    # right cross street (-y) at x=56
    nodes += _lane(_arc(46, -10, 10, math.pi / 2, 0.0))
    nodes += _lane(_straight(56, -10, 56, -19))
    # lane boundaries (not drivable)
    nodes += _lane(_straight(2, 1.75, 78, 1.75, step=8.0), LaneType.BOUNDARY)
    return LaneMap(nodes, frame="ego")


def _camera(cam_id: str, yaw: float, exposure: float) -> CameraModel:
    # camera frame (x right, y down, z forward) mounted looking along ego +x,
    # then yawed; world frame is the ego frame
    c, s = math.cos(yaw), math.sin(yaw)
    ego_yaw = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    cam_to_ego = np.array([[0.0, 0.0, 1.0],
                           [-1.0, 0.0, 0.0],
                           [0.0, -1.0, 0.0]])
    rot = ego_yaw @ cam_to_ego
    return CameraModel(
        id=cam_id,
        intrinsics=(320.0, 320.0, 320.0, 240.0),
        image_size=(640, 480),
        extrinsic=Pose6D(rot, np.array([1.5, 0.0, 1.6])),
        exposure=exposure,
    )


def demo_rig() -> CameraRig:
    return CameraRig(
        cameras=[
            _camera("front", 0.0, 0.020),
            _camera("front_left", math.radians(45.0), 0.010),
            _camera("front_right", math.radians(-45.0), 0.030),
        ],
        reference_camera="front",
    )


def demo_skydome(h: int = 32, w: int = 64) -> np.ndarray:
    """Blue-ish gradient sky with a bright sun lobe toward the upper front."""
    dirs = equirect_grid(h, w)
    up = np.clip(dirs[..., 2], 0.0, 1.0)
    sky = np.stack([0.3 + 0.2 * up, 0.45 + 0.25 * up, 0.7 + 0.3 * up], axis=-1)
    sun_dir = np.array([0.5, 0.2, 0.8])
    sun_dir /= np.linalg.norm(sun_dir)
    lobe = np.exp(100.0 * (dirs @ sun_dir - 1.0))
    sky += lobe[..., None] * np.array([5000.0, 4800.0, 4500.0])
    return sky


def demo_scene() -> SceneState:
    ego = Trajectory([(0.0, 0.0, 0.0, 0.0), (4.0, 0.0, 0.0, 0.0)], dt=4.0)
    return SceneState(
        lane_map=demo_lane_map(),
        rig=demo_rig(),
        skydome=demo_skydome(),
        ego_trajectory=ego,
    )
