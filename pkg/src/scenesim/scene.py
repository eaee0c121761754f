"""Core scene domain types and structural validation.

Conventions used throughout the package:
  * ego frame: x forward, y left, z up; headings CCW from +x in radians
  * SI units internally (meters, seconds, radians); degrees only at the
    command-language boundary
"""

from __future__ import annotations

import copy
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

ORTHO_TOL = 1e-9


class LaneType(enum.Enum):
    CENTERLINE = "centerline"
    BOUNDARY = "boundary"
    OTHER = "other"


class EditAction(enum.Enum):
    ADD = "add"
    DELETE = "delete"
    VIEW_CHANGE = "view_change"
    REVISE = "revise"
    ABSTRACT_EXPAND = "abstract_expand"


@dataclass(frozen=True)
class LaneNode:
    """A directed lane segment (start -> end) of a given type."""

    start: tuple[float, float]
    end: tuple[float, float]
    lane_type: LaneType = LaneType.CENTERLINE

    @property
    def midpoint(self) -> tuple[float, float]:
        return (
            0.5 * (self.start[0] + self.end[0]),
            0.5 * (self.start[1] + self.end[1]),
        )

    @property
    def direction(self) -> tuple[float, float]:
        dx = self.end[0] - self.start[0]
        dy = self.end[1] - self.start[1]
        n = math.hypot(dx, dy)
        if n == 0.0:
            return (0.0, 0.0)
        return (dx / n, dy / n)

    @property
    def heading(self) -> float:
        d = self.direction
        return math.atan2(d[1], d[0])

    def reversed(self) -> "LaneNode":
        return LaneNode(self.end, self.start, self.lane_type)


@dataclass
class LaneMap:
    nodes: list[LaneNode]
    frame: str = "world"

    def centerlines(self) -> list[LaneNode]:
        return [n for n in self.nodes if n.lane_type is LaneType.CENTERLINE]


@dataclass
class Pose6D:
    """Rigid pose: orthonormal rotation (det +1) plus translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)

    @classmethod
    def identity(cls) -> "Pose6D":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_heading(cls, x: float, y: float, heading: float, z: float = 0.0) -> "Pose6D":
        c, s = math.cos(heading), math.sin(heading)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return cls(rot, np.array([x, y, z]))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose6D":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3].copy(), m[:3, 3].copy())

    def compose(self, other: "Pose6D") -> "Pose6D":
        """self applied after other (matrix product self @ other)."""
        return Pose6D(self.rotation @ other.rotation,
                      self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose6D":
        rt = self.rotation.T
        return Pose6D(rt, -rt @ self.translation)

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))))

    def is_valid(self, tol: float = ORTHO_TOL) -> bool:
        return (self.orthonormality_error() <= tol
                and abs(np.linalg.det(self.rotation) - 1.0) <= 1e-6
                and np.all(np.isfinite(self.translation)))

    def to_dict(self) -> dict:
        return {"rotation": [[float(v) for v in row] for row in self.rotation],
                "translation": [float(v) for v in self.translation]}

    @classmethod
    def from_dict(cls, d: dict) -> "Pose6D":
        return cls(np.array(d["rotation"], dtype=float),
                   np.array(d["translation"], dtype=float))


@dataclass
class CameraModel:
    id: str
    intrinsics: tuple[float, float, float, float]  # fx, fy, cx, cy (px)
    image_size: tuple[int, int]  # width, height
    extrinsic: Pose6D
    exposure: float  # seconds

    @property
    def fx(self) -> float:
        return self.intrinsics[0]

    @property
    def fy(self) -> float:
        return self.intrinsics[1]

    @property
    def cx(self) -> float:
        return self.intrinsics[2]

    @property
    def cy(self) -> float:
        return self.intrinsics[3]


@dataclass
class CameraRig:
    cameras: list[CameraModel]
    reference_camera: str

    def camera(self, cam_id: str) -> CameraModel:
        for c in self.cameras:
            if c.id == cam_id:
                return c
        raise KeyError(f"no camera with id {cam_id!r}")

    @property
    def reference(self) -> CameraModel:
        return self.camera(self.reference_camera)


@dataclass(frozen=True)
class ExposureStats:
    mean: float
    std: float
    epsilon: float = 0.5

    @classmethod
    def from_rig(cls, rig: CameraRig, epsilon: float = 0.5) -> "ExposureStats":
        exposures = np.array([c.exposure for c in rig.cameras], dtype=float)
        return cls(float(exposures.mean()), float(exposures.std()), epsilon)


@dataclass
class Trajectory:
    """Timestamped 2D poses at uniform spacing dt."""

    samples: list[tuple[float, float, float, float]]  # (t, x, y, heading)
    dt: float

    def __len__(self) -> int:
        return len(self.samples)

    def pose_at(self, t: float) -> tuple[float, float, float]:
        """Interpolated (x, y, heading) at time t; heading via shortest arc."""
        ts = [s[0] for s in self.samples]
        if t < ts[0] or t > ts[-1]:
            raise ValueError(f"t={t} outside trajectory range [{ts[0]}, {ts[-1]}]")
        for i in range(len(ts) - 1):
            if ts[i] <= t <= ts[i + 1]:
                u = 0.0 if ts[i + 1] == ts[i] else (t - ts[i]) / (ts[i + 1] - ts[i])
                _, x0, y0, h0 = self.samples[i]
                _, x1, y1, h1 = self.samples[i + 1]
                dh = wrap_angle(h1 - h0)
                return (x0 + u * (x1 - x0), y0 + u * (y1 - y0),
                        wrap_angle(h0 + u * dh))
        # t == last sample (fp edge)
        _, x, y, h = self.samples[-1]
        return (x, y, h)

    def to_rows(self) -> list[list[float]]:
        return [[float(t), float(x), float(y), float(h)] for t, x, y, h in self.samples]


@dataclass
class PlacedVehicle:
    instance_id: str
    asset_id: str
    pose: tuple[float, float, float]  # x, y, heading
    trajectory: Optional[Trajectory] = None
    attributes: dict[str, Any] = field(default_factory=dict)


@dataclass
class EditConfig:
    action: EditAction
    target: Optional[str] = None
    parameters: dict[str, Any] = field(default_factory=dict)
    round: int = 0

    def to_dict(self) -> dict:
        return {
            "action": self.action.value,
            "target": self.target,
            "parameters": copy.deepcopy(self.parameters),
            "round": self.round,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EditConfig":
        return cls(action=EditAction(d["action"]), target=d.get("target"),
                   parameters=dict(d.get("parameters") or {}),
                   round=int(d.get("round", 0)))

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class SceneState:
    lane_map: LaneMap
    rig: CameraRig
    vehicles: list[PlacedVehicle] = field(default_factory=list)
    deleted_ids: set[str] = field(default_factory=set)
    skydome: Optional["np.ndarray"] = None  # h x w x 3 HDR equirect
    history: list[EditConfig] = field(default_factory=list)
    ego_trajectory: Optional[Trajectory] = None

    def vehicle(self, instance_id: str) -> PlacedVehicle:
        for v in self.vehicles:
            if v.instance_id == instance_id:
                return v
        raise KeyError(f"no vehicle {instance_id!r}")

    def snapshot(self) -> "SceneState":
        return copy.deepcopy(self)


def wrap_angle(a: float) -> float:
    """Wrap angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def interpolate_heading(h0: float, h1: float, u: float) -> float:
    """Shortest-arc heading interpolation (spherical on the circle)."""
    return wrap_angle(h0 + u * wrap_angle(h1 - h0))


def validate_scene(state: SceneState) -> list[str]:
    """Structural validation; returns a list of violation messages.

    Empty list means every type invariant holds. Never raises.
    """
    violations: list[str] = []

    for i, node in enumerate(state.lane_map.nodes):
        if node.start == node.end:
            violations.append(f"lane_map.nodes[{i}]: start equals end")
        coords = (*node.start, *node.end)
        if not all(math.isfinite(c) for c in coords):
            violations.append(f"lane_map.nodes[{i}]: non-finite coordinate")

    ids = [c.id for c in state.rig.cameras]
    if len(set(ids)) != len(ids):
        violations.append("rig.cameras: duplicate camera ids")
    if state.rig.reference_camera not in ids:
        violations.append(
            f"rig.reference_camera: {state.rig.reference_camera!r} not in rig")
    for cam in state.rig.cameras:
        if cam.exposure <= 0:
            violations.append(f"camera {cam.id}: exposure must be > 0")
        if cam.fx <= 0 or cam.fy <= 0:
            violations.append(f"camera {cam.id}: focal lengths must be > 0")
        if cam.image_size[0] <= 0 or cam.image_size[1] <= 0:
            violations.append(f"camera {cam.id}: image_size must be positive")
        err = cam.extrinsic.orthonormality_error()
        if err > ORTHO_TOL:
            violations.append(
                f"camera {cam.id}: rotation not orthonormal (|R^T R - I| = {err:.3g})")
        elif np.linalg.det(cam.extrinsic.rotation) < 0:
            violations.append(f"camera {cam.id}: rotation determinant not +1")

    seen: set[str] = set()
    for v in state.vehicles:
        if v.instance_id in seen:
            violations.append(f"vehicle {v.instance_id}: duplicate instance_id")
        seen.add(v.instance_id)
        if not (-math.pi < v.pose[2] <= math.pi):
            violations.append(
                f"vehicle {v.instance_id}: heading {v.pose[2]} outside (-pi, pi]")
        if v.instance_id in state.deleted_ids:
            violations.append(
                f"vehicle {v.instance_id}: present in both vehicles and deleted_ids")
        if v.trajectory is not None:
            violations.extend(_validate_trajectory(v.trajectory, f"vehicle {v.instance_id}"))

    if state.skydome is not None:
        sky = np.asarray(state.skydome)
        if sky.ndim != 3 or sky.shape[2] != 3:
            violations.append("skydome: expected h x w x 3 array")
        elif not np.all(np.isfinite(sky)) or np.any(sky < 0):
            violations.append("skydome: pixels must be finite and nonnegative")

    return violations


def _validate_trajectory(traj: Trajectory, owner: str) -> list[str]:
    out = []
    if len(traj.samples) < 2:
        out.append(f"{owner}.trajectory: needs >= 2 samples")
        return out
    ts = np.array([s[0] for s in traj.samples])
    diffs = np.diff(ts)
    if np.any(diffs <= 0):
        out.append(f"{owner}.trajectory: timestamps not strictly increasing")
    elif np.max(np.abs(diffs - traj.dt)) > 1e-9:
        out.append(f"{owner}.trajectory: spacing not uniform at dt={traj.dt}")
    return out


def ego_frame(state: SceneState, t: float) -> Pose6D:
    """Ego pose at time t from the recorded ego trajectory.

    Translation is interpolated linearly, heading along the shortest arc.
    """
    if state.ego_trajectory is None:
        raise ValueError("scene has no ego trajectory")
    x, y, h = state.ego_trajectory.pose_at(t)
    return Pose6D.from_heading(x, y, h)


# ---------------------------------------------------------------------------
# Scene file (JSON) serialization.  Top-level keys: lane_map, cameras,
# vehicles, skydome_path; see docs/scene_schema.md.

def scene_to_dict(state: SceneState, skydome_path: Optional[str] = None) -> dict:
    return {
        "lane_map": {
            "frame": state.lane_map.frame,
            "nodes": [
                {"start": list(n.start), "end": list(n.end),
                 "type": n.lane_type.value}
                for n in state.lane_map.nodes
            ],
        },
        "cameras": {
            "reference": state.rig.reference_camera,
            "items": [
                {"id": c.id, "intrinsics": list(c.intrinsics),
                 "image_size": list(c.image_size),
                 "extrinsic": c.extrinsic.to_dict(),
                 "exposure": c.exposure}
                for c in state.rig.cameras
            ],
        },
        "vehicles": [
            {"instance_id": v.instance_id, "asset_id": v.asset_id,
             "pose": list(v.pose),
             "trajectory": (None if v.trajectory is None else
                            {"dt": v.trajectory.dt, "samples": v.trajectory.to_rows()}),
             "attributes": v.attributes}
            for v in state.vehicles
        ],
        "deleted_ids": sorted(state.deleted_ids),
        "ego_trajectory": (None if state.ego_trajectory is None else
                           {"dt": state.ego_trajectory.dt,
                            "samples": state.ego_trajectory.to_rows()}),
        "skydome_path": skydome_path,
        "history": [c.to_dict() for c in state.history],
    }


def scene_from_dict(doc: dict) -> SceneState:
    lm = doc["lane_map"]
    lane_map = LaneMap(
        nodes=[LaneNode(tuple(n["start"]), tuple(n["end"]),
                        LaneType(n.get("type", "centerline")))
               for n in lm["nodes"]],
        frame=lm.get("frame", "world"),
    )
    cams = doc["cameras"]
    rig = CameraRig(
        cameras=[CameraModel(id=c["id"], intrinsics=tuple(c["intrinsics"]),
                             image_size=tuple(c["image_size"]),
                             extrinsic=Pose6D.from_dict(c["extrinsic"]),
                             exposure=c["exposure"])
                 for c in cams["items"]],
        reference_camera=cams["reference"],
    )
    vehicles = []
    for v in doc.get("vehicles", []):
        traj = v.get("trajectory")
        vehicles.append(PlacedVehicle(
            instance_id=v["instance_id"], asset_id=v["asset_id"],
            pose=tuple(v["pose"]),
            trajectory=(None if traj is None else
                        Trajectory([tuple(s) for s in traj["samples"]], traj["dt"])),
            attributes=dict(v.get("attributes") or {}),
        ))
    ego = doc.get("ego_trajectory")
    return SceneState(
        lane_map=lane_map, rig=rig, vehicles=vehicles,
        deleted_ids=set(doc.get("deleted_ids") or []),
        ego_trajectory=(None if ego is None else
                        Trajectory([tuple(s) for s in ego["samples"]], ego["dt"])),
        history=[EditConfig.from_dict(c) for c in doc.get("history", [])],
    )


def load_scene(path: str) -> SceneState:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))


def save_scene(state: SceneState, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(scene_to_dict(state), fh, indent=2, sort_keys=True)
