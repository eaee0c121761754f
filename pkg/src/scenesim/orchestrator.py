"""Round orchestration: decomposition, dispatch to role handlers, and
transactional multi-round session state.

Each round runs on a snapshot of the scene; only a fully successful round is
committed (state swap + history append), so any failing sub-command leaves
the session bitwise unchanged. All randomness flows from the per-session
seed plus the round counter, making sessions replayable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from graphlib import TopologicalSorter
from typing import Optional

import numpy as np

from . import dsl
from .assets import AssetRecord, default_bank, match_asset, recolor
from .fields import RadianceField, demo_street_field
from .geometry import ViewDelta, apply_view_delta
from .motion import (MotionAttributes, PlanningError, classify_sector,
                     crop_map, plan_motion, place_vehicle, PlacementQuery)
from .rendering import RenderOptions, render_frames
from .scene import (EditAction, EditConfig, LaneMap, Pose6D, PlacedVehicle,
                    SceneState, ego_frame, wrap_angle)

TRAFFIC_JAM_SPACING = 8.0   # m between queued vehicles
TRAFFIC_JAM_SPEED = 0.5     # m/s crawl
CHASE_GAP = 10.0            # m behind a referenced vehicle
LATERAL_GAP = 3.5           # m beside a referenced vehicle (lane width)
OCCUPIED_MARGIN = 1.0       # m added to half the asset length


class AgentRole(enum.Enum):
    PROJECT_MANAGER = "project_manager"
    VIEW_ADJUST = "view_adjust"
    BACKGROUND_RENDER = "background_render"
    VEHICLE_DELETE = "vehicle_delete"
    ASSET_MANAGE = "asset_manage"
    VEHICLE_MOTION = "vehicle_motion"
    FOREGROUND_RENDER = "foreground_render"


class RoundError(Exception):
    def __init__(self, role: AgentRole, config: Optional[EditConfig], cause: Exception):
        self.role = role
        self.config = config
        self.cause = cause
        super().__init__(f"round failed in {role.value}: {cause}")


class UnsupportedAbstractionError(Exception):
    pass


@dataclass
class WorkOrder:
    configs_by_role: dict[AgentRole, list[EditConfig]]
    edges: list[tuple[AgentRole, AgentRole]]

    def execution_order(self) -> list[AgentRole]:
        ts = TopologicalSorter({r: set() for r in self.configs_by_role})
        for a, b in self.edges:
            ts.add(b, a)
        order = list(ts.static_order())
        return [r for r in order if r in self.configs_by_role]


@dataclass
class RoundResult:
    state: SceneState
    work_order: WorkOrder
    frames: list[np.ndarray] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


@dataclass
class Session:
    id: str
    state: SceneState
    seed: int = 0
    round_counter: int = 0
    bank: list[AssetRecord] = field(default_factory=default_bank)
    field_oracle: RadianceField = field(default_factory=demo_street_field)
    render_options: RenderOptions = field(default_factory=RenderOptions)
    vehicle_counter: int = 0

    def next_instance_id(self) -> str:
        self.vehicle_counter += 1
        return f"veh{self.vehicle_counter:03d}"


_DEPENDENCY_EDGES = [
    (AgentRole.VIEW_ADJUST, AgentRole.BACKGROUND_RENDER),
    (AgentRole.VIEW_ADJUST, AgentRole.FOREGROUND_RENDER),
    (AgentRole.VEHICLE_DELETE, AgentRole.BACKGROUND_RENDER),
    (AgentRole.ASSET_MANAGE, AgentRole.VEHICLE_MOTION),
    (AgentRole.VEHICLE_MOTION, AgentRole.FOREGROUND_RENDER),
]


def plan_round(session: Session, text: dsl.CommandText,
               backend: Optional[dsl.InterpreterBackend] = None) -> WorkOrder:
    """Decompose a command and route configs to agent roles."""
    backend = backend or dsl.InterpreterBackend()
    if backend.kind == "remote_model":
        configs = dsl.remote_interpret(text, backend)
    else:
        configs = dsl.parse_command(text)

    expanded: list[EditConfig] = []
    for config in configs:
        if config.action is EditAction.ABSTRACT_EXPAND:
            expanded.extend(expand_abstract(config, session.state, session.seed))
        else:
            expanded.append(config)

    by_role: dict[AgentRole, list[EditConfig]] = {
        AgentRole.BACKGROUND_RENDER: [],
        AgentRole.FOREGROUND_RENDER: [],
    }
    for config in expanded:
        if config.action is EditAction.DELETE:
            by_role.setdefault(AgentRole.VEHICLE_DELETE, []).append(config)
        elif config.action is EditAction.ADD:
            by_role.setdefault(AgentRole.ASSET_MANAGE, []).append(config)
            by_role.setdefault(AgentRole.VEHICLE_MOTION, []).append(config)
            by_role[AgentRole.FOREGROUND_RENDER].append(config)
        elif config.action is EditAction.VIEW_CHANGE:
            by_role.setdefault(AgentRole.VIEW_ADJUST, []).append(config)
        elif config.action is EditAction.REVISE:
            by_role.setdefault(AgentRole.VEHICLE_MOTION, []).append(config)
            by_role[AgentRole.FOREGROUND_RENDER].append(config)

    edges = [(a, b) for a, b in _DEPENDENCY_EDGES
             if a in by_role and b in by_role]
    return WorkOrder(by_role, edges)


def expand_abstract(config: EditConfig, state: SceneState,
                    seed: int = 0) -> list[EditConfig]:
    """Expand a catalog phrase into concrete add configs.

    "traffic jam": one crawl-speed add per free forward lane slot, slots
    spaced TRAFFIC_JAM_SPACING apart along increasing ego distance.
    """
    phrase = (config.parameters.get("phrase") or "").strip().lower()
    if "traffic jam" not in phrase:
        raise UnsupportedAbstractionError(
            f"no expansion rule for {phrase!r}; catalog: ['traffic jam']")

    ego = _ego_pose(state)
    cropped = crop_map(state.lane_map, ego)
    occupied = _occupied_discs(state, ego)

    front_nodes = []
    for node in cropped.centerlines():
        mx, my = node.midpoint
        if (mx, my) == (0.0, 0.0):
            continue
        if classify_sector((mx, my)) == "front":
            front_nodes.append(node)
    front_nodes.sort(key=lambda n: math.hypot(*n.midpoint))

    slots = []
    for node in front_nodes:
        mx, my = node.midpoint
        if any(math.hypot(mx - ox, my - oy) <= r for (ox, oy), r in occupied):
            continue
        if any(math.hypot(mx - sx, my - sy) < TRAFFIC_JAM_SPACING
               for sx, sy in slots):
            continue
        slots.append((mx, my))

    configs = []
    for sx, sy in slots:
        dist = math.hypot(sx, sy)
        configs.append(EditConfig(
            EditAction.ADD,
            parameters={
                "type": "car",
                "sector": "front",
                "speed": TRAFFIC_JAM_SPEED,
                "action": "straightforward",
                "duration": dsl.DEFAULT_DURATION,
                "distance_range": [max(0.1, dist - 0.5), dist + 0.5],
            },
            round=config.round,
        ))
    return configs


def execute_round(session: Session, order: WorkOrder,
                  render: bool = False) -> RoundResult:
    """Run a work order transactionally; commit only on full success."""
    working = session.state.snapshot()
    warnings: list[str] = []
    executed: list[EditConfig] = []
    round_no = session.round_counter
    counter_backup = session.vehicle_counter

    try:
        for role in order.execution_order():
            configs = order.configs_by_role.get(role, [])
            if role is AgentRole.VEHICLE_DELETE:
                for config in configs:
                    _run_delete(working, config)
                    executed.append(config)
            elif role is AgentRole.ASSET_MANAGE:
                for config in configs:
                    _run_asset(session, working, config)
            elif role is AgentRole.VEHICLE_MOTION:
                for i, config in enumerate(configs):
                    _run_motion(session, working, config, round_no, i)
                    executed.append(config)
                    if config.action is EditAction.ADD:
                        # later clauses in the same round may reference this
                        # car, so memorize it before moving on
                        working.history.append(config)
            elif role is AgentRole.VIEW_ADJUST:
                for config in configs:
                    _run_view(working, config)
                    executed.append(config)
            # render roles handled after state mutation below
    except RoundError:
        session.vehicle_counter = counter_backup
        raise
    except Exception as exc:
        session.vehicle_counter = counter_backup
        role = _failing_role(order, exc)
        raise RoundError(role, None, exc) from exc

    frames: list[np.ndarray] = []
    if render:
        dims = {v.instance_id: _dims_for(session, v) for v in working.vehicles}
        colors = {v.instance_id: tuple(v.attributes.get("rgb", (0.5, 0.5, 0.5)))
                  for v in working.vehicles}
        frames = render_frames(working, session.field_oracle, dims, colors,
                               session.render_options)

    for config in executed:
        config.round = round_no
    working.history.extend(c for c in _all_configs(order)
                           if all(c is not h for h in working.history))
    session.state = working
    session.round_counter += 1
    return RoundResult(working, order, frames, warnings)


def run_command(session: Session, raw: str, render: bool = False,
                backend: Optional[dsl.InterpreterBackend] = None) -> RoundResult:
    text = dsl.CommandText(raw, round=session.round_counter)
    order = plan_round(session, text, backend)
    return execute_round(session, order, render=render)


def _all_configs(order: WorkOrder) -> list[EditConfig]:
    seen: list[EditConfig] = []
    for configs in order.configs_by_role.values():
        for c in configs:
            if all(c is not s for s in seen):
                seen.append(c)
    return seen


def _failing_role(order: WorkOrder, exc: Exception) -> AgentRole:
    if isinstance(exc, PlanningError):
        return AgentRole.VEHICLE_MOTION
    if isinstance(exc, dsl.ReferenceError):
        return AgentRole.PROJECT_MANAGER
    return AgentRole.PROJECT_MANAGER


def _ego_pose(state: SceneState) -> Pose6D:
    if state.ego_trajectory is not None:
        return ego_frame(state, state.ego_trajectory.samples[0][0])
    return Pose6D.identity()


def _occupied_discs(state: SceneState, ego: Pose6D):
    inv = ego.inverse()
    discs = []
    for v in state.vehicles:
        if v.instance_id in state.deleted_ids:
            continue
        p = inv.rotation @ np.array([v.pose[0], v.pose[1], 0.0]) + inv.translation
        length = float(v.attributes.get("length", 4.5))
        discs.append(((float(p[0]), float(p[1])), length / 2.0 + OCCUPIED_MARGIN))
    return discs


def _run_delete(state: SceneState, config: EditConfig) -> None:
    target = config.target or ""
    params = config.parameters
    matched: list[PlacedVehicle] = []
    if target == "all":
        matched = list(state.vehicles)
    else:
        for v in state.vehicles:
            if params.get("color") and v.attributes.get("color") != params["color"]:
                continue
            if params.get("type") and params["type"].lower() not in \
                    str(v.attributes.get("type", "")).lower():
                continue
            matched.append(v)
        if "added" in target:
            try:
                iid = dsl.resolve_reference(target, state)
                matched = [v for v in state.vehicles if v.instance_id == iid]
            except dsl.ReferenceError:
                pass
    for v in matched:
        state.vehicles.remove(v)
        state.deleted_ids.add(v.instance_id)


def _run_asset(session: Session, state: SceneState, config: EditConfig) -> None:
    request = {k: config.parameters[k] for k in ("type", "color")
               if k in config.parameters}
    record, needs_recolor = match_asset(request, session.bank)
    if needs_recolor:
        record = recolor(record, config.parameters["color"])
    config.parameters["asset_id"] = record.id


def _run_motion(session: Session, state: SceneState, config: EditConfig,
                round_no: int, index: int) -> None:
    seed = int(np.random.default_rng([session.seed, round_no, index])
               .integers(2 ** 31))
    if config.action is EditAction.REVISE:
        _run_revise(session, state, config, seed)
        return

    attrs = dsl.extract_motion_attributes(config)
    ego = _ego_pose(state)
    cropped = crop_map(state.lane_map, ego)
    occupied = _occupied_discs(state, ego)

    relation = config.parameters.get("relation")
    if relation:
        # relation poses are stated in the world frame of the referenced car
        wx, wy, wh = _relative_pose(state, relation, attrs)
        inv = ego.inverse()
        p = inv.rotation @ np.array([wx, wy, 0.0]) + inv.translation
        position, heading = (float(p[0]), float(p[1])), wrap_angle(
            wh - _ego_heading(ego))
    else:
        query = PlacementQuery(attrs, occupied, seed)
        position, heading = place_vehicle(query, cropped)

    trajectory = plan_motion((position, heading), attrs, cropped, seed)
    position, heading, trajectory = _to_world(ego, position, heading, trajectory)

    record = next((a for a in session.bank
                   if a.id == config.parameters.get("asset_id")), None)
    instance_id = session.next_instance_id()
    config.parameters["instance_id"] = instance_id
    attributes = {
        "type": config.parameters.get("type", "car"),
        "speed": attrs.speed,
    }
    if config.parameters.get("color"):
        attributes["color"] = config.parameters["color"]
    if record is not None:
        attributes["length"] = record.dimensions[0]
        attributes["rgb"] = list(record.color)
    state.vehicles.append(PlacedVehicle(
        instance_id=instance_id,
        asset_id=config.parameters.get("asset_id", "unknown"),
        pose=(position[0], position[1], wrap_angle(heading)),
        trajectory=trajectory,
        attributes=attributes,
    ))


def _ego_heading(ego: Pose6D) -> float:
    return math.atan2(ego.rotation[1, 0], ego.rotation[0, 0])


def _to_world(ego: Pose6D, position, heading, trajectory):
    """Map an ego-frame placement and trajectory back into the world frame."""
    eh = _ego_heading(ego)
    if np.allclose(ego.matrix(), np.eye(4)):
        return position, heading, trajectory
    p = ego.rotation @ np.array([position[0], position[1], 0.0]) + ego.translation
    new_pos = (float(p[0]), float(p[1]))
    new_heading = wrap_angle(heading + eh)
    if trajectory is not None:
        samples = []
        for t, x, y, h in trajectory.samples:
            q = ego.rotation @ np.array([x, y, 0.0]) + ego.translation
            samples.append((t, float(q[0]), float(q[1]), wrap_angle(h + eh)))
        trajectory = type(trajectory)(samples, trajectory.dt)
    return new_pos, new_heading, trajectory


def _relative_pose(state: SceneState, relation: dict,
                   attrs: MotionAttributes):
    ref_id = dsl.resolve_reference(relation["ref"], state)
    ref = state.vehicle(ref_id)
    x, y, heading = ref.pose
    c, s = math.cos(heading), math.sin(heading)
    kind = relation["kind"]
    if kind == "behind":
        dx, dy = -CHASE_GAP, 0.0
        attrs.speed = float(ref.attributes.get("speed", attrs.speed))
    elif kind == "front_of":
        dx, dy = CHASE_GAP, 0.0
    elif kind == "left_of":
        dx, dy = 0.0, LATERAL_GAP
    elif kind == "right_of":
        dx, dy = 0.0, -LATERAL_GAP
    else:
        raise ValueError(f"unknown relation kind {kind!r}")
    if attrs.driving_direction == "toward_ego":
        # the relation pins the position; an explicit direction still wins
        heading = wrap_angle(heading + math.pi)
    return (x + c * dx - s * dy, y + s * dx + c * dy, heading)


def _run_revise(session: Session, state: SceneState, config: EditConfig,
                seed: int) -> None:
    iid = dsl.resolve_reference(config.target or "the added car", state)
    vehicle = state.vehicle(iid)
    params = config.parameters
    if params.get("color"):
        vehicle.attributes["color"] = params["color"]
    if params.get("action") or params.get("speed"):
        attrs = MotionAttributes(
            speed=float(params.get("speed",
                                   vehicle.attributes.get("speed", 8.0))),
            action=params.get("action", "straightforward"),
        )
        ego = _ego_pose(state)
        cropped = crop_map(state.lane_map, ego)
        vehicle.trajectory = plan_motion(
            ((vehicle.pose[0], vehicle.pose[1]), vehicle.pose[2]),
            attrs, cropped, seed)
        vehicle.attributes["speed"] = attrs.speed
    config.parameters["instance_id"] = iid


def _run_view(state: SceneState, config: EditConfig) -> None:
    p = config.parameters
    delta = ViewDelta(
        translation=(float(p.get("forward", 0.0)),
                     float(p.get("left", 0.0)),
                     float(p.get("up", 0.0))),
        rotation=(math.radians(float(p.get("yaw_deg", 0.0))),
                  math.radians(float(p.get("pitch_deg", 0.0))),
                  math.radians(float(p.get("roll_deg", 0.0)))),
    )
    for cam in state.rig.cameras:
        cam.extrinsic = apply_view_delta(cam.extrinsic, delta)


def _dims_for(session: Session, vehicle: PlacedVehicle):
    record = next((a for a in session.bank if a.id == vehicle.asset_id), None)
    if record is not None:
        return record.dimensions
    return (4.5, 1.9, 1.5)
