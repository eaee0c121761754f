"""Text-to-motion: lane-map placement, destination planning, Bezier fitting
with on-road refinement, and a kinematic tracking post-process.

All planning runs in the ego frame (x forward, y left); the caller crops the
lane map around the ego before placement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .scene import LaneMap, LaneNode, Pose6D, Trajectory, wrap_angle

CROP_FORWARD = 80.0
CROP_SIDE = 20.0
OFF_ROAD_THRESHOLD = 2.0   # m, midpoint distance to nearest node midpoint
REFINE_MAX_ITERS = 5
MAX_CURVATURE = 0.2        # 1/m
DEFAULT_DT = 0.1           # s (10 Hz)
TURN_OFFSET_RANGE = (5.0, 30.0)
CHASE_GAP = 10.0           # m, "behind <ref>" placement gap


class PlanningError(Exception):
    """Raised when placement or destination planning has no feasible answer."""


SECTORS = ("front", "left_front", "right_front", "left", "right", "back")


@dataclass
class MotionAttributes:
    """Placement and movement attributes extracted from an add command."""

    distance_range: Optional[tuple[float, float]] = None
    sector: str = "front"
    driving_direction: Optional[str] = None  # toward_ego | away_from_ego
    crazy_mode: bool = False
    speed: float = 8.0
    action: str = "straightforward"
    duration: float = 4.0

    def __post_init__(self):
        if self.sector not in SECTORS:
            raise ValueError(f"unknown sector {self.sector!r}")
        if self.speed < 0:
            raise ValueError("speed must be >= 0")
        if self.distance_range is not None:
            d0, d1 = self.distance_range
            if not d0 < d1:
                raise ValueError("distance_range must satisfy d_min < d_max")


@dataclass
class PlacementQuery:
    attributes: MotionAttributes
    occupied: list[tuple[tuple[float, float], float]] = field(default_factory=list)
    seed: int = 0


def crop_map(lane_map: LaneMap, ego: Pose6D) -> LaneMap:
    """Transform nodes into the ego frame and keep those whose midpoint lies
    in the box x in [0, 80], y in [-20, 20]."""
    inv = ego.inverse()
    kept = []
    for node in lane_map.nodes:
        s = _to_ego(inv, node.start)
        e = _to_ego(inv, node.end)
        mx, my = 0.5 * (s[0] + e[0]), 0.5 * (s[1] + e[1])
        if 0.0 <= mx <= CROP_FORWARD and abs(my) <= CROP_SIDE:
            kept.append(LaneNode(s, e, node.lane_type))
    return LaneMap(kept, frame="ego")


def _to_ego(inv: Pose6D, pt: tuple[float, float]) -> tuple[float, float]:
    p = inv.rotation @ np.array([pt[0], pt[1], 0.0]) + inv.translation
    return (float(p[0]), float(p[1]))


def classify_sector(point: tuple[float, float]) -> str:
    """Bearing-based sector: front |th|<=30deg, left_front (30,80], left
    (80,135], back beyond 135; mirrored for right."""
    x, y = point
    if x == 0.0 and y == 0.0:
        raise ValueError("sector of the origin is undefined")
    theta = math.degrees(math.atan2(y, x))
    a = abs(theta)
    if a <= 30.0:
        return "front"
    if a > 135.0:
        return "back"
    side = "left" if theta > 0 else "right"
    return f"{side}_front" if a <= 80.0 else side


def place_vehicle(query: PlacementQuery, lane_map: LaneMap):
    """Pick a lane-node midpoint matching the placement attributes.

    Returns ((x, y), heading). Candidates are centerline nodes (reversed
    first under crazy mode) filtered by distance annulus, sector, driving
    direction, and occupancy; the survivor is chosen seeded-uniformly.
    """
    attrs = query.attributes
    nodes = lane_map.centerlines()
    if not nodes:
        raise PlanningError("cropped lane map has no centerline nodes")
    if attrs.crazy_mode:
        nodes = [n.reversed() for n in nodes]

    candidates = []
    for node in nodes:
        mx, my = node.midpoint
        if mx == 0.0 and my == 0.0:
            continue
        dist = math.hypot(mx, my)
        if attrs.distance_range is not None:
            d0, d1 = attrs.distance_range
            if not (d0 <= dist <= d1):
                continue
        if classify_sector((mx, my)) != attrs.sector:
            continue
        if attrs.driving_direction is not None:
            d = node.direction
            to_ego = (-mx, -my)
            dot = d[0] * to_ego[0] + d[1] * to_ego[1]
            toward = dot > 0
            if attrs.driving_direction == "toward_ego" and not toward:
                continue
            if attrs.driving_direction == "away_from_ego" and toward:
                continue
        if any(math.hypot(mx - ox, my - oy) <= r
               for (ox, oy), r in query.occupied):
            continue
        candidates.append(node)

    if not candidates:
        raise PlanningError(
            f"no feasible placement for sector={attrs.sector} "
            f"range={attrs.distance_range} direction={attrs.driving_direction}")

    rng = np.random.default_rng(query.seed)
    node = candidates[int(rng.integers(len(candidates)))]
    return node.midpoint, node.heading


def plan_destination(start: tuple[tuple[float, float], float],
                     attrs: MotionAttributes, lane_map: LaneMap,
                     seed: int = 0):
    """Destination node for the requested action.

    Straight-line actions project the start along (or against) the heading by
    speed * duration and snap to the nearest centerline midpoint; turns pick
    a seeded candidate with perpendicular offset in [5, 30] m on the turn
    side whose direction points away from the start.
    """
    (sx, sy), heading = start
    nodes = lane_map.centerlines()
    if not nodes:
        raise PlanningError("lane map has no centerline nodes")
    hx, hy = math.cos(heading), math.sin(heading)

    if attrs.action in ("straightforward", "park", "backward"):
        if attrs.action == "park":
            raw = (sx, sy)
        else:
            sign = 1.0 if attrs.action == "straightforward" else -1.0
            step = sign * attrs.speed * attrs.duration
            raw = (sx + hx * step, sy + hy * step)
        node = min(nodes, key=lambda n: _dist2(n.midpoint, raw))
        return node.midpoint, node.heading

    if attrs.action not in ("turn_left", "turn_right"):
        raise PlanningError(f"unknown movement action {attrs.action!r}")

    want_left = attrs.action == "turn_left"
    candidates = []
    for node in nodes:
        mx, my = node.midpoint
        rel = (mx - sx, my - sy)
        # signed perpendicular offset from the heading line (left positive)
        perp = hx * rel[1] - hy * rel[0]
        along = hx * rel[0] + hy * rel[1]
        if want_left and perp <= 0:
            continue
        if not want_left and perp >= 0:
            continue
        if not (TURN_OFFSET_RANGE[0] <= abs(perp) <= TURN_OFFSET_RANGE[1]):
            continue
        d = node.direction
        if d[0] * rel[0] + d[1] * rel[1] <= 0:  # must point away from start
            continue
        if along <= 0:  # behind the vehicle
            continue
        candidates.append(node)

    if not candidates:
        raise PlanningError(f"no feasible destination for {attrs.action}")
    rng = np.random.default_rng(seed)
    node = candidates[int(rng.integers(len(candidates)))]
    return node.midpoint, node.heading


def _dist2(a, b) -> float:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


# --- cubic Bezier fitting ----------------------------------------------------

@dataclass(frozen=True)
class BezierSegment:
    p0: tuple[float, float]
    p1: tuple[float, float]
    p2: tuple[float, float]
    p3: tuple[float, float]

    def point(self, t: float) -> tuple[float, float]:
        s = 1.0 - t
        x = (s ** 3 * self.p0[0] + 3 * s ** 2 * t * self.p1[0]
             + 3 * s * t ** 2 * self.p2[0] + t ** 3 * self.p3[0])
        y = (s ** 3 * self.p0[1] + 3 * s ** 2 * t * self.p1[1]
             + 3 * s * t ** 2 * self.p2[1] + t ** 3 * self.p3[1])
        return (x, y)

    def tangent(self, t: float) -> tuple[float, float]:
        s = 1.0 - t
        dx = (3 * s ** 2 * (self.p1[0] - self.p0[0])
              + 6 * s * t * (self.p2[0] - self.p1[0])
              + 3 * t ** 2 * (self.p3[0] - self.p2[0]))
        dy = (3 * s ** 2 * (self.p1[1] - self.p0[1])
              + 6 * s * t * (self.p2[1] - self.p1[1])
              + 3 * t ** 2 * (self.p3[1] - self.p2[1]))
        return (dx, dy)


def solve_bezier(p_start, dir_start, p_end, dir_end) -> BezierSegment:
    """Hermite-style control points: inner handles at L/3 along the end
    tangents, L the endpoint chord length."""
    p_start = (float(p_start[0]), float(p_start[1]))
    p_end = (float(p_end[0]), float(p_end[1]))
    if p_start == p_end:
        raise ValueError("coincident endpoints")
    ds = _unit(dir_start)
    de = _unit(dir_end)
    length = math.dist(p_start, p_end)
    p1 = (p_start[0] + length / 3.0 * ds[0], p_start[1] + length / 3.0 * ds[1])
    p2 = (p_end[0] - length / 3.0 * de[0], p_end[1] - length / 3.0 * de[1])
    return BezierSegment(p_start, p1, p2, p_end)


def _unit(v) -> tuple[float, float]:
    n = math.hypot(v[0], v[1])
    if n == 0:
        raise ValueError("zero direction vector")
    return (v[0] / n, v[1] / n)


def _nearest_midpoint_dist(pt, midpoints) -> float:
    return min(math.dist(pt, m) for m in midpoints)


@dataclass
class RefineResult:
    segments: list[BezierSegment]
    iterations: int
    off_road_remaining: int


def refine_on_road(segments: list[BezierSegment], lane_map: LaneMap,
                   max_iters: int = REFINE_MAX_ITERS,
                   threshold: float = OFF_ROAD_THRESHOLD) -> RefineResult:
    """Iteratively split segments whose midpoints stray off the lane nodes.

    A segment whose B(0.5) lies farther than `threshold` from every node
    midpoint is replaced by two children through the nearest node midpoint
    (split tangents = chord average). A split is only kept when it improves
    that segment's worst midpoint distance, so the overall worst off-road
    distance never increases.
    """
    midpoints = [n.midpoint for n in lane_map.centerlines()]
    if not midpoints:
        return RefineResult(list(segments), 0, len(segments))

    segs = list(segments)
    iters = 0
    for _ in range(max_iters):
        off = [i for i, s in enumerate(segs)
               if _nearest_midpoint_dist(s.point(0.5), midpoints) > threshold]
        if not off:
            break
        iters += 1
        new_segs: list[BezierSegment] = []
        for i, seg in enumerate(segs):
            if i not in off:
                new_segs.append(seg)
                continue
            mid = seg.point(0.5)
            parent_dist = _nearest_midpoint_dist(mid, midpoints)
            target = min(midpoints, key=lambda m: _dist2(m, mid))
            children = _split_through(seg, target)
            if children is None:
                new_segs.append(seg)
                continue
            child_dist = max(_nearest_midpoint_dist(c.point(0.5), midpoints)
                             for c in children)
            if child_dist < parent_dist:
                new_segs.extend(children)
            else:
                new_segs.append(seg)
        segs = new_segs

    remaining = sum(1 for s in segs
                    if _nearest_midpoint_dist(s.point(0.5), midpoints) > threshold)
    return RefineResult(segs, iters, remaining)


def _split_through(seg: BezierSegment, target):
    if target == seg.p0 or target == seg.p3:
        return None
    chord1 = (target[0] - seg.p0[0], target[1] - seg.p0[1])
    chord2 = (seg.p3[0] - target[0], seg.p3[1] - target[1])
    try:
        split_dir = _unit((_unit(chord1)[0] + _unit(chord2)[0],
                           _unit(chord1)[1] + _unit(chord2)[1]))
        first = solve_bezier(seg.p0, seg.tangent(0.0), target, split_dir)
        second = solve_bezier(target, split_dir, seg.p3, seg.tangent(1.0))
    except ValueError:
        return None
    return [first, second]


# --- tracking post-process ---------------------------------------------------

def track_trajectory(segments: list[BezierSegment], speed: float,
                     dt: float = DEFAULT_DT,
                     max_curvature: float = MAX_CURVATURE) -> Trajectory:
    """Arc-length resample at speed*dt spacing with curvature-limited headings.

    Heading changes per step are clipped to max_curvature * step so the
    result is kinematically feasible; endpoints are preserved.
    """
    if speed <= 0:
        raise ValueError("speed must be > 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")

    poly = _polyline(segments)
    cum = np.concatenate([[0.0], np.cumsum(
        np.linalg.norm(np.diff(poly, axis=0), axis=1))])
    total = float(cum[-1])
    if total < 1e-9:
        raise ValueError("degenerate zero-length path")

    step = speed * dt
    n_steps = max(1, round(total / step))
    targets = np.minimum(np.arange(n_steps + 1) * step, total)
    targets[-1] = total  # preserve the destination exactly
    xs = np.interp(targets, cum, poly[:, 0])
    ys = np.interp(targets, cum, poly[:, 1])

    headings = _limited_headings(xs, ys, max_curvature * step)
    samples = [(i * dt, float(xs[i]), float(ys[i]), headings[i])
               for i in range(len(xs))]
    return Trajectory(samples, dt)


def constant_pose_trajectory(pose: tuple[float, float, float], duration: float,
                             dt: float = DEFAULT_DT) -> Trajectory:
    """Parked vehicle: hold the pose for the requested duration."""
    n = max(1, round(duration / dt))
    x, y, h = pose
    samples = [(i * dt, x, y, h) for i in range(n + 1)]
    return Trajectory(samples, dt)


def _polyline(segments: list[BezierSegment], per_seg: int = 64) -> np.ndarray:
    pts = []
    for i, seg in enumerate(segments):
        ts = np.linspace(0.0, 1.0, per_seg + 1)
        if i > 0:
            ts = ts[1:]
        pts.extend(seg.point(t) for t in ts)
    return np.array(pts)


def _limited_headings(xs: np.ndarray, ys: np.ndarray,
                      max_step_turn: float) -> list[float]:
    n = len(xs)
    raw = []
    for i in range(n):
        j0 = max(0, i - 1)
        j1 = min(n - 1, i + 1)
        raw.append(math.atan2(ys[j1] - ys[j0], xs[j1] - xs[j0]))
    out = [raw[0]]
    for i in range(1, n):
        dh = wrap_angle(raw[i] - out[-1])
        dh = max(-max_step_turn, min(max_step_turn, dh))
        out.append(wrap_angle(out[-1] + dh))
    return out


def within_road_rate(traj: Trajectory, lane_map: LaneMap,
                     threshold: float = OFF_ROAD_THRESHOLD) -> float:
    """Fraction of samples within `threshold` of some node midpoint."""
    if not traj.samples:
        raise ValueError("empty trajectory")
    midpoints = [n.midpoint for n in lane_map.centerlines()]
    if not midpoints:
        return 0.0
    mids = np.array(midpoints)
    pts = np.array([(s[1], s[2]) for s in traj.samples])
    d = np.linalg.norm(pts[:, None, :] - mids[None, :, :], axis=-1).min(axis=1)
    return float(np.mean(d <= threshold))


def plan_motion(start: tuple[tuple[float, float], float],
                attrs: MotionAttributes, lane_map: LaneMap,
                seed: int = 0, dt: float = DEFAULT_DT) -> Trajectory:
    """Full planning pipeline: destination, Bezier fit, refinement, tracking."""
    (sx, sy), heading = start
    if attrs.action == "park" or attrs.speed == 0:
        return constant_pose_trajectory((sx, sy, heading), attrs.duration, dt)

    dest, dest_heading = plan_destination(start, attrs, lane_map, seed)
    start_dir = (math.cos(heading), math.sin(heading))
    if attrs.action == "backward":
        start_dir = (-start_dir[0], -start_dir[1])
    dest_dir = (math.cos(dest_heading), math.sin(dest_heading))
    if math.dist((sx, sy), dest) < 1e-9:
        return constant_pose_trajectory((sx, sy, heading), attrs.duration, dt)

    seg = solve_bezier((sx, sy), start_dir, dest, dest_dir)
    refined = refine_on_road([seg], lane_map)
    return track_trajectory(refined.segments, attrs.speed, dt)
