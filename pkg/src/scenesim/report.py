"""Report figures and delimited outputs for CLI runs."""

from __future__ import annotations

import csv
import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .scene import LaneType, SceneState


def write_trajectory_csvs(state: SceneState, out_dir: str) -> list[str]:
    """One CSV per vehicle trajectory: t, x, y, heading."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for v in state.vehicles:
        if v.trajectory is None:
            continue
        path = os.path.join(out_dir, f"trajectory_{v.instance_id}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "y", "heading"])
            writer.writerows(v.trajectory.to_rows())
        paths.append(path)
    return paths


def topdown_figure(state: SceneState, path: str, title: str = "scene") -> str:
    """Top-down overview: lanes, vehicles, trajectories, camera frustum."""
    fig, ax = plt.subplots(figsize=(9, 6))
    for node in state.lane_map.nodes:
        color = "0.6" if node.lane_type is LaneType.CENTERLINE else "0.85"
        ax.plot([node.start[0], node.end[0]], [node.start[1], node.end[1]],
                color=color, lw=1.2, zorder=1)

    for v in state.vehicles:
        if v.instance_id in state.deleted_ids:
            continue
        x, y, h = v.pose
        length = float(v.attributes.get("length", 4.5))
        width = 1.9
        rect = _oriented_rect(x, y, h, length, width)
        ax.fill(rect[:, 0], rect[:, 1], color="tab:red", alpha=0.7, zorder=3)
        ax.annotate(v.instance_id, (x, y), fontsize=7, zorder=4)
        if v.trajectory is not None:
            xs = [s[1] for s in v.trajectory.samples]
            ys = [s[2] for s in v.trajectory.samples]
            ax.plot(xs, ys, "-", color="tab:blue", lw=1.0, zorder=2)

    cam = state.rig.reference
    origin = cam.extrinsic.translation
    fov = 2.0 * math.atan(cam.image_size[0] / (2.0 * cam.fx))
    fwd = cam.extrinsic.rotation @ np.array([0.0, 0.0, 1.0])
    yaw = math.atan2(fwd[1], fwd[0])
    for sign in (-1, 1):
        a = yaw + sign * fov / 2
        ax.plot([origin[0], origin[0] + 15 * math.cos(a)],
                [origin[1], origin[1] + 15 * math.sin(a)],
                color="tab:green", lw=1.0, zorder=2)
    ax.plot(origin[0], origin[1], "^", color="tab:green", ms=9, zorder=4)

    ax.set_aspect("equal")
    ax.set_xlabel("x (m, forward)")
    ax.set_ylabel("y (m, left)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _oriented_rect(x, y, heading, length, width) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    pts = []
    for dx, dy in [(-length / 2, -width / 2), (length / 2, -width / 2),
                   (length / 2, width / 2), (-length / 2, width / 2)]:
        pts.append((x + c * dx - s * dy, y + s * dx + c * dy))
    return np.array(pts)
