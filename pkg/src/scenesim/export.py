"""Renderer-bridge export document and HDR image file IO.

The export JSON hands an external DCC pipeline everything it needs to render
the foreground for real: camera poses with exposure, asset placements with
colors and trajectories, and environment-map file references.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .assets import AssetRecord
from .scene import SceneState, Trajectory


def export_document(state: SceneState, bank: list[AssetRecord],
                    skydome_path: str | None = None,
                    probe_paths: dict | None = None) -> dict:
    by_id = {a.id: a for a in bank}
    assets = []
    for v in state.vehicles:
        if v.instance_id in state.deleted_ids:
            continue
        record = by_id.get(v.asset_id)
        assets.append({
            "instance_id": v.instance_id,
            "asset_id": v.asset_id,
            "mesh_path": record.mesh_path if record else None,
            "pose": list(v.pose),
            "color": (list(record.color) if record else None),
            "color_name": v.attributes.get("color"),
            "dimensions": (list(record.dimensions) if record else None),
            "trajectory": (None if v.trajectory is None else
                           {"dt": v.trajectory.dt,
                            "samples": v.trajectory.to_rows()}),
        })
    return {
        "version": 1,
        "cameras": [
            {"id": c.id, "intrinsics": list(c.intrinsics),
             "image_size": list(c.image_size),
             "extrinsic": c.extrinsic.to_dict(),
             "exposure": c.exposure}
            for c in state.rig.cameras
        ],
        "reference_camera": state.rig.reference_camera,
        "assets": assets,
        "deleted_ids": sorted(state.deleted_ids),
        "environment": {
            "skydome_path": skydome_path,
            "probes": probe_paths or {},
        },
    }


def import_placements(doc: dict) -> list[dict]:
    """Round-trip helper: export assets back to placement dicts."""
    out = []
    for a in doc["assets"]:
        traj = a.get("trajectory")
        out.append({
            "instance_id": a["instance_id"],
            "asset_id": a["asset_id"],
            "pose": tuple(a["pose"]),
            "trajectory": (None if traj is None else
                           Trajectory([tuple(s) for s in traj["samples"]],
                                      traj["dt"])),
        })
    return out


def dumps_canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


# --- portable float map (PFM) HDR files -------------------------------------

def write_pfm(path: str, image: np.ndarray) -> None:
    """Write a 32-bit float RGB image as a little-endian PFM."""
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected h x w x 3 image")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"PF\n")
        fh.write(f"{w} {h}\n".encode())
        fh.write(b"-1.0\n")  # negative scale = little endian
        fh.write(np.flipud(img).astype("<f4").tobytes())


def read_pfm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header != b"PF":
            raise ValueError(f"{path}: not a color PFM file")
        w, h = map(int, fh.readline().split())
        scale = float(fh.readline())
        data = np.frombuffer(fh.read(), dtype="<f4" if scale < 0 else ">f4")
    return np.flipud(data.reshape(h, w, 3)).astype(np.float32)


def write_transmittance(path: str, grid: np.ndarray) -> None:
    """Transmittance grid as a compact binary file: dims + float32 payload."""
    grid = np.asarray(grid, dtype=np.float32)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", *grid.shape))
        fh.write(grid.astype("<f4").tobytes())


def read_transmittance(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        h, w = struct.unpack("<II", fh.read(8))
        return np.frombuffer(fh.read(), dtype="<f4").reshape(h, w)
