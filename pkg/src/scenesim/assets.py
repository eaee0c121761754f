"""Asset metadata bank: normalization, attribute matching, recolor.

Meshes are referenced by path only; this module owns the metadata contract
(dimensions in meters, bottom-center origin, +x facing, "car_paint"
material) that placements and exports rely on.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Optional

COLOR_TOLERANCE = 0.2   # max per-channel RGB distance counted as a color match
TYPE_WEIGHT = 2
COLOR_WEIGHT = 1
PLAUSIBLE_LENGTH = (1.0, 25.0)  # m

# CSS basic colors (linear-ish [0,1] RGB), used at the command boundary
CSS_BASIC_COLORS = {
    "black": (0.0, 0.0, 0.0),
    "silver": (0.75, 0.75, 0.75),
    "gray": (0.5, 0.5, 0.5),
    "white": (1.0, 1.0, 1.0),
    "maroon": (0.5, 0.0, 0.0),
    "red": (1.0, 0.0, 0.0),
    "purple": (0.5, 0.0, 0.5),
    "fuchsia": (1.0, 0.0, 1.0),
    "green": (0.0, 0.5, 0.0),
    "lime": (0.0, 1.0, 0.0),
    "olive": (0.5, 0.5, 0.0),
    "yellow": (1.0, 1.0, 0.0),
    "navy": (0.0, 0.0, 0.5),
    "blue": (0.0, 0.0, 1.0),
    "teal": (0.0, 0.5, 0.5),
    "aqua": (0.0, 1.0, 1.0),
    "orange": (1.0, 0.65, 0.0),
}


class AssetError(Exception):
    pass


@dataclass
class AssetRecord:
    id: str
    type: str
    color: tuple[float, float, float]
    dimensions: tuple[float, float, float]  # length, width, height (m)
    origin_at_bottom_center: bool = True
    faces_plus_x: bool = True
    paint_material: str = "car_paint"
    mesh_path: Optional[str] = None
    repair_notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id, "type": self.type, "color": list(self.color),
            "dimensions": list(self.dimensions),
            "origin_at_bottom_center": self.origin_at_bottom_center,
            "faces_plus_x": self.faces_plus_x,
            "paint_material": self.paint_material,
            "mesh_path": self.mesh_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AssetRecord":
        return cls(id=d["id"], type=d["type"], color=tuple(d["color"]),
                   dimensions=tuple(d["dimensions"]),
                   origin_at_bottom_center=d.get("origin_at_bottom_center", True),
                   faces_plus_x=d.get("faces_plus_x", True),
                   paint_material=d.get("paint_material", "car_paint"),
                   mesh_path=d.get("mesh_path"))


def normalize_asset(record: AssetRecord) -> AssetRecord:
    """Assert/repair the normalization flags; flag implausible dimensions."""
    if not record.dimensions or len(record.dimensions) != 3:
        raise AssetError(f"asset {record.id}: missing dimensions, unrepairable")
    length = record.dimensions[0]
    if not (PLAUSIBLE_LENGTH[0] <= length <= PLAUSIBLE_LENGTH[1]):
        raise AssetError(
            f"asset {record.id}: length {length} m outside plausible bounds "
            f"{PLAUSIBLE_LENGTH} (wrong units?)")
    out = dataclasses.replace(record, repair_notes=list(record.repair_notes))
    if not out.origin_at_bottom_center:
        out.origin_at_bottom_center = True
        out.repair_notes.append("origin moved to bottom center")
    if not out.faces_plus_x:
        out.faces_plus_x = True
        out.repair_notes.append("reoriented to face +x")
    if out.paint_material != "car_paint":
        out.paint_material = "car_paint"
        out.repair_notes.append("paint material renamed to car_paint")
    return out


def match_asset(request: dict, bank: list[AssetRecord]):
    """Score-based match: 2 points for type, 1 for color within tolerance.

    Ties break lexicographically by id. Returns (record, needs_recolor).
    """
    if not bank:
        raise AssetError("asset bank is empty")
    want_type = request.get("type")
    want_color = request.get("color")
    if isinstance(want_color, str):
        want_color = CSS_BASIC_COLORS.get(want_color.lower())

    def score(rec: AssetRecord) -> int:
        s = 0
        if want_type and rec.type.lower() == want_type.lower():
            s += TYPE_WEIGHT
        if want_color is not None and _color_close(rec.color, want_color):
            s += COLOR_WEIGHT
        return s

    best = sorted(bank, key=lambda r: (-score(r), r.id))[0]
    needs_recolor = (want_color is not None
                     and not _color_close(best.color, want_color))
    return best, needs_recolor


def _color_close(a, b, tol: float = COLOR_TOLERANCE) -> bool:
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def recolor(record: AssetRecord, color) -> AssetRecord:
    """Change only the base color; every other field stays identical."""
    if not record.paint_material:
        raise AssetError(f"asset {record.id}: no paint material to recolor")
    if isinstance(color, str):
        try:
            color = CSS_BASIC_COLORS[color.lower()]
        except KeyError:
            raise AssetError(f"unknown color name {color!r}") from None
    return dataclasses.replace(record, color=tuple(float(c) for c in color))


def load_bank(path: str) -> list[AssetRecord]:
    with open(path) as fh:
        return [AssetRecord.from_dict(d) for d in json.load(fh)]


def default_bank() -> list[AssetRecord]:
    """Small built-in bank used by the demo scene and tests.

    Set SCENESIM_ASSET_BANK to point the whole process at another bank file.
    """
    override = os.environ.get("SCENESIM_ASSET_BANK")
    if override:
        return load_bank(override)
    from importlib.resources import files
    data = files("scenesim").joinpath("data/asset_bank.json").read_text()
    return [AssetRecord.from_dict(d) for d in json.loads(data)]
