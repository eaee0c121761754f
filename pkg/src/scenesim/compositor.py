"""Foreground/background composition with patch-depth occlusion.

The background depth comes from sparse samples averaged per segmentation
patch; a foreground pixel is shown only where its depth beats the patch
depth under it (unknown patches lose to the foreground, which is near-field
in practice). Shadows darken the background before the alpha-over.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from PIL import Image

UNKNOWN_DEPTH = -1.0


@dataclass
class ForegroundLayer:
    rgb: np.ndarray      # h x w x 3
    alpha: np.ndarray    # h x w in [0, 1]
    depth: np.ndarray    # h x w (m), inf where empty
    shadow: np.ndarray   # h x w in [0, 1], 1 = no shadow

    def __post_init__(self):
        self.rgb = np.asarray(self.rgb, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.depth = np.asarray(self.depth, dtype=float)
        self.shadow = np.asarray(self.shadow, dtype=float)
        if np.any(self.alpha < 0) or np.any(self.alpha > 1):
            raise ValueError("alpha must lie in [0, 1]")
        covered = self.alpha > 0
        if np.any(self.depth[covered] <= 0):
            raise ValueError("depth must be > 0 wherever alpha > 0")

    @classmethod
    def empty(cls, h: int, w: int) -> "ForegroundLayer":
        return cls(np.zeros((h, w, 3)), np.zeros((h, w)),
                   np.full((h, w), np.inf), np.ones((h, w)))


@dataclass
class BackgroundDepth:
    sparse: list[tuple[tuple[int, int], float]]  # ((u, v), depth)
    masks: Optional[np.ndarray] = None           # h x w integer labels
    patch_depth_map: dict[int, float] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> "BackgroundDepth":
        return cls(sparse=[])


def patch_depths(sparse, masks: np.ndarray) -> dict[int, float]:
    """Mean sparse depth per segmentation label; labels without samples map
    to UNKNOWN_DEPTH."""
    masks = np.asarray(masks)
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    h, w = masks.shape
    for (u, v), depth in sparse:
        if depth <= 0:
            raise ValueError(f"sparse depth at ({u}, {v}) must be > 0")
        if not (0 <= v < h and 0 <= u < w):
            continue
        label = int(masks[v, u])
        sums[label] = sums.get(label, 0.0) + depth
        counts[label] = counts.get(label, 0) + 1
    out = {}
    for label in np.unique(masks):
        label = int(label)
        if label in counts:
            out[label] = sums[label] / counts[label]
        else:
            out[label] = UNKNOWN_DEPTH
    return out


def composite(fg: ForegroundLayer, bg_rgb: np.ndarray,
              bg_depth: Optional[BackgroundDepth] = None) -> np.ndarray:
    """Depth-tested alpha-over of the foreground onto the shadowed background."""
    bg_rgb = np.asarray(bg_rgb, dtype=float)
    h, w = bg_rgb.shape[:2]
    if fg.rgb.shape[:2] != (h, w):
        raise ValueError(f"size mismatch: fg {fg.rgb.shape[:2]} vs bg {(h, w)}")

    shadowed = bg_rgb * fg.shadow[..., None]

    if bg_depth is None or bg_depth.masks is None:
        bg_d = np.full((h, w), UNKNOWN_DEPTH)
    else:
        table = bg_depth.patch_depth_map or patch_depths(bg_depth.sparse,
                                                         bg_depth.masks)
        bg_d = np.vectorize(lambda lbl: table.get(int(lbl), UNKNOWN_DEPTH))(
            bg_depth.masks).astype(float)

    fg_wins = (fg.alpha > 0) & ((bg_d == UNKNOWN_DEPTH) | (fg.depth < bg_d))
    a = np.where(fg_wins, fg.alpha, 0.0)[..., None]
    return a * fg.rgb + (1.0 - a) * shadowed


def composite_reference(fg: ForegroundLayer, bg_rgb: np.ndarray,
                        bg_depth: Optional[BackgroundDepth] = None) -> np.ndarray:
    """Per-pixel loop oracle for the vectorized composite (tests only)."""
    bg_rgb = np.asarray(bg_rgb, dtype=float)
    h, w = bg_rgb.shape[:2]
    if bg_depth is not None and bg_depth.masks is not None:
        table = bg_depth.patch_depth_map or patch_depths(bg_depth.sparse,
                                                         bg_depth.masks)
    else:
        table = None
    out = np.zeros_like(bg_rgb)
    for v in range(h):
        for u in range(w):
            b = bg_rgb[v, u] * fg.shadow[v, u]
            a = fg.alpha[v, u]
            if a > 0:
                if table is None:
                    d_bg = UNKNOWN_DEPTH
                else:
                    d_bg = table.get(int(bg_depth.masks[v, u]), UNKNOWN_DEPTH)
                if d_bg == UNKNOWN_DEPTH or fg.depth[v, u] < d_bg:
                    out[v, u] = a * fg.rgb[v, u] + (1 - a) * b
                    continue
            out[v, u] = b
    return out


def motion_blur(rgb: np.ndarray, velocity: tuple[float, float],
                kernel: int = 5) -> np.ndarray:
    """1D directional box blur along the screen-space velocity."""
    vx, vy = velocity
    n = math.hypot(vx, vy)
    if n == 0 or kernel <= 1:
        return np.asarray(rgb, dtype=float)
    step = (vx / n, vy / n)
    rgb = np.asarray(rgb, dtype=float)
    acc = np.zeros_like(rgb)
    h, w = rgb.shape[:2]
    for i in range(kernel):
        off = i - kernel // 2
        du, dv = round(off * step[0]), round(off * step[1])
        shifted = np.roll(np.roll(rgb, dv, axis=0), du, axis=1)
        acc += shifted
    return acc / kernel


def to_srgb_u8(linear_rgb: np.ndarray) -> np.ndarray:
    from .photometry import oetf
    enc = oetf(np.clip(linear_rgb, 0.0, None))
    return np.clip(np.round(enc * 255.0), 0, 255).astype(np.uint8)


def assemble_video(frames: list[np.ndarray], fps: float, out_dir: str,
                   prefix: str = "frame") -> dict:
    """Write a numbered PNG sequence plus a JSON manifest; returns the manifest.

    Container encoding is left to external tools and never required here.
    """
    if not frames:
        raise ValueError("no frames to assemble")
    size = frames[0].shape[:2]
    for i, f in enumerate(frames):
        if f.shape[:2] != size:
            raise ValueError(f"frame {i} size {f.shape[:2]} differs from {size}")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i, f in enumerate(frames):
        img = f if f.dtype == np.uint8 else to_srgb_u8(f)
        path = os.path.join(out_dir, f"{prefix}_{i:04d}.png")
        Image.fromarray(img).save(path)
        paths.append(os.path.basename(path))
    manifest = {
        "fps": fps,
        "frame_count": len(frames),
        "duration_s": len(frames) / fps,
        "width": int(size[1]),
        "height": int(size[0]),
        "frames": paths,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
