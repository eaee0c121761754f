"""Location-specific environment lighting: surround capture and sky blending.

A probe renders every equirectangular direction from an object's position
through the radiance field (exposure-free: an environment map is scene
radiance, not a camera measurement), keeping the residual transmittance per
direction so the skydome can shine through wherever the scene is open.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import RadianceField
from .geometry import equirect_grid
from .photometry import RaySampling, render_rays
from .scene import ExposureStats

_UNIT_STATS = ExposureStats(mean=1.0, std=0.0, epsilon=0.0)  # f == 1


@dataclass
class LightingProbe:
    position: np.ndarray
    surround: np.ndarray        # h x w x 3 HDR
    transmittance: np.ndarray   # h x w in [0, 1]

    @property
    def resolution(self) -> tuple[int, int]:
        return self.transmittance.shape


def capture_surround(position, field: RadianceField, sampling: RaySampling,
                     h: int, w: int) -> LightingProbe:
    """Render the full sphere of directions from `position`."""
    if h < 2 or w < 2:
        raise ValueError("probe resolution must be at least 2x2")
    position = np.asarray(position, dtype=float).reshape(3)
    dirs = equirect_grid(h, w).reshape(-1, 3)
    origins = np.broadcast_to(position, dirs.shape)
    hdr, trans = render_rays(origins, dirs, field, sampling, 1.0, _UNIT_STATS)
    return LightingProbe(position, hdr.reshape(h, w, 3), trans.reshape(h, w))


def blend_environment(probe: LightingProbe, sky: np.ndarray) -> np.ndarray:
    """Per-direction blend: surround + transmittance * sky."""
    sky = np.asarray(sky, dtype=float)
    h, w = probe.resolution
    if sky.shape[:2] != (h, w):
        sky = resample_equirect(sky, h, w)
    if sky.shape[:2] != (h, w):
        raise ValueError(f"sky resolution {sky.shape[:2]} does not match probe {(h, w)}")
    return probe.surround + probe.transmittance[..., None] * sky


def resample_equirect(img: np.ndarray, h: int, w: int) -> np.ndarray:
    """Bilinear resample of an equirect image to h x w (azimuth wraps)."""
    img = np.asarray(img, dtype=float)
    sh, sw = img.shape[:2]
    rows = (np.arange(h) + 0.5) * sh / h - 0.5
    cols = (np.arange(w) + 0.5) * sw / w - 0.5
    r0 = np.clip(np.floor(rows).astype(int), 0, sh - 1)
    r1 = np.clip(r0 + 1, 0, sh - 1)
    fr = np.clip(rows - r0, 0.0, 1.0)
    c0 = np.floor(cols).astype(int) % sw
    c1 = (c0 + 1) % sw
    fc = cols - np.floor(cols)

    top = (img[r0][:, c0] * (1 - fc)[None, :, None]
           + img[r0][:, c1] * fc[None, :, None])
    bot = (img[r1][:, c0] * (1 - fc)[None, :, None]
           + img[r1][:, c1] * fc[None, :, None])
    return top * (1 - fr)[:, None, None] + bot * fr[:, None, None]


def shade_lambertian(normal, albedo, env: np.ndarray) -> np.ndarray:
    """Diffuse shading against an equirect environment map.

    Quadrature: per-pixel solid angle (2pi/w)(pi/h) sin(theta), cosine-clipped
    to the normal's hemisphere; a uniform sky of radiance L yields albedo * L.
    """
    normal = np.asarray(normal, dtype=float).reshape(3)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-6:
        raise ValueError("normal must be unit length")
    albedo = np.asarray(albedo, dtype=float).reshape(3)
    env = np.asarray(env, dtype=float)
    h, w = env.shape[:2]

    dirs = equirect_grid(h, w)
    cos = np.maximum(dirs @ normal, 0.0)
    theta = (np.arange(h) + 0.5) * math.pi / h
    d_omega = (2.0 * math.pi / w) * (math.pi / h) * np.sin(theta)
    weights = cos * d_omega[:, None]
    irradiance = np.tensordot(weights, env, axes=([0, 1], [0, 1]))
    return albedo / math.pi * irradiance
