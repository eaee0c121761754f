"""Analytic radiance-density fields used in place of a trained scene network.

Each field is a deterministic, vectorized query (positions, directions) ->
(HDR radiance, density) with an axis-aligned bounding box. These stand in
for the learned background model so the rendering math can be exercised
against closed-form expectations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class Aabb:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float).reshape(3)
        self.hi = np.asarray(self.hi, dtype=float).reshape(3)

    def intersect(self, origins: np.ndarray, dirs: np.ndarray):
        """Slab test; returns (t_near, t_far) per ray, t_near >= 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(dirs != 0.0, 1.0 / dirs, np.inf)
        t0 = (self.lo - origins) * inv
        t1 = (self.hi - origins) * inv
        # rays parallel to a slab: inside -> (-inf, inf), outside -> miss
        parallel = dirs == 0.0
        inside = (origins >= self.lo) & (origins <= self.hi)
        t0 = np.where(parallel, np.where(inside, -np.inf, np.inf), t0)
        t1 = np.where(parallel, np.where(inside, np.inf, -np.inf), t1)
        tn = np.maximum(np.minimum(t0, t1).max(axis=-1), 0.0)
        tf = np.maximum(t0, t1).min(axis=-1)
        return tn, tf


@dataclass
class RadianceField:
    """Pluggable field: query(points (N,3), dirs (N,3)) -> (e (N,3), sigma (N,))."""

    query: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    bounds: Aabb
    name: str = "field"


def vacuum(extent: float = 100.0) -> RadianceField:
    def q(points, dirs):
        n = points.shape[0]
        return np.zeros((n, 3)), np.zeros(n)
    return RadianceField(q, Aabb([-extent] * 3, [extent] * 3), "vacuum")


def homogeneous_box(sigma: float = 1.0, radiance=(1.0, 1.0, 1.0),
                    lo=(-1.0, -1.0, -1.0), hi=(1.0, 1.0, 1.0)) -> RadianceField:
    rad = np.asarray(radiance, dtype=float)
    box = Aabb(lo, hi)

    def q(points, dirs):
        inside = np.all((points >= box.lo) & (points <= box.hi), axis=-1)
        e = np.where(inside[:, None], rad, 0.0)
        s = np.where(inside, sigma, 0.0)
        return e, s
    return RadianceField(q, box, "homogeneous_box")


def two_slab(sigma: float = 5.0, radiance=(2.0, 1.0, 0.5),
             x_near: float = 5.0, x_far: float = 8.0,
             extent: float = 50.0) -> RadianceField:
    """Opaque emissive wall filling x in [x_near, x_far]; vacuum elsewhere."""
    rad = np.asarray(radiance, dtype=float)
    box = Aabb([-extent] * 3, [extent] * 3)

    def q(points, dirs):
        inwall = (points[:, 0] >= x_near) & (points[:, 0] <= x_far)
        e = np.where(inwall[:, None], rad, 0.0)
        s = np.where(inwall, sigma, 0.0)
        return e, s
    return RadianceField(q, box, "two_slab")


def radial_emitter(center=(0.0, 0.0, 0.0), falloff: float = 0.1,
                   sigma: float = 0.3, extent: float = 20.0) -> RadianceField:
    """Radiance decaying with distance from a center; soft participating medium."""
    c = np.asarray(center, dtype=float)
    box = Aabb(c - extent, c + extent)

    def q(points, dirs):
        r = np.linalg.norm(points - c, axis=-1)
        brightness = np.exp(-falloff * r)
        e = np.stack([brightness, 0.8 * brightness, 0.6 * brightness], axis=-1)
        s = np.full(points.shape[0], sigma)
        return e, s
    return RadianceField(q, box, "radial_emitter")


def demo_street_field() -> RadianceField:
    """Small street-like field for demo frames: ground slab, two building
    blocks, and a bright sky tint for upward rays."""
    box = Aabb([-20.0, -40.0, -2.0], [120.0, 40.0, 30.0])
    blocks = [
        # (lo, hi, radiance, sigma)
        (np.array([-20.0, -40.0, -2.0]), np.array([120.0, 40.0, 0.0]),
         np.array([0.25, 0.24, 0.22]), 8.0),                      # road/ground
        (np.array([10.0, 8.0, 0.0]), np.array([60.0, 20.0, 12.0]),
         np.array([0.5, 0.35, 0.25]), 6.0),                       # left building
        (np.array([20.0, -22.0, 0.0]), np.array([80.0, -9.0, 9.0]),
         np.array([0.3, 0.4, 0.5]), 6.0),                         # right building
    ]

    def q(points, dirs):
        n = points.shape[0]
        e = np.zeros((n, 3))
        s = np.zeros(n)
        for lo, hi, rad, sg in blocks:
            inside = np.all((points >= lo) & (points <= hi), axis=-1)
            e[inside] = rad
            s[inside] = sg
        return e, s
    return RadianceField(q, box, "demo_street")


_REGISTRY = {
    "vacuum": vacuum,
    "homogeneous_box": homogeneous_box,
    "two_slab": two_slab,
    "radial_emitter": radial_emitter,
    "demo_street": demo_street_field,
}


def field_by_name(name: str) -> RadianceField:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown field {name!r}; known: {sorted(_REGISTRY)}") from None
