"""Skydome lighting machinery around the (external) learned encoder/decoder.

Covers the deterministic pieces: spherical-Gaussian peak maps, peak residual
injection into a decoded panorama, multi-camera latent fusion, the two loss
stacks, and the white-balance training augmentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import equirect_grid
from .photometry import oetf
from .scene import Pose6D

LOBE_SHARPNESS = 100.0
PEAK_THRESHOLD = 0.9

STAGE1_WEIGHTS = (1.0, 0.1, 2.0, 0.2)          # dir, int, hdr_recon, ldr_recon
STAGE2_WEIGHTS = (0.5, 0.25, 0.005, 0.1, 0.2)  # dir, int, content, hdr, ldr


@dataclass
class SkyLatent:
    peak_direction: np.ndarray   # unit 3-vector
    peak_intensity: np.ndarray   # HDR RGB >= 0
    content: np.ndarray          # 64-vector

    def __post_init__(self):
        self.peak_direction = np.asarray(self.peak_direction, dtype=float).reshape(3)
        self.peak_intensity = np.asarray(self.peak_intensity, dtype=float).reshape(3)
        self.content = np.asarray(self.content, dtype=float).reshape(-1)
        n = np.linalg.norm(self.peak_direction)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"peak_direction must be unit norm (got {n})")
        if np.any(self.peak_intensity < 0):
            raise ValueError("peak_intensity must be nonnegative")


@dataclass
class SkyMaps:
    m_dir: np.ndarray   # h x w
    m_int: np.ndarray   # h x w x 3
    m_pe: np.ndarray    # h x w x 3 unit directions

    def decoder_input(self) -> np.ndarray:
        """Channel concatenation (pe | dir | int), h x w x 7."""
        return np.concatenate([self.m_pe, self.m_dir[..., None], self.m_int], axis=-1)


def build_sky_maps(latent: SkyLatent, h: int, w: int) -> SkyMaps:
    """Per-pixel peak-direction lobe, gated peak intensity, and direction map."""
    if h < 2 or w < 2:
        raise ValueError("panorama resolution must be at least 2x2")
    dirs = equirect_grid(h, w)
    cos = dirs @ latent.peak_direction
    m_dir = np.exp(LOBE_SHARPNESS * (cos - 1.0))
    m_int = np.where((m_dir > PEAK_THRESHOLD)[..., None], latent.peak_intensity, 0.0)
    return SkyMaps(m_dir=m_dir, m_int=m_int, m_pe=dirs)


def inject_peak_residual(decoded: np.ndarray, maps: SkyMaps) -> np.ndarray:
    """Substitute the decoded panorama with M_dir * M_int where M_int != 0."""
    decoded = np.asarray(decoded, dtype=float)
    if decoded.shape != maps.m_int.shape:
        raise ValueError(f"shape mismatch: {decoded.shape} vs {maps.m_int.shape}")
    peak = maps.m_dir[..., None] * maps.m_int
    at_peak = np.any(maps.m_int != 0.0, axis=-1)
    return np.where(at_peak[..., None], peak, decoded)


def fuse_latents(latents: list[SkyLatent], extrinsics: list[Pose6D]) -> SkyLatent:
    """Fuse per-camera latents into a front-camera-frame latent.

    Peak directions are rotated to the front camera's frame (index 0) and
    averaged; intensities are arithmetic-averaged; content vectors are fused
    by scaled dot-product attention with identity projections, query = front
    content, keys = values = all contents.
    """
    if not latents:
        raise ValueError("need at least one latent")
    if len(latents) != len(extrinsics):
        raise ValueError("latents and extrinsics must have equal length")

    r_front_inv = extrinsics[0].rotation.T
    rotated = np.array([
        r_front_inv @ (ext.rotation @ lat.peak_direction)
        for lat, ext in zip(latents, extrinsics)
    ])
    mean_dir = rotated.mean(axis=0)
    norm = np.linalg.norm(mean_dir)
    if norm < 1e-12:
        raise ValueError("degenerate fusion: direction average is zero")
    fused_dir = mean_dir / norm

    fused_int = np.mean([lat.peak_intensity for lat in latents], axis=0)

    contents = np.stack([lat.content for lat in latents])  # N x 64
    q = latents[0].content
    scores = contents @ q / math.sqrt(q.shape[0])
    weights = np.exp(scores - scores.max())
    weights /= weights.sum()
    fused_content = weights @ contents

    return SkyLatent(fused_dir, fused_int, fused_content)


# --- losses -----------------------------------------------------------------

def _angular_error(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for v in (a, b):
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise ValueError("direction vectors must be unit norm")
    return float(np.arccos(np.clip(a @ b, -1.0, 1.0)))


def _log_encode(x: np.ndarray) -> np.ndarray:
    return np.log1p(np.asarray(x, dtype=float))


def peak_direction_loss(pred_dir, truth_dir) -> float:
    return _angular_error(pred_dir, truth_dir)


def peak_intensity_loss(pred_int, truth_int) -> float:
    d = _log_encode(pred_int) - _log_encode(truth_int)
    return float(np.sum(d * d))


def hdr_recon_loss(pred_hdr: np.ndarray, truth_hdr: np.ndarray) -> float:
    d = _log_encode(pred_hdr) - _log_encode(truth_hdr)
    return float(np.mean(d * d))


def ldr_recon_loss(pred_hdr: np.ndarray, truth_ldr: np.ndarray) -> float:
    return float(np.mean(np.abs(oetf(np.asarray(pred_hdr, float)) - truth_ldr)))


def content_loss(pred_content, truth_content) -> float:
    return float(np.mean(np.abs(np.asarray(pred_content, float)
                                - np.asarray(truth_content, float))))


@dataclass
class SkyLossReport:
    components: dict[str, float] = field(default_factory=dict)
    total: float = 0.0


def sky_losses_stage1(pred: dict, truth: dict) -> SkyLossReport:
    """Reconstruction-stage losses: direction, intensity, HDR and LDR maps."""
    l_dir = peak_direction_loss(pred["dir"], truth["dir"])
    l_int = peak_intensity_loss(pred["int"], truth["int"])
    l_hdr = hdr_recon_loss(pred["hdr"], truth["hdr"])
    l_ldr = ldr_recon_loss(pred["hdr"], truth["ldr"])
    w = STAGE1_WEIGHTS
    total = w[0] * l_dir + w[1] * l_int + w[2] * l_hdr + w[3] * l_ldr
    return SkyLossReport(
        {"dir": l_dir, "int": l_int, "hdr_recon": l_hdr, "ldr_recon": l_ldr}, total)


def sky_losses_stage2(pred: dict, truth: dict) -> SkyLossReport:
    """Multi-camera-stage losses: stage-1 set plus the content L1 term."""
    l_dir = peak_direction_loss(pred["dir"], truth["dir"])
    l_int = peak_intensity_loss(pred["int"], truth["int"])
    l_content = content_loss(pred["content"], truth["content"])
    l_hdr = hdr_recon_loss(pred["hdr"], truth["hdr"])
    l_ldr = ldr_recon_loss(pred["hdr"], truth["ldr"])
    w = STAGE2_WEIGHTS
    total = (w[0] * l_dir + w[1] * l_int + w[2] * l_content
             + w[3] * l_hdr + w[4] * l_ldr)
    return SkyLossReport(
        {"dir": l_dir, "int": l_int, "content": l_content,
         "hdr_recon": l_hdr, "ldr_recon": l_ldr}, total)


def stage1_total(l_dir: float, l_int: float, l_hdr: float, l_ldr: float) -> float:
    w = STAGE1_WEIGHTS
    return w[0] * l_dir + w[1] * l_int + w[2] * l_hdr + w[3] * l_ldr


def stage2_total(l_dir: float, l_int: float, l_content: float,
                 l_hdr: float, l_ldr: float) -> float:
    w = STAGE2_WEIGHTS
    return (w[0] * l_dir + w[1] * l_int + w[2] * l_content
            + w[3] * l_hdr + w[4] * l_ldr)


# --- augmentation -----------------------------------------------------------

def apply_white_balance(panorama: np.ndarray, blue_gain: float,
                        red_div: float) -> np.ndarray:
    """Blue channel scaled up, red channel scaled down, green untouched."""
    out = np.asarray(panorama, dtype=float).copy()
    out[..., 0] /= red_div
    out[..., 2] *= blue_gain
    return out


def white_balance_augment(panorama: np.ndarray, seed: int) -> np.ndarray:
    """Seeded white-balance jitter with factors drawn from Uniform[1.2, 1.3]."""
    u1, u2 = white_balance_factors(seed)
    return apply_white_balance(panorama, blue_gain=u1, red_div=u2)


def white_balance_factors(seed: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    u = rng.uniform(1.2, 1.3, size=2)
    return float(u[0]), float(u[1])
