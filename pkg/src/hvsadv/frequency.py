"""Per-pixel frequency estimation and the threshold mask gating perturbations.

A pixel channel's frequency is the smaller of its absolute deviations from the
mean of its vertical neighbours and from the mean of its horizontal
neighbours; the pixel's frequency is the max over its three channels. Edge and
corner pixels are ignored (frequency 0, hence never maskable).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .image import Image

# only perturb pixels whose frequency strictly exceeds this
DEFAULT_FREQUENCY_THRESHOLD = 0.01

MASK_SOURCES = ("frequency", "chroma", "luma", "composite", "full")


@dataclass(eq=False)
class FrequencyMap:
    values: np.ndarray  # (H, W) float64, >= 0; boundary ring is 0
    boundary_policy: str = "zero"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionError(f"expected (H, W) values, got shape {self.values.shape}")
        if (self.values < 0).any():
            raise ValueError("frequency values must be non-negative")


@dataclass(eq=False)
class PerturbationMask:
    """Binary per-pixel gate; 1 means the attack may touch the pixel."""

    values: np.ndarray  # (H, W) uint8 in {0, 1}
    source: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint8)
        if self.values.ndim != 2:
            raise DimensionError(f"expected (H, W) mask, got shape {self.values.shape}")
        if not np.isin(self.values, (0, 1)).all():
            raise ValueError("mask values must be exactly 0 or 1")
        if self.source not in MASK_SOURCES:
            raise ValueError(f"unknown mask source {self.source!r}")

    def __and__(self, other: "PerturbationMask") -> "PerturbationMask":
        if self.values.shape != other.values.shape:
            raise DimensionError("mask shapes differ")
        return PerturbationMask(self.values & other.values, "composite")

    @property
    def active_pixels(self) -> int:
        return int(self.values.sum())


def pixel_frequency_map(img: Image) -> FrequencyMap:
    """Estimate per-pixel frequency for every interior pixel; boundary gets 0."""
    if img.height < 3 or img.width < 3:
        raise DimensionError(
            f"frequency needs at least 3x3 pixels, got {img.height}x{img.width}"
        )
    x = img.data
    center = x[1:-1, 1:-1]
    vmean = (x[:-2, 1:-1] + x[2:, 1:-1]) / 2.0
    hmean = (x[1:-1, :-2] + x[1:-1, 2:]) / 2.0
    per_channel = np.minimum(np.abs(center - vmean), np.abs(center - hmean))
    values = np.zeros((img.height, img.width), dtype=np.float64)
    values[1:-1, 1:-1] = per_channel.max(axis=2)
    return FrequencyMap(values)


def threshold_mask(fmap: FrequencyMap, tau: float) -> PerturbationMask:
    """Gate pixels whose frequency strictly exceeds tau; boundary always 0."""
    if np.isnan(tau) or tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    mask = (fmap.values > tau).astype(np.uint8)
    mask[0, :] = mask[-1, :] = 0
    mask[:, 0] = mask[:, -1] = 0
    return PerturbationMask(mask, "frequency")


def frequency_debug_image(fmap: FrequencyMap) -> Image:
    """Min-max normalized grayscale rendering of a frequency map, for PPM export."""
    lo, hi = float(fmap.values.min()), float(fmap.values.max())
    if hi > lo:
        gray = (fmap.values - lo) / (hi - lo)
    else:
        gray = np.zeros_like(fmap.values)
    return Image(np.repeat(gray[:, :, None], 3, axis=2))
