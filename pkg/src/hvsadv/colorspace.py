"""RGB<->YUV conversion and the zero-luma gradient projection.

The matrices are the exact constants the attacked pipeline uses (full printed
precision, not ITU-rounded variants); RGB_TO_YUV and YUV_TO_RGB are numerical
inverses to ~2e-9.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .image import Image

RGB_TO_YUV = np.array([
    [0.299, 0.587, 0.114],
    [-0.14714119, -0.28886916, 0.43601035],
    [0.61497538, -0.51496512, -0.10001026],
])

YUV_TO_RGB = np.array([
    [1.0, 0.0, 1.13988303],
    [1.0, -0.394642334, -0.58062185],
    [1.0, 2.03206185, 0.0],
])

# P zeroes the luma component of an RGB vector: YUV_TO_RGB @ diag(0,1,1) @ RGB_TO_YUV
_ZERO_LUMA = YUV_TO_RGB @ np.diag([0.0, 1.0, 1.0]) @ RGB_TO_YUV

# An L-inf ball is not preserved by the projection: |P v|_inf <= amp * |v|_inf,
# with amp the max row abs-sum (~1.772). Harness verification uses this bound.
LUMA_ZERO_LINF_AMPLIFICATION = float(np.abs(_ZERO_LUMA).sum(axis=1).max())


@dataclass(eq=False)
class YuvImage:
    """Per-pixel (Y, U, V) values; Y nominally in [0,1], U and V signed. No clamping."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise DimensionError(f"expected (H, W, 3) data, got shape {self.data.shape}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def rgb_to_yuv(img: Image) -> YuvImage:
    """Apply the forward matrix per pixel."""
    return YuvImage(img.data @ RGB_TO_YUV.T)


def yuv_to_rgb(yuv: YuvImage) -> tuple[Image, int]:
    """Apply the inverse matrix per pixel, clamping to [0,1] only at Image
    construction. Returns (image, number of channel entries the clamp moved)."""
    rgb = yuv.data @ YUV_TO_RGB.T
    clamped = np.clip(rgb, 0.0, 1.0)
    clamp_count = int(np.count_nonzero(clamped != rgb))
    return Image(clamped), clamp_count


def project_gradient_zero_luma(grad: np.ndarray) -> np.ndarray:
    """Zero the luma component of a per-pixel RGB gradient.

    Expresses each pixel's gradient in YUV, drops Y, and maps back to RGB, so
    rgb_to_yuv of the result has Y = 0 (to ~1e-9). Linear and idempotent.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.ndim != 3 or grad.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) gradient, got shape {grad.shape}")
    return grad @ _ZERO_LUMA.T
