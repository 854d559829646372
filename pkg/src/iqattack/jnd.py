"""Pixel-wise just-noticeable-difference thresholds and the feasible box.

The threshold map combines luminance adaptation (dark and bright backgrounds
tolerate more distortion) with spatial masking (textured regions tolerate
more than smooth ones, structural edges less than texture). Perturbations
kept inside the resulting per-pixel box are treated as invisible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imageops import (
    canny_edges,
    gaussian_blur,
    save_png,
    sobel_gradient_magnitude,
    to_gray,
    validate_image,
)

# At least one 8-bit level of slack at every pixel, at most 32 levels.
THRESHOLD_MIN = 1.0 / 255.0
THRESHOLD_MAX = 32.0 / 255.0

# Spatial-masking gains (intensity units per unit gradient magnitude).
TEXTURE_GAIN = 16.0 / 255.0
EDGE_GAIN = 6.0 / 255.0
OVERLAP_DISCOUNT = 0.3


def luminance_adaptation(bg_lum: np.ndarray) -> np.ndarray:
    """Visibility threshold due to background luminance, on the [0, 1] scale.

    ``bg_lum`` is the local mean luminance on the 8-bit (0..255) scale. Dark
    backgrounds get a large threshold that falls off as sqrt, bright ones a
    slowly rising linear one.
    """
    bg = np.asarray(bg_lum, dtype=np.float64)
    dark = 17.0 * (1.0 - np.sqrt(bg / 127.0)) + 3.0
    bright = 3.0 * (bg - 127.0) / 128.0 + 3.0
    return np.where(bg <= 127.0, dark, bright) / 255.0


def jnd_threshold(
    img: np.ndarray,
    edge_low: float = 0.1,
    edge_high: float = 0.2,
) -> np.ndarray:
    """Per-pixel visibility threshold map, same shape as the image.

    Computed on the luma plane and broadcast to all channels:

    * luminance adaptation from the 5x5 local mean background;
    * spatial masking proportional to the blurred Sobel magnitude, with a
      reduced gain on Canny edge pixels to protect structural edges;
    * where both mechanisms are active the masking term is discounted by
      30% before taking the max, then everything is clamped to
      [1/255, 32/255].
    """
    arr = validate_image(img)
    luma = to_gray(arr)

    bg = ndimage.uniform_filter(luma, size=5, mode="nearest") * 255.0
    adapt = luminance_adaptation(bg)

    grad = sobel_gradient_magnitude(gaussian_blur(luma, 1.0))
    edges = canny_edges(luma, edge_low, edge_high)
    gain = np.where(edges, EDGE_GAIN, TEXTURE_GAIN)
    masking = gain * grad

    # Luminance adaptation is positive everywhere, so the two mechanisms
    # overlap exactly where the masking term is non-zero.
    overlap = (masking > 0.0).astype(np.float64)
    combined = np.maximum(adapt, masking * (1.0 - OVERLAP_DISCOUNT * overlap))
    thresholds = np.clip(combined, THRESHOLD_MIN, THRESHOLD_MAX)
    return np.repeat(thresholds[:, :, None], arr.shape[2], axis=2)


@dataclass(frozen=True)
class JndBox:
    """Axis-aligned feasible box ``lo <= x <= hi`` around a reference image.

    The box is convex, which is what lets arc candidates built from two
    feasible directions stay feasible.
    """

    lo: np.ndarray
    hi: np.ndarray

    def contains(self, img: np.ndarray) -> bool:
        arr = np.asarray(img, dtype=np.float64)
        return bool(np.all(arr >= self.lo) and np.all(arr <= self.hi))

    def clip(self, img: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(img, dtype=np.float64), self.lo, self.hi)

    @property
    def shape(self):
        return self.lo.shape


def jnd_box(img: np.ndarray, thresholds: np.ndarray) -> JndBox:
    """Closed feasible box ``[max(0, x - m), min(1, x + m)]`` around ``img``."""
    arr = validate_image(img)
    m = np.asarray(thresholds, dtype=np.float64)
    if m.shape != arr.shape:
        raise ValueError(f"threshold shape {m.shape} does not match image {arr.shape}")
    lo = np.maximum(0.0, arr - m)
    hi = np.minimum(1.0, arr + m)
    return JndBox(lo=lo, hi=hi)


def contains(box: JndBox, img: np.ndarray) -> bool:
    """True iff every pixel of ``img`` lies inside the closed box."""
    if np.asarray(img).shape != box.shape:
        raise ValueError("shape mismatch")
    return box.contains(img)


def save_debug_map(path, thresholds: np.ndarray) -> None:
    """Dump a threshold map as an 8x-amplified 8-bit PNG for visual inspection."""
    m = np.asarray(thresholds, dtype=np.float64)
    save_png(path, np.clip(m * 8.0, 0.0, 1.0))


__all__ = [
    "JndBox",
    "THRESHOLD_MIN",
    "THRESHOLD_MAX",
    "contains",
    "jnd_box",
    "jnd_threshold",
    "luminance_adaptation",
    "save_debug_map",
]
