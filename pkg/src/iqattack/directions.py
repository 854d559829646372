"""Attack-direction synthesis guided by human-visual-system priors.

The primary direction is a random amplitude times a high-frequency texture
donor, restricted to the edge-or-salient region of the attacked image. The
secondary direction is a random sign flip of the image's low-frequency DCT
content, orthogonalized against the primary direction.
"""

from __future__ import annotations

import functools
import os
from dataclasses import dataclass, field

import numpy as np

from .imageops import (
    canny_edges,
    dct2,
    decode_png,
    encode_png,
    gaussian_blur,
    idct2,
    load_png,
    mbs_saliency,
    save_png,
    to_gray,
    validate_image,
)

AMPLITUDE_RANGE = 0.1  # primary-direction amplitude is uniform on (-0.1, 0.1)
DONOR_SIGMA = 2.0
LOW_FREQ_FRACTION = 1.0 / 16.0
SALIENCY_THRESH = 0.1
DONOR_MEAN_TOL = 1e-3


class EmptyAttackRegionError(ValueError):
    """The edge/saliency mask is empty, so masked directions would vanish."""


class DegenerateDirectionError(ValueError):
    """A sampled direction collapsed to (numerically) zero."""


@dataclass
class Direction:
    """An image-shaped attack direction with a norm convention tag."""

    vec: np.ndarray
    norm_kind: str = "raw"  # "raw" | "unit"
    meta: dict = field(default_factory=dict)


def make_texture_donor(hq_img: np.ndarray, sigma: float = DONOR_SIGMA) -> np.ndarray:
    """High-frequency residual of a high-quality image: image minus its blur."""
    arr = validate_image(hq_img)
    return arr - gaussian_blur(arr, sigma)


def _remove_dc(donor: np.ndarray) -> np.ndarray:
    """Subtract per-channel means; border effects leave small-image residuals
    with a DC bias the bank invariant does not tolerate."""
    return donor - donor.reshape(-1, donor.shape[2]).mean(axis=0)


class TextureBank:
    """A non-empty collection of zero-mean high-frequency donor residuals."""

    def __init__(self, donors, sources=None):
        donors = [np.asarray(d, dtype=np.float64) for d in donors]
        if not donors:
            raise ValueError("texture bank must hold at least one donor")
        for i, donor in enumerate(donors):
            means = donor.reshape(-1, donor.shape[2]).mean(axis=0)
            if np.abs(means).max() > DONOR_MEAN_TOL:
                raise ValueError(
                    f"donor {i} is not a zero-mean residual (channel means {means})"
                )
        self.donors = donors
        self.sources = list(sources) if sources else [f"donor-{i}" for i in range(len(donors))]

    def __len__(self):
        return len(self.donors)


def _fit_to_shape(img: np.ndarray, shape) -> np.ndarray:
    """Tile and crop an image to the requested H x W x C shape."""
    h, w, c = shape
    reps = (-(-h // img.shape[0]), -(-w // img.shape[1]), 1)
    tiled = np.tile(img, reps)[:h, :w, :]
    if tiled.shape[2] == 1 and c == 3:
        tiled = np.repeat(tiled, 3, axis=2)
    elif tiled.shape[2] == 3 and c == 1:
        tiled = to_gray(tiled)[:, :, None]
    return tiled


def _checkerboard(h, w, rng):
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    out = np.zeros((h, w))
    for cell, weight in ((2, 0.5), (4, 0.3), (8, 0.2)):
        out += weight * (((rows // cell) + (cols // cell)) % 2)
    return out


def _value_noise(h, w, rng):
    out = np.zeros((h, w))
    for cell, weight in ((4, 0.5), (8, 0.3), (16, 0.2)):
        gh, gw = -(-h // cell) + 1, -(-w // cell) + 1
        grid = rng.random((gh, gw))
        ys = np.linspace(0, gh - 1, h)
        xs = np.linspace(0, gw - 1, w)
        y0 = np.floor(ys).astype(int)
        x0 = np.floor(xs).astype(int)
        fy = (ys - y0)[:, None]
        fx = (xs - x0)[None, :]
        y1 = np.minimum(y0 + 1, gh - 1)
        x1 = np.minimum(x0 + 1, gw - 1)
        top = grid[y0][:, x0] * (1 - fx) + grid[y0][:, x1] * fx
        bot = grid[y1][:, x0] * (1 - fx) + grid[y1][:, x1] * fx
        out += weight * (top * (1 - fy) + bot * fy)
    return out


def _line_grating(h, w, rng):
    angle = rng.uniform(0.2, 1.3)
    period = 4.0
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    phase = 2.0 * np.pi * (rows * np.cos(angle) + cols * np.sin(angle)) / period
    return 0.5 + 0.5 * np.sin(phase)


def _dot_field(h, w, rng):
    dots = (rng.random((h, w)) < 0.05).astype(np.float64)
    blurred = gaussian_blur(dots * 0.999, 0.7)
    return blurred / max(blurred.max(), 1e-9)


def default_texture_bank(shape, seed: int = 0, cache_dir=None) -> TextureBank:
    """Four procedurally generated high-detail donor textures for the given shape.

    Deterministic in (shape, seed). When ``cache_dir`` is given, the source
    textures are written there as PNGs on first use and reloaded afterwards,
    so campaigns can inspect and reuse them.
    """
    h, w, c = shape
    builders = {
        "checkerboard": _checkerboard,
        "value-noise": _value_noise,
        "grating": _line_grating,
        "dot-field": _dot_field,
    }
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
    donors = []
    for i, (name, build) in enumerate(builders.items()):
        path = None
        if cache_dir is not None:
            path = os.path.join(cache_dir, f"{name}-{h}x{w}-seed{seed}.png")
        if path is not None and os.path.exists(path):
            img = load_png(path)
        else:
            rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
            plane = np.clip(build(h, w, rng), 0.0, 1.0)
            img = np.repeat(plane[:, :, None], c, axis=2)
            # Round-trip through PNG so cached and in-memory banks agree.
            img = decode_png(encode_png(img))
            if path is not None:
                save_png(path, img)
        if img.shape != (h, w, c):
            img = _fit_to_shape(img, (h, w, c))
        donors.append(_remove_dc(make_texture_donor(img)))
    return TextureBank(donors, list(builders))


def load_texture_bank(directory, shape, sigma: float = DONOR_SIGMA) -> TextureBank:
    """Build a bank from a directory of donor PNGs, fitted to ``shape``."""
    paths = sorted(
        os.path.join(directory, name)
        for name in os.listdir(directory)
        if name.lower().endswith(".png")
    )
    if not paths:
        raise ValueError(f"no donor PNGs found in {directory}")
    donors = [_remove_dc(make_texture_donor(_fit_to_shape(load_png(p), shape), sigma)) for p in paths]
    return TextureBank(donors, paths)


def combined_mask(
    img: np.ndarray,
    saliency_thresh: float = SALIENCY_THRESH,
    edge_low: float = 0.1,
    edge_high: float = 0.2,
) -> np.ndarray:
    """Boolean H x W mask: union of Canny edges and salient pixels."""
    arr = validate_image(img)
    edges = canny_edges(to_gray(arr), edge_low, edge_high)
    salient = mbs_saliency(arr) > saliency_thresh
    return edges | salient


def sample_texture_direction(
    bank: TextureBank, mask: np.ndarray, rng: np.random.Generator
) -> Direction:
    """Random donor times a random amplitude, restricted to the mask region.

    Draw order is fixed (donor index, then amplitude) so a seeded generator
    reproduces the exact sample.
    """
    if not np.any(mask):
        raise EmptyAttackRegionError("empty attack region: mask has no positive pixels")
    index = int(rng.integers(len(bank)))
    amplitude = float(rng.uniform(-AMPLITUDE_RANGE, AMPLITUDE_RANGE))
    donor = bank.donors[index]
    vec = amplitude * donor * np.asarray(mask, dtype=np.float64)[:, :, None]
    return Direction(vec, "raw", {"donor_index": index, "amplitude": amplitude})


@functools.lru_cache(maxsize=16)
def _zigzag_low_freq_mask(h: int, w: int, count: int):
    """Boolean mask selecting the first ``count`` DCT indices in zig-zag order."""
    mask = np.zeros((h, w), dtype=bool)
    taken = 0
    for s in range(h + w - 1):
        rows = range(min(s, h - 1), max(0, s - w + 1) - 1, -1)
        diag = [(r, s - r) for r in rows]
        if s % 2 == 0:
            diag.reverse()
        for r, c in diag:
            if taken >= count:
                mask.setflags(write=False)
                return mask
            mask[r, c] = True
            taken += 1
    mask.setflags(write=False)
    return mask


def low_frequency_sample(
    img0: np.ndarray, rng: np.random.Generator, fraction: float = LOW_FREQ_FRACTION
) -> np.ndarray:
    """Random sign flip of the lowest-frequency DCT coefficients of each channel.

    This is the raw secondary direction before orthogonalization; its DCT is
    supported only on the selected low-frequency set.
    """
    arr = validate_image(img0)
    h, w, c = arr.shape
    count = max(1, int(round(h * w * fraction)))
    keep = _zigzag_low_freq_mask(h, w, count)
    out = np.empty_like(arr)
    for ch in range(c):
        coeffs = dct2(arr[:, :, ch])
        signs = np.where(rng.random((h, w)) < 0.5, -1.0, 1.0)
        out[:, :, ch] = idct2(np.where(keep, signs * coeffs, 0.0))
    return out


def sample_orthogonal_direction(
    img0: np.ndarray,
    unit_dir: Direction,
    rng: np.random.Generator,
    fraction: float = LOW_FREQ_FRACTION,
) -> Direction:
    """Unit direction from the low-frequency sample, orthogonal to ``unit_dir``."""
    if unit_dir.norm_kind != "unit":
        raise ValueError("orthogonalization requires a unit primary direction")
    base = low_frequency_sample(img0, rng, fraction)
    u = unit_dir.vec
    flat = base.ravel()
    w = flat - float(flat @ u.ravel()) * u.ravel()
    norm = float(np.linalg.norm(w))
    if norm < 1e-9:
        raise DegenerateDirectionError("degenerate orthogonal direction")
    return Direction((w / norm).reshape(base.shape), "unit")
