"""Deterministic synthetic image corpus for desk-scale evaluation.

Produces gradients, textures, and blurred/noised variants whose native
sharpness scores spread across both sides of the quality split, so a
campaign over the corpus exercises both attack directions without any
external dataset.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .imageops import gaussian_blur, load_png, save_png
from .oracle import sharpness_backend


def _rng(seed, tag):
    return np.random.default_rng(np.random.SeedSequence([seed, tag]))


def _to_image(plane: np.ndarray) -> np.ndarray:
    return np.repeat(np.clip(plane, 0.0, 1.0)[:, :, None], 3, axis=2)


def _linear_gradient(size, angle, lo, hi):
    h, w = size
    rows = np.arange(h)[:, None] / max(h - 1, 1)
    cols = np.arange(w)[None, :] / max(w - 1, 1)
    t = rows * np.cos(angle) + cols * np.sin(angle)
    t = (t - t.min()) / max(t.max() - t.min(), 1e-9)
    return lo + (hi - lo) * t


def _radial_gradient(size, lo, hi):
    h, w = size
    rows = (np.arange(h)[:, None] - h / 2) / h
    cols = (np.arange(w)[None, :] - w / 2) / w
    t = np.sqrt(rows**2 + cols**2)
    t = t / t.max()
    return lo + (hi - lo) * t


def _texture(size, cell, contrast, rng):
    h, w = size
    grid = rng.random((h // cell + 2, w // cell + 2))
    up = np.kron(grid, np.ones((cell, cell)))[:h, :w]
    base = 0.5 + contrast * (up - 0.5)
    fine = contrast * 0.4 * (rng.random((h, w)) - 0.5)
    return base + fine


def _dark_texture(size, cell, contrast, base, rng):
    h, w = size
    grid = rng.random((h // cell + 2, w // cell + 2))
    up = np.kron(grid, np.ones((cell, cell)))[:h, :w]
    fine = 0.4 * (rng.random((h, w)) - 0.5)
    return base + contrast * ((up - 0.5) + fine)


# (kind, params) recipes tuned so native sharpness scores spread from the
# high 20s through the low 60s: dark smooth images sit deep on the
# low-quality side, the rest cluster a little above the 50 split.
_RECIPES = (
    ("gradient", {"style": "linear", "angle": 0.3, "lo": 0.05, "hi": 0.75}),
    ("texture", {"cell": 12, "contrast": 0.08, "base": 0.3}),
    ("blurred", {"cell": 3, "contrast": 0.5, "sigma": 4.0, "base": 0.3}),
    ("noised", {"amp": 0.016, "lo": 0.2, "hi": 0.6, "angle": 1.1}),
    ("gradient", {"style": "radial", "lo": 0.1, "hi": 0.65}),
    ("texture", {"cell": 9, "contrast": 0.09, "base": 0.35}),
    ("blurred", {"cell": 3, "contrast": 0.5, "sigma": 3.4, "base": 0.35}),
    ("noised", {"amp": 0.019, "lo": 0.23, "hi": 0.63, "angle": 1.5}),
    ("gradient", {"style": "linear", "angle": 0.8, "lo": 0.1, "hi": 0.7}),
    ("texture", {"cell": 7, "contrast": 0.1, "base": 0.25}),
    ("blurred", {"cell": 3, "contrast": 0.5, "sigma": 2.9, "base": 0.4}),
    ("noised", {"amp": 0.022, "lo": 0.26, "hi": 0.66, "angle": 1.9}),
    ("gradient", {"style": "radial", "lo": 0.15, "hi": 0.69}),
    ("texture", {"cell": 8, "contrast": 0.13, "base": 0.4}),
    ("blurred", {"cell": 3, "contrast": 0.55, "sigma": 2.6, "base": 0.35}),
    ("noised", {"amp": 0.025, "lo": 0.29, "hi": 0.69, "angle": 2.3}),
    ("gradient", {"style": "linear", "angle": 1.3, "lo": 0.02, "hi": 0.6}),
    ("texture", {"cell": 6, "contrast": 0.12, "base": 0.3}),
    ("blurred", {"cell": 3, "contrast": 0.6, "sigma": 2.45, "base": 0.4}),
    ("noised", {"amp": 0.028, "lo": 0.32, "hi": 0.72, "angle": 2.7}),
    ("gradient", {"style": "radial", "lo": 0.2, "hi": 0.73}),
    ("texture", {"cell": 6, "contrast": 0.14, "base": 0.35}),
    ("blurred", {"cell": 3, "contrast": 0.6, "sigma": 2.5, "base": 0.45}),
    ("noised", {"amp": 0.031, "lo": 0.35, "hi": 0.75, "angle": 3.1}),
)


def make_corpus(count: int = 24, size=(224, 224), seed: int = 7) -> list[tuple[str, np.ndarray]]:
    """Deterministic list of (image_id, H x W x 3 image) pairs.

    Mixes gradients, mildly contrasted dark textures, blurred textures, and
    noise-on-gradient variants; recipes cycle when ``count`` exceeds the
    recipe table.
    """
    images = []
    per_kind = {}
    for i in range(count):
        kind, params = _RECIPES[i % len(_RECIPES)]
        k = per_kind.get(kind, 0)
        per_kind[kind] = k + 1
        rng = _rng(seed, i)
        if kind == "gradient":
            if params["style"] == "linear":
                plane = _linear_gradient(size, params["angle"], params["lo"], params["hi"])
            else:
                plane = _radial_gradient(size, params["lo"], params["hi"])
        elif kind == "texture":
            plane = _dark_texture(size, params["cell"], params["contrast"], params["base"], rng)
        elif kind == "blurred":
            sharp = _dark_texture(size, params["cell"], params["contrast"], params["base"], rng)
            plane = gaussian_blur(np.clip(sharp, 0, 1), params["sigma"])
        else:  # noised
            smooth = _linear_gradient(size, params["angle"], params["lo"], params["hi"])
            plane = smooth + params["amp"] * rng.standard_normal(size)
        images.append((f"{kind}-{k:02d}", _to_image(plane)))
    return images


def write_corpus(
    directory, count: int = 24, size=(224, 224), seed: int = 7, mos: str = "sharpness"
) -> str:
    """Write corpus PNGs plus a ``mos.csv`` manifest; returns the CSV path.

    With ``mos="sharpness"`` the MOS column holds the native sharpness score
    of the saved (8-bit) image, so predicted scores correlate perfectly with
    MOS before any attack.
    """
    os.makedirs(directory, exist_ok=True)
    backend = sharpness_backend()
    rows = []
    for image_id, img in make_corpus(count, size, seed):
        name = f"{image_id}.png"
        save_png(os.path.join(directory, name), img)
        saved = load_png(os.path.join(directory, name))
        value = backend(saved) if mos == "sharpness" else 50.0
        rows.append((name, value))
    csv_path = os.path.join(directory, "mos.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "mos"])
        writer.writerows(rows)
    return csv_path
