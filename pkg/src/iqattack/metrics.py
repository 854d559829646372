"""Attack-performance and invisibility metrics.

Correlations are implemented directly (rank-transformed Pearson and tie-
corrected Kendall tau-b) so small integer inputs produce bit-exact results
that an enumeration oracle can reproduce.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .imageops import to_gray

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size < 2:
        raise ValueError(f"{name} needs at least 2 values")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def rank_average(values) -> np.ndarray:
    """Ranks starting at 1, ties getting the average of their positions."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=np.float64)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    n = x.size
    sx, sy = x.sum(), y.sum()
    num = n * float(x @ y) - sx * sy
    var_x = n * float(x @ x) - sx * sx
    var_y = n * float(y @ y) - sy * sy
    if var_x <= 0.0 or var_y <= 0.0:
        raise ValueError("correlation undefined for constant input")
    return num / math.sqrt(var_x * var_y)


def plcc(a, b) -> float:
    """Pearson linear correlation of the raw values."""
    x, y = _as_vector(a, "a"), _as_vector(b, "b")
    if x.size != y.size:
        raise ValueError("length mismatch")
    return _pearson(x, y)


def srocc(a, b) -> float:
    """Spearman rank-order correlation: Pearson on average ranks."""
    x, y = _as_vector(a, "a"), _as_vector(b, "b")
    if x.size != y.size:
        raise ValueError("length mismatch")
    return _pearson(rank_average(x), rank_average(y))


def krocc(a, b) -> float:
    """Kendall rank correlation, tau-b (tie-corrected concordance)."""
    x, y = _as_vector(a, "a"), _as_vector(b, "b")
    if x.size != y.size:
        raise ValueError("length mismatch")
    n = x.size
    iu = np.triu_indices(n, k=1)
    dx = np.sign(x[:, None] - x[None, :])[iu]
    dy = np.sign(y[:, None] - y[None, :])[iu]
    concordance = float(np.sum(dx * dy))
    n0 = n * (n - 1) // 2
    ties_x = n0 - int(np.count_nonzero(dx))
    ties_y = n0 - int(np.count_nonzero(dy))
    if ties_x == n0 or ties_y == n0:
        raise ValueError("correlation undefined for constant input")
    return concordance / math.sqrt(float((n0 - ties_x) * (n0 - ties_y)))


def mae(a, b) -> float:
    """Mean absolute error between two score vectors."""
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.size != y.size or x.size == 0:
        raise ValueError("length mismatch")
    return float(np.mean(np.abs(x - y)))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    kern = np.exp(-0.5 * (offsets / sigma) ** 2)
    kern /= kern.sum()
    return np.outer(kern, kern)


def _luma_plane(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        return to_gray(arr)
    if arr.ndim == 2:
        return arr
    raise ValueError(f"expected an image, got shape {arr.shape}")


def ssim(
    x: np.ndarray,
    y: np.ndarray,
    window: int = SSIM_WINDOW,
    sigma: float = SSIM_SIGMA,
    k1: float = SSIM_K1,
    k2: float = SSIM_K2,
    data_range: float = 1.0,
) -> float:
    """Mean local structural similarity on the luma plane.

    Gaussian 11x11 window (sigma 1.5) with the canonical stabilizers; local
    statistics are taken only where the window fits entirely inside the
    image. The window shrinks (staying odd) for images smaller than 11.
    """
    px = _luma_plane(x)
    py = _luma_plane(y)
    if px.shape != py.shape:
        raise ValueError(f"shape mismatch: {px.shape} vs {py.shape}")
    size = min(window, px.shape[0], px.shape[1])
    if size % 2 == 0:
        size -= 1
    win = _gaussian_window(size, sigma)
    r = size // 2
    h, w = px.shape

    def local_mean(plane):
        full = ndimage.correlate(plane, win, mode="constant")
        return full[r : h - r, r : w - r] if r else full

    mu_x = local_mean(px)
    mu_y = local_mean(py)
    xx = local_mean(px * px) - mu_x * mu_x
    yy = local_mean(py * py) - mu_y * mu_y
    xy = local_mean(px * py) - mu_x * mu_y

    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
    )
    return float(ssim_map.mean())


def psnr(x: np.ndarray, y: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for unit dynamic range.

    Identical inputs report +infinity.
    """
    px = np.asarray(x, dtype=np.float64)
    py = np.asarray(y, dtype=np.float64)
    if px.shape != py.shape:
        raise ValueError(f"shape mismatch: {px.shape} vs {py.shape}")
    mse = float(np.mean((px - py) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
