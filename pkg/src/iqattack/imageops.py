"""Low-level image primitives: luma, blur, edges, saliency, DCT, gradients.

Images are float arrays with intensities in [0, 1]. Color images are
H x W x C with C in {1, 3}; single planes (luma, masks, saliency) are H x W.
All operations are pure functions and safe to call from concurrent workers.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from PIL import Image as PILImage
from scipy import ndimage
from scipy.fft import dctn, idctn

# Rec.601 luma weights.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

MIN_SIDE = 8


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check an H x W x C intensity array and return it as float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"expected H x W x C array with C in {{1, 3}}, got shape {arr.shape}")
    if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
        raise ValueError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {arr.shape[:2]}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("intensities must lie in [0, 1]")
    return arr


def validate_gray(img: np.ndarray) -> np.ndarray:
    """Check an H x W plane in [0, 1] and return it as float64."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected H x W array, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("intensities must lie in [0, 1]")
    return arr


def to_gray(img: np.ndarray) -> np.ndarray:
    """Rec.601 luma plane of a color image; identity for single-channel input."""
    arr = validate_image(img)
    if arr.shape[2] == 1:
        return arr[:, :, 0].copy()
    r, g, b = LUMA_WEIGHTS
    return r * arr[:, :, 0] + g * arr[:, :, 1] + b * arr[:, :, 2]


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with kernel radius ceil(3*sigma) and replicate padding.

    Accepts a gray plane or an H x W x C image (channels filtered independently).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    arr = np.asarray(img, dtype=np.float64)
    radius = math.ceil(3.0 * sigma)
    if arr.ndim == 2:
        out = ndimage.gaussian_filter(arr, sigma=sigma, mode="nearest", radius=radius)
    elif arr.ndim == 3:
        out = np.empty_like(arr)
        for c in range(arr.shape[2]):
            out[:, :, c] = ndimage.gaussian_filter(
                arr[:, :, c], sigma=sigma, mode="nearest", radius=radius
            )
    else:
        raise ValueError(f"expected 2-D or 3-D array, got shape {arr.shape}")
    # Convex weights keep values inside the input range; clip the fp dust.
    return np.clip(out, 0.0, 1.0)


def sobel_xy(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel responses (gx, gy) with replicate padding.

    Separable form: smooth [1,2,1] along one axis, central difference along
    the other. The difference is a two-term cancellation, so constant inputs
    produce exact zeros.
    """
    arr = np.asarray(img, dtype=np.float64)
    h, w = arr.shape
    p = np.empty((h + 2, w + 2))
    p[1:-1, 1:-1] = arr
    p[0] = p[1]
    p[-1] = p[-2]
    p[:, 0] = p[:, 1]
    p[:, -1] = p[:, -2]
    smooth_rows = p[:-2, :] + 2.0 * p[1:-1, :] + p[2:, :]  # rows smoothed, cols padded
    smooth_cols = p[:, :-2] + 2.0 * p[:, 1:-1] + p[:, 2:]  # cols smoothed, rows padded
    gx = smooth_rows[:, 2:] - smooth_rows[:, :-2]
    gy = smooth_cols[2:, :] - smooth_cols[:-2, :]
    return gx, gy


def sobel_gradient_magnitude(img: np.ndarray) -> np.ndarray:
    """3x3 Sobel gradient magnitude, scaled by 1/4 and clipped to [0, 1]."""
    arr = validate_gray(img)
    gx, gy = sobel_xy(arr)
    gx *= gx
    gy *= gy
    gx += gy
    np.sqrt(gx, out=gx)
    gx *= 0.25
    return np.clip(gx, 0.0, 1.0, out=gx)


def canny_edges(
    img: np.ndarray,
    low_thresh: float = 0.1,
    high_thresh: float = 0.2,
    sigma: float = 1.0,
) -> np.ndarray:
    """Canny edge mask: Sobel gradients, non-maximum suppression, hysteresis.

    Thresholds apply to the gradient magnitude normalized by its maximum,
    so they must satisfy 0 < low < high <= 1. Returns a boolean H x W mask.
    """
    arr = validate_gray(img)
    if not (0.0 < low_thresh < high_thresh <= 1.0):
        raise ValueError("thresholds must satisfy 0 < low < high <= 1")
    smooth = gaussian_blur(arr, sigma)
    gx, gy = sobel_xy(smooth)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak <= 0.0:
        return np.zeros(arr.shape, dtype=bool)
    norm = mag / peak

    # Quantize gradient direction into 4 sectors and suppress non-maxima
    # along the gradient. Ties are kept so plateau edges survive.
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(norm, 1, mode="constant")
    h, w = arr.shape

    def shifted(dr: int, dc: int) -> np.ndarray:
        return padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]

    sector = np.zeros(arr.shape, dtype=np.uint8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3

    neighbors = {
        0: ((0, 1), (0, -1)),
        1: ((1, 1), (-1, -1)),
        2: ((1, 0), (-1, 0)),
        3: ((1, -1), (-1, 1)),
    }
    keep = np.zeros(arr.shape, dtype=bool)
    for s, ((r1, c1), (r2, c2)) in neighbors.items():
        sel = sector == s
        keep |= sel & (norm >= shifted(r1, c1)) & (norm >= shifted(r2, c2))

    nms = np.where(keep, norm, 0.0)
    strong = nms >= high_thresh
    weak = nms >= low_thresh
    return ndimage.binary_propagation(strong, mask=weak, structure=np.ones((3, 3), dtype=bool))


@njit(cache=True)
def _mbd_forward(values, dist, upper, lower):  # pragma: no cover - jitted
    h, w = values.shape
    for r in range(1, h - 1):
        for c in range(1, w - 1):
            x = values[r, c]
            hi = max(upper[r - 1, c], x)
            lo = min(lower[r - 1, c], x)
            cost = hi - lo
            if cost < dist[r, c]:
                dist[r, c] = cost
                upper[r, c] = hi
                lower[r, c] = lo
            hi = max(upper[r, c - 1], x)
            lo = min(lower[r, c - 1], x)
            cost = hi - lo
            if cost < dist[r, c]:
                dist[r, c] = cost
                upper[r, c] = hi
                lower[r, c] = lo


@njit(cache=True)
def _mbd_backward(values, dist, upper, lower):  # pragma: no cover - jitted
    h, w = values.shape
    for r in range(h - 2, 0, -1):
        for c in range(w - 2, 0, -1):
            x = values[r, c]
            hi = max(upper[r + 1, c], x)
            lo = min(lower[r + 1, c], x)
            cost = hi - lo
            if cost < dist[r, c]:
                dist[r, c] = cost
                upper[r, c] = hi
                lower[r, c] = lo
            hi = max(upper[r, c + 1], x)
            lo = min(lower[r, c + 1], x)
            cost = hi - lo
            if cost < dist[r, c]:
                dist[r, c] = cost
                upper[r, c] = hi
                lower[r, c] = lo


def mbd_transform(plane: np.ndarray, sweeps: int = 3) -> np.ndarray:
    """Raster-scan minimum barrier distance from the image border seed set.

    Each sweep is a forward pass (top/left neighbors) followed by a backward
    pass (bottom/right neighbors). Border pixels are seeds with distance 0.
    """
    values = validate_gray(plane)
    dist = np.full(values.shape, np.inf)
    dist[0, :] = 0.0
    dist[-1, :] = 0.0
    dist[:, 0] = 0.0
    dist[:, -1] = 0.0
    upper = values.copy()
    lower = values.copy()
    for _ in range(sweeps):
        _mbd_forward(values, dist, upper, lower)
        _mbd_backward(values, dist, upper, lower)
    return dist


def mbs_saliency(img: np.ndarray, sweeps: int = 3) -> np.ndarray:
    """Minimum-barrier saliency on the luma plane, min-max normalized to [0, 1]."""
    arr = validate_image(img)
    dist = mbd_transform(to_gray(arr), sweeps=sweeps)
    span = dist.max() - dist.min()
    if span <= 0.0:
        return np.zeros(dist.shape)
    return (dist - dist.min()) / span


def dct2(img: np.ndarray) -> np.ndarray:
    """Orthonormal type-II 2-D DCT of a plane."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("dct2 expects an H x W plane")
    return dctn(arr, type=2, norm="ortho")


def idct2(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct2`."""
    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("idct2 expects an H x W coefficient plane")
    return idctn(arr, type=2, norm="ortho")


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to 8-bit levels with round-half-up."""
    arr = np.asarray(img, dtype=np.float64)
    return np.clip(np.floor(arr * 255.0 + 0.5), 0, 255).astype(np.uint8)


def from_u8(arr: np.ndarray) -> np.ndarray:
    """Map 8-bit levels back to [0, 1] intensities."""
    return np.asarray(arr, dtype=np.float64) / 255.0


def encode_png(img: np.ndarray) -> bytes:
    """Encode an image as 8-bit PNG bytes (lossless; required for adversarial outputs)."""
    import io

    u8 = quantize_u8(img)
    if u8.ndim == 3 and u8.shape[2] == 1:
        u8 = u8[:, :, 0]
    mode = "RGB" if u8.ndim == 3 else "L"
    buf = io.BytesIO()
    PILImage.fromarray(u8, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes into an H x W x C float image in [0, 1]."""
    import io

    with PILImage.open(io.BytesIO(data)) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return from_u8(arr)


def save_png(path, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def load_png(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_png(fh.read())
