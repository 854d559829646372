"""Independent brute-force oracles used only by the test suite.

Each sticks to the plainest correct formulation available (dense loops,
exhaustive enumeration, exact rational arithmetic) so it shares no code
path with the implementation it checks.
"""

import heapq
import math
from fractions import Fraction

import numpy as np


def dense_gaussian_blur(img, sigma):
    """Direct dense convolution with a sampled, normalized Gaussian kernel."""
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    k1 = np.exp(-0.5 * (offsets / sigma) ** 2)
    k1 = k1 / k1.sum()
    kernel = np.outer(k1, k1)
    h, w = img.shape
    out = np.zeros_like(img)
    for r in range(h):
        for c in range(w):
            acc = 0.0
            for dr in range(-radius, radius + 1):
                for dc in range(-radius, radius + 1):
                    rr = min(max(r + dr, 0), h - 1)
                    cc = min(max(c + dc, 0), w - 1)
                    acc += img[rr, cc] * kernel[dr + radius, dc + radius]
            out[r, c] = acc
    return out


def dense_sobel(img):
    """Hand-rolled 3x3 Sobel with replicate padding; returns (gx, gy)."""
    sx = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]
    h, w = img.shape
    gx = np.zeros_like(img)
    gy = np.zeros_like(img)
    for r in range(h):
        for c in range(w):
            ax = ay = 0.0
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr = min(max(r + dr, 0), h - 1)
                    cc = min(max(c + dc, 0), w - 1)
                    ax += img[rr, cc] * sx[dr + 1][dc + 1]
                    ay += img[rr, cc] * sx[dc + 1][dr + 1]
            gx[r, c] = ax
            gy[r, c] = ay
    return gx, gy


def dct2_direct(img):
    """O(N^4) orthonormal type-II 2-D DCT by the definition."""
    h, w = img.shape
    out = np.zeros((h, w))
    for u in range(h):
        for v in range(w):
            au = math.sqrt(1.0 / h) if u == 0 else math.sqrt(2.0 / h)
            av = math.sqrt(1.0 / w) if v == 0 else math.sqrt(2.0 / w)
            acc = 0.0
            for r in range(h):
                for c in range(w):
                    acc += (
                        img[r, c]
                        * math.cos(math.pi * (2 * r + 1) * u / (2 * h))
                        * math.cos(math.pi * (2 * c + 1) * v / (2 * w))
                    )
            out[u, v] = au * av * acc
    return out


def exact_mbd(values):
    """Exact minimum barrier distance from the border seed set.

    For each candidate path-minimum level, run a bottleneck (minimax)
    Dijkstra restricted to pixels at or above that level; the barrier of a
    pixel is the best (max - level) over all levels. Minimax path costs are
    Dijkstra-exact, and any optimal path's minimum is some pixel value, so
    scanning all distinct values is exhaustive.
    """
    h, w = values.shape
    best = np.full((h, w), np.inf)
    border = [(r, c) for r in range(h) for c in range(w) if r in (0, h - 1) or c in (0, w - 1)]
    for level in np.unique(values):
        minimax = np.full((h, w), np.inf)
        heap = []
        for r, c in border:
            if values[r, c] >= level:
                minimax[r, c] = values[r, c]
                heapq.heappush(heap, (values[r, c], r, c))
        while heap:
            cost, r, c = heapq.heappop(heap)
            if cost > minimax[r, c]:
                continue
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and values[rr, cc] >= level:
                    through = max(cost, values[rr, cc])
                    if through < minimax[rr, cc]:
                        minimax[rr, cc] = through
                        heapq.heappush(heap, (through, rr, cc))
        best = np.minimum(best, minimax - level)
    return best


def ranks_by_position(values):
    """Average-of-positions ranks computed by explicit list scanning."""
    sorted_vals = sorted(values)
    out = []
    for v in values:
        positions = [i + 1 for i, s in enumerate(sorted_vals) if s == v]
        out.append(Fraction(sum(positions), len(positions)))
    return out


def spearman_exhaustive(a, b):
    """Pearson over explicit ranks with exact rational sums."""
    ra, rb = ranks_by_position(list(a)), ranks_by_position(list(b))
    n = len(ra)
    num = n * sum(x * y for x, y in zip(ra, rb)) - sum(ra) * sum(rb)
    da = n * sum(x * x for x in ra) - sum(ra) ** 2
    db = n * sum(x * x for x in rb) - sum(rb) ** 2
    if da == 0 or db == 0:
        raise ValueError("constant input")
    return float(num) / math.sqrt(float(da) * float(db))


def kendall_exhaustive(a, b):
    """Tau-b by explicit pair enumeration."""
    n = len(a)
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da, db = a[i] - a[j], b[i] - b[j]
            if da == 0:
                ties_a += 1
            if db == 0:
                ties_b += 1
            if da == 0 or db == 0:
                continue
            if (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    if ties_a == n0 or ties_b == n0:
        raise ValueError("constant input")
    return (concordant - discordant) / math.sqrt(float((n0 - ties_a) * (n0 - ties_b)))
