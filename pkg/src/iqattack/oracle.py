"""The opaque scoring contract the attack queries, plus native toy scorers.

Backends are plain callables (image -> score). ``OracleHandle`` wraps one
with a hard query budget, an audit trail, and a digest cache so re-scoring
an identical image is free: a repeated identical query carries no new
information, and only fresh model evaluations count against the budget.
"""

from __future__ import annotations

import base64
import hashlib
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .imageops import encode_png, gaussian_blur, sobel_gradient_magnitude, to_gray

DEFAULT_BUDGET = 8000


class BudgetExceededError(RuntimeError):
    """The handle's query budget is spent."""


class OracleUnavailableError(RuntimeError):
    """The backend failed to produce a usable score."""


@dataclass(frozen=True)
class ScoreRecord:
    digest: str
    score: float
    sequence: int


def image_digest(img: np.ndarray) -> str:
    arr = np.ascontiguousarray(img, dtype=np.float64)
    h = hashlib.sha256()
    h.update(str(arr.shape).encode())
    h.update(memoryview(arr).cast("B"))
    return h.hexdigest()


class OracleHandle:
    """Budgeted, audited access to a scoring backend.

    A handle belongs to exactly one attack worker; it is not shared.
    """

    def __init__(
        self,
        backend: Callable[[np.ndarray], float],
        budget: Optional[int] = DEFAULT_BUDGET,
        descriptor: str = "",
    ):
        self.backend = backend
        self.budget = budget
        self.descriptor = descriptor
        self.used = 0
        self.records: List[ScoreRecord] = []
        self._cache: dict[str, float] = {}

    @property
    def exhausted(self) -> bool:
        return self.budget is not None and self.used >= self.budget

    @property
    def remaining(self) -> Optional[int]:
        return None if self.budget is None else self.budget - self.used

    def score(self, img: np.ndarray) -> float:
        """Score an image, consuming budget only on fresh backend calls."""
        digest = image_digest(img)
        cached = self._cache.get(digest)
        if cached is not None:
            return cached
        if self.exhausted:
            raise BudgetExceededError(f"query budget of {self.budget} exhausted")
        try:
            value = float(self.backend(img))
        except (BudgetExceededError, OracleUnavailableError):
            raise
        except Exception as exc:  # backend failure is an oracle failure
            raise OracleUnavailableError(f"backend failed: {exc}") from exc
        if not math.isfinite(value):
            raise OracleUnavailableError(f"backend returned non-finite score {value!r}")
        self.used += 1
        self._cache[digest] = value
        self.records.append(ScoreRecord(digest, value, self.used))
        return value


def _logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def sharpness_backend(gain: float = 40.0, offset: float = 1.0) -> Callable[[np.ndarray], float]:
    """Toy quality model that rewards high-frequency content.

    score = 100 * logistic(gain * mean Sobel magnitude of luma - offset).
    Deterministic and sensitive to masked texture perturbations, which is
    exactly the handle the attack needs.
    """

    def backend(img: np.ndarray) -> float:
        grad = sobel_gradient_magnitude(to_gray(img))
        return 100.0 * _logistic(gain * float(grad.mean()) - offset)

    backend.descriptor = f"native:sharpness(gain={gain},offset={offset})"
    return backend


def noise_backend(
    gain: float = 200.0, offset: float = 1.0, scale: float = 1.0
) -> Callable[[np.ndarray], float]:
    """Toy quality model that punishes high-frequency content.

    score = 100 * logistic(offset - gain * mean |img - blur(img)| * scale).
    Anti-correlated with :func:`sharpness_backend`; exercises attacks that
    must drive scores down.
    """

    def backend(img: np.ndarray) -> float:
        residual = np.abs(img - gaussian_blur(img, 1.0))
        return 100.0 * _logistic(offset - gain * float(residual.mean()) * scale)

    backend.descriptor = f"native:noise(gain={gain},offset={offset},scale={scale})"
    return backend


def http_backend(endpoint: str, timeout: float = 30.0) -> Callable[[np.ndarray], float]:
    """Client for an external scoring service speaking the wire protocol.

    POST {endpoint}/score with JSON {"image_png_b64": <base64 PNG>}; the
    reply must be 200 with JSON {"score": <finite number>}.
    """
    import requests

    url = endpoint.rstrip("/") + "/score"

    def backend(img: np.ndarray) -> float:
        payload = {"image_png_b64": base64.b64encode(encode_png(img)).decode("ascii")}
        try:
            reply = requests.post(url, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            raise OracleUnavailableError(f"request to {url} failed: {exc}") from exc
        if reply.status_code != 200:
            raise OracleUnavailableError(f"{url} returned status {reply.status_code}")
        try:
            value = float(reply.json()["score"])
        except (ValueError, TypeError, KeyError) as exc:
            raise OracleUnavailableError(f"malformed reply from {url}: {exc}") from exc
        if not math.isfinite(value):
            raise OracleUnavailableError(f"{url} returned non-finite score {value!r}")
        return value

    backend.descriptor = f"external:{endpoint}"
    return backend


def make_oracle(spec: str, budget: Optional[int] = DEFAULT_BUDGET, timeout: float = 30.0) -> OracleHandle:
    """Build a handle from a spec string.

    Accepted specs: ``native:sharpness``, ``native:noise``, or an ``http(s)``
    endpoint for an external scoring service.
    """
    if spec == "native:sharpness":
        backend = sharpness_backend()
    elif spec == "native:noise":
        backend = noise_backend()
    elif spec.startswith(("http://", "https://")):
        backend = http_backend(spec, timeout=timeout)
    else:
        raise ValueError(f"unknown oracle spec {spec!r}")
    return OracleHandle(backend, budget=budget, descriptor=getattr(backend, "descriptor", spec))
