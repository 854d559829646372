"""Protocol conformance checker for a running scoring endpoint.

Runs the vectors the attack engine relies on: health, determinism, score
range, and the perceptual-distance identities. Prints one pass/fail line
per check and returns the collected results.
"""

from __future__ import annotations

import base64
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np
import requests
from PIL import Image


@dataclass
class ConformanceReport:
    endpoint: str
    checks: list = field(default_factory=list)  # (name, passed, detail)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def add(self, name: str, ok: bool, detail: str) -> None:
        self.checks.append((name, ok, detail))
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def _png_b64(img: np.ndarray) -> str:
    u8 = np.clip(np.floor(img * 255.0 + 0.5), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(u8, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _test_images():
    rng = np.random.default_rng(7)
    flat = np.full((64, 64, 3), 0.5)
    noisy = np.clip(flat + 0.1 * rng.standard_normal(flat.shape), 0, 1)
    ramp = np.repeat(np.linspace(0, 1, 64)[:, None], 64, axis=1)
    ramp = np.repeat(ramp[:, :, None], 3, axis=2)
    return flat, noisy, ramp


def conformance_check(endpoint: str, timeout: float = 30.0) -> ConformanceReport:
    report = ConformanceReport(endpoint.rstrip("/"))
    base = report.endpoint
    flat, noisy, ramp = _test_images()

    try:
        health = requests.get(f"{base}/healthz", timeout=timeout)
        report.add("healthz", health.status_code == 200, f"status {health.status_code}")
    except requests.RequestException as exc:
        report.add("healthz", False, f"unreachable: {exc}")
        return report

    def score(img):
        reply = requests.post(
            f"{base}/score", json={"image_png_b64": _png_b64(img)}, timeout=timeout
        )
        reply.raise_for_status()
        return float(reply.json()["score"])

    started = time.monotonic()
    values = [score(img) for img in (flat, noisy, ramp)]
    latency = (time.monotonic() - started) / 3.0
    in_range = all(0.0 <= v <= 100.0 and math.isfinite(v) for v in values)
    report.add("score range", in_range, f"scores {[round(v, 3) for v in values]} in [0, 100]")

    repeats = [score(noisy) for _ in range(2)]
    deterministic = repeats[0] == repeats[1] == score(noisy)
    report.add("determinism", deterministic, f"repeated scores {repeats}")

    report.add("latency", latency < timeout, f"{latency * 1000:.0f} ms per score")

    def lpips(a, b):
        reply = requests.post(
            f"{base}/lpips", json={"a": _png_b64(a), "b": _png_b64(b)}, timeout=timeout
        )
        reply.raise_for_status()
        return float(reply.json()["lpips"])

    self_distance = lpips(noisy, noisy)
    report.add("lpips identity", abs(self_distance) < 1e-6, f"lpips(a, a) = {self_distance:.2e}")

    ab, ba = lpips(flat, noisy), lpips(noisy, flat)
    report.add(
        "lpips symmetry", abs(ab - ba) < 1e-6, f"lpips(a, b) = {ab:.6f}, lpips(b, a) = {ba:.6f}"
    )
    report.add("lpips non-negative", ab >= 0.0, f"lpips(a, b) = {ab:.6f} >= 0")

    bad = requests.post(f"{base}/score", json={"image_png_b64": "!!!"}, timeout=timeout)
    report.add("malformed request -> 400", bad.status_code == 400, f"status {bad.status_code}")

    return report
