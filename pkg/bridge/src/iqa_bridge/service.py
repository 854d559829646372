"""HTTP scoring service.

Wire protocol:
  POST /score  {"image_png_b64": "<base64 PNG>"}        -> {"score": float}
  POST /lpips  {"a": "<base64 PNG>", "b": "<base64 PNG>"} -> {"lpips": float}
  GET  /healthz                                          -> 200 "ok"

Malformed requests get 400, inference failures 500 with a diagnostic.
Inference runs one request at a time per worker, deterministically.
"""

from __future__ import annotations

import base64
import binascii
import io
import math
import threading

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from PIL import Image
from pydantic import BaseModel

from .lpips import PerceptualDistance
from .models import ModelSpec, ScoringModel


class ScoreRequest(BaseModel):
    image_png_b64: str


class LpipsRequest(BaseModel):
    a: str
    b: str


def _decode_image(data_b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data_b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"invalid base64: {exc}") from exc
    try:
        with Image.open(io.BytesIO(raw)) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except Exception as exc:
        raise HTTPException(status_code=400, detail=f"undecodable PNG: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def build_app(spec: ModelSpec | None = None, lpips_checkpoint: str | None = None) -> FastAPI:
    spec = spec or ModelSpec()
    model = ScoringModel(spec)
    perceptual = PerceptualDistance(lpips_checkpoint)
    inference_lock = threading.Lock()
    app = FastAPI(title="iqa-model-bridge")

    @app.get("/healthz", response_class=PlainTextResponse)
    def healthz() -> str:
        return "ok"

    @app.post("/score")
    def score(request: ScoreRequest) -> dict:
        img = _decode_image(request.image_png_b64)
        try:
            with inference_lock:
                value = model.score(img)
        except HTTPException:
            raise
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"inference failed: {exc}") from exc
        if not math.isfinite(value):
            raise HTTPException(status_code=500, detail="non-finite score")
        return {"score": value}

    @app.post("/lpips")
    def lpips(request: LpipsRequest) -> dict:
        a = _decode_image(request.a)
        b = _decode_image(request.b)
        if a.shape != b.shape:
            raise HTTPException(
                status_code=400, detail=f"shape mismatch: {a.shape} vs {b.shape}"
            )
        try:
            with inference_lock:
                value = perceptual.distance(a, b)
        except HTTPException:
            raise
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"inference failed: {exc}") from exc
        return {"lpips": value}

    return app
