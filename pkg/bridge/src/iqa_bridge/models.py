"""Model adapters behind the scoring service.

Two adapter families: a built-in sharpness scorer that needs no weights
(for smoke tests and protocol work), and a generic TorchScript adapter for
user-supplied NR-IQA checkpoints. Outputs are mapped monotonically onto
[0, 100]; inference is deterministic (eval mode, no grad, CPU).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class ModelSpec:
    """Which model to serve and how to squeeze it into [0, 100].

    ``output_range`` gives the raw model output interval that maps linearly
    onto [0, 100]; values outside are clipped. ``resize`` optionally
    bilinearly resizes inputs to (H, W) before inference.
    """

    model: str = "builtin:sharpness"
    checkpoint: Optional[str] = None
    resize: Optional[tuple[int, int]] = None
    output_range: tuple[float, float] = (0.0, 100.0)
    normalize_mean: tuple[float, float, float] = (0.0, 0.0, 0.0)
    normalize_std: tuple[float, float, float] = (1.0, 1.0, 1.0)


class BuiltinSharpness(torch.nn.Module):
    """Sharpness scorer: 100 * sigmoid(gain * mean Sobel magnitude - bias).

    Fixed Sobel kernels, so the module is deterministic with no checkpoint;
    its score rises with high-frequency content, which makes it a workable
    stand-in target for boundary attacks.
    """

    def __init__(self, gain: float = 40.0, bias: float = 1.0):
        super().__init__()
        self.gain = gain
        self.bias = bias
        sobel_x = torch.tensor(
            [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]
        ).view(1, 1, 3, 3)
        self.register_buffer("kx", sobel_x)
        self.register_buffer("ky", sobel_x.transpose(2, 3).contiguous())
        self.register_buffer("luma", torch.tensor(LUMA_WEIGHTS).view(1, 3, 1, 1))

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        if img.shape[1] == 3:
            plane = (img * self.luma).sum(dim=1, keepdim=True)
        else:
            plane = img
        padded = torch.nn.functional.pad(plane, (1, 1, 1, 1), mode="replicate")
        gx = torch.nn.functional.conv2d(padded, self.kx)
        gy = torch.nn.functional.conv2d(padded, self.ky)
        mag = torch.clamp(torch.sqrt(gx * gx + gy * gy) / 4.0, 0.0, 1.0)
        return 100.0 * torch.sigmoid(self.gain * mag.mean(dim=(1, 2, 3)) - self.bias)


class ScoringModel:
    """A loaded model plus its preprocessing and output normalization."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        torch.manual_seed(0)
        if spec.model == "builtin:sharpness":
            self.net = BuiltinSharpness()
        elif spec.model == "torchscript":
            if not spec.checkpoint:
                raise ValueError("torchscript model requires a checkpoint path")
            self.net = torch.jit.load(spec.checkpoint, map_location="cpu")
        else:
            raise ValueError(f"unknown model {spec.model!r}")
        if hasattr(self.net, "eval"):
            self.net.eval()

    def _preprocess(self, img: np.ndarray) -> torch.Tensor:
        tensor = torch.from_numpy(np.ascontiguousarray(img, dtype=np.float32))
        tensor = tensor.permute(2, 0, 1).unsqueeze(0)
        if self.spec.resize is not None:
            tensor = torch.nn.functional.interpolate(
                tensor, size=self.spec.resize, mode="bilinear", align_corners=False
            )
        mean = torch.tensor(self.spec.normalize_mean).view(1, -1, 1, 1)
        std = torch.tensor(self.spec.normalize_std).view(1, -1, 1, 1)
        if tensor.shape[1] == mean.shape[1]:
            tensor = (tensor - mean) / std
        return tensor

    @torch.no_grad()
    def score(self, img: np.ndarray) -> float:
        raw = float(self.net(self._preprocess(img)).reshape(-1)[0])
        lo, hi = self.spec.output_range
        if hi <= lo:
            raise ValueError("output_range must be increasing")
        normalized = 100.0 * (raw - lo) / (hi - lo)
        return float(min(100.0, max(0.0, normalized)))
