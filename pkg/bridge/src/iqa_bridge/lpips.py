"""Learned-feature perceptual distance served at /lpips.

Distance = sum over layers of the mean squared difference between
channel-normalized activations of a small convolutional feature stack.
Weights come from a fixed-seed generator by default (checkpoint weights
for the published metric are not redistributable; fixed random features
are a long-standing baseline for this distance and keep the endpoint
deterministic across restarts). A TorchScript feature extractor can be
supplied instead.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
import torch

_FEATURE_SEED = 1234


class RandomFeatureStack(torch.nn.Module):
    def __init__(self, seed: int = _FEATURE_SEED):
        super().__init__()
        generator = torch.Generator().manual_seed(seed)
        channels = [3, 16, 32, 64]
        layers = []
        for cin, cout in zip(channels, channels[1:]):
            conv = torch.nn.Conv2d(cin, cout, kernel_size=3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(
                    torch.randn(conv.weight.shape, generator=generator)
                    / (cin * 9) ** 0.5
                )
                conv.bias.zero_()
            layers.append(conv)
        self.layers = torch.nn.ModuleList(layers)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        feats = []
        for conv in self.layers:
            x = torch.relu(conv(x))
            feats.append(x)
        return feats


class PerceptualDistance:
    def __init__(self, checkpoint: Optional[str] = None):
        if checkpoint:
            self.net = torch.jit.load(checkpoint, map_location="cpu")
        else:
            self.net = RandomFeatureStack()
        self.net.eval()

    @staticmethod
    def _unit_normalize(feat: torch.Tensor) -> torch.Tensor:
        norm = torch.sqrt((feat * feat).sum(dim=1, keepdim=True)) + 1e-10
        return feat / norm

    @torch.no_grad()
    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        if a.shape != b.shape:
            raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
        ta = self._to_tensor(a)
        tb = self._to_tensor(b)
        total = 0.0
        for fa, fb in zip(self.net(ta), self.net(tb)):
            diff = self._unit_normalize(fa) - self._unit_normalize(fb)
            total += float((diff * diff).mean())
        return total

    @staticmethod
    def _to_tensor(img: np.ndarray) -> torch.Tensor:
        arr = np.ascontiguousarray(img, dtype=np.float32)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = np.repeat(arr, 3, axis=2)
        return torch.from_numpy(arr).permute(2, 0, 1).unsqueeze(0)
