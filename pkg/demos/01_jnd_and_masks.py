"""Where may an attack hide? JND thresholds and the edge/saliency mask.

Builds a synthetic scene, derives the per-pixel visibility thresholds and
the attack-region mask, and writes everything as PNGs next to this script.
"""

import os

import numpy as np

from iqattack.directions import combined_mask
from iqattack.imageops import canny_edges, mbs_saliency, save_png, to_gray
from iqattack.jnd import jnd_box, jnd_threshold
from iqattack.synthetic import make_corpus

out_dir = os.path.join(os.path.dirname(__file__), "out", "01")
os.makedirs(out_dir, exist_ok=True)

# A textured synthetic image from the built-in corpus.
image_id, img = make_corpus(count=2, size=(224, 224), seed=7)[1]
print(f"image: {image_id}, shape {img.shape}")
save_png(os.path.join(out_dir, "original.png"), img)

# 1. Visibility thresholds. Dark and textured regions tolerate more
#    distortion; the map lives in [1/255, 32/255].
thresholds = jnd_threshold(img)
print(f"thresholds: min {thresholds.min():.4f}, max {thresholds.max():.4f}, "
      f"mean {thresholds.mean():.4f}")
save_png(os.path.join(out_dir, "jnd_x8.png"), np.clip(thresholds * 8.0, 0, 1))

# 2. The feasible box around the image. Every attack iterate must stay
#    inside it, which is what keeps the perturbation invisible.
box = jnd_box(img, thresholds)
print(f"box width: mean {(box.hi - box.lo).mean():.4f}")

# 3. Edges, saliency, and their union: the region the primary attack
#    direction is allowed to touch.
edges = canny_edges(to_gray(img))
saliency = mbs_saliency(img)
mask = combined_mask(img)
print(f"edge pixels: {edges.mean():.1%}, salient pixels: {(saliency > 0.1).mean():.1%}, "
      f"combined: {mask.mean():.1%}")
save_png(os.path.join(out_dir, "edges.png"), edges.astype(float))
save_png(os.path.join(out_dir, "saliency.png"), saliency)
save_png(os.path.join(out_dir, "mask.png"), mask.astype(float))

print(f"wrote PNGs to {out_dir}")
