"""The report's vocabulary: rank correlations and invisibility metrics.

Walks through SROCC/PLCC/KROCC/MAE on small score vectors, then SSIM and
PSNR on a pair of images differing by an invisible perturbation.
"""

import numpy as np

from iqattack import krocc, mae, plcc, psnr, srocc, ssim
from iqattack.jnd import jnd_box, jnd_threshold
from iqattack.synthetic import make_corpus

mos = [72.0, 55.0, 91.0, 40.0, 63.0]
model = [70.1, 58.3, 88.0, 45.2, 60.9]  # a well-behaved scorer
print("well-behaved scorer vs MOS:")
print(f"  SROCC {srocc(model, mos):.4f}  PLCC {plcc(model, mos):.4f}  "
      f"KROCC {krocc(model, mos):.4f}  MAE {mae(model, mos):.2f}")

attacked = [85.0, 75.2, 52.0, 80.8, 49.5]  # the same scorer, after an attack
print("attacked scorer vs MOS:")
print(f"  SROCC {srocc(attacked, mos):.4f}  PLCC {plcc(attacked, mos):.4f}  "
      f"KROCC {krocc(attacked, mos):.4f}  MAE {mae(attacked, mos):.2f}")

# Rank metrics ignore monotone rescaling; Pearson does not.
squashed = [np.log(s) for s in model]
print("\nmonotone transform of the scores:")
print(f"  SROCC unchanged: {srocc(squashed, mos):.4f}, "
      f"PLCC changed: {plcc(squashed, mos):.4f}")

# Invisibility: a perturbation confined to the JND box barely moves SSIM.
_, img = make_corpus(count=1, size=(96, 96), seed=7)[0]
box = jnd_box(img, jnd_threshold(img))
rng = np.random.default_rng(0)
perturbed = box.clip(img + 0.05 * rng.standard_normal(img.shape))
print("\nfull-box random perturbation:")
print(f"  max |delta| {np.abs(perturbed - img).max():.4f}")
print(f"  SSIM {ssim(img, perturbed):.4f} (1 = identical)")
print(f"  PSNR {psnr(img, perturbed):.2f} dB")
