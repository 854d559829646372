"""One full attack, step by step.

Attacks a smooth synthetic image against the native sharpness scorer and
prints the adaptive intensity ladder as it unfolds, then saves the
original, the adversarial result, and the amplified difference.
"""

import os

import numpy as np

from iqattack import AttackConfig, make_oracle, run_attack, ssim
from iqattack.imageops import save_png
from iqattack.synthetic import make_corpus

out_dir = os.path.join(os.path.dirname(__file__), "out", "02")
os.makedirs(out_dir, exist_ok=True)

image_id, img = make_corpus(count=1, size=(160, 160), seed=7)[0]
oracle = make_oracle("native:sharpness", budget=8000)

outcome = run_attack(img, oracle, AttackConfig(boundary_count=8, seed=1))

print(f"image: {image_id}")
print(f"score: {outcome.score_before:.2f} -> {outcome.score_after:.2f} "
      f"({outcome.side.name}, stopped: {outcome.stopped_reason}, "
      f"{outcome.total_queries} queries)")
print("\nintensity ladder:")
print(f"{'intensity':>10} {'achieved':>9} {'queries':>8} {'theta':>8} {'score':>8}")
for entry in outcome.trace:
    theta = "-" if entry.theta is None else f"{entry.theta:+.3f}"
    score = "-" if entry.score is None else f"{entry.score:.2f}"
    print(f"{entry.intensity:>10.4f} {str(entry.achieved):>9} {entry.queries:>8} "
          f"{theta:>8} {score:>8}")

save_png(os.path.join(out_dir, "original.png"), img)
save_png(os.path.join(out_dir, "adversarial.png"), outcome.x_adv)
diff = np.abs(outcome.x_adv - img)
save_png(os.path.join(out_dir, "difference_x16.png"), np.clip(diff * 16.0, 0, 1))

print(f"\nperturbation: max {diff.max():.4f}, SSIM {ssim(img, outcome.x_adv):.4f}")
print(f"wrote PNGs to {out_dir}")
