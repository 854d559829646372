"""A small evaluation campaign, end to end.

Writes a synthetic corpus whose MOS equals the scorer's own pre-attack
predictions (so the pre-attack rank correlation is exactly 1), attacks
every image, and prints the resulting report table.
"""

import os

from iqattack.boundary import AttackConfig
from iqattack.harness import CampaignConfig, load_dataset, run_campaign, render_markdown
from iqattack.synthetic import write_corpus

base = os.path.join(os.path.dirname(__file__), "out", "03")
corpus_dir = os.path.join(base, "corpus")
out_dir = os.path.join(base, "campaign")

csv_path = write_corpus(corpus_dir, count=8, size=(96, 96), seed=7)
manifest = load_dataset(corpus_dir, csv_path, crop_seed=0, crop_size=96)
print(f"corpus: {len(manifest.entries)} images, MOS = pre-attack sharpness scores")

cfg = CampaignConfig(
    oracle_spec="native:sharpness",
    budget=1500,
    output_dir=out_dir,
    workers=2,
    seed=0,
    attack=AttackConfig(boundary_count=6, max_attempts=40),
)
report = run_campaign(cfg, manifest)

print()
print(render_markdown(report))
print("per-image:")
for row in report.rows:
    print(f"  {row.image_id:14s} mos {row.mos:6.2f} -> {row.score_after:6.2f} "
          f"[{row.side}] {row.stopped_reason} ({row.total_queries} queries)")
print(f"\nfull outputs (trace.jsonl, report.*, adversarial PNGs) in {out_dir}")
