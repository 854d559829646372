"""Campaign orchestration: dataset ingestion, attacks at scale, reporting.

A campaign scores every original, attacks each image with its own budgeted
oracle handle, writes lossless adversarial PNGs (verified to stay inside
each image's feasible box after 8-bit quantization), and reports pre/post
correlation-with-MOS blocks next to invisibility metrics.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import zlib
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import metrics
from .boundary import AttackConfig, AttackOutcome, per_image_rng, run_attack
from .directions import default_texture_bank, load_texture_bank
from .imageops import from_u8, load_png, quantize_u8, save_png
from .jnd import JndBox, jnd_box, jnd_threshold
from .oracle import DEFAULT_BUDGET, make_oracle

log = logging.getLogger(__name__)

CROP_SIZE = 224


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    path: str
    mos: float
    offset: tuple[int, int]
    crop: tuple[int, int]


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    crop_seed: int
    crop_size: int

    def to_json(self) -> str:
        payload = {
            "crop_seed": self.crop_seed,
            "crop_size": self.crop_size,
            "entries": [dataclasses.asdict(e) for e in self.entries],
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        payload = json.loads(text)
        entries = tuple(
            ManifestEntry(
                image_id=e["image_id"],
                path=e["path"],
                mos=float(e["mos"]),
                offset=tuple(e["offset"]),
                crop=tuple(e["crop"]),
            )
            for e in payload["entries"]
        )
        return DatasetManifest(entries, payload["crop_seed"], payload["crop_size"])


def _crop_offset(crop_seed: int, image_id: str, shape, crop_size: int):
    h, w = shape[:2]
    ch, cw = min(crop_size, h), min(crop_size, w)
    rng = np.random.default_rng(
        np.random.SeedSequence([crop_seed, zlib.crc32(image_id.encode("utf-8"))])
    )
    row = int(rng.integers(0, h - ch + 1))
    col = int(rng.integers(0, w - cw + 1))
    return (row, col), (ch, cw)


def load_dataset(image_dir, mos_csv, crop_seed: int, crop_size: int = CROP_SIZE) -> DatasetManifest:
    """Read a ``path,mos`` CSV and fix one random crop per image.

    Crop offsets are drawn once from ``(crop_seed, image id)`` and recorded
    in the manifest, so re-runs are bit-identical. Images smaller than the
    crop are taken whole.
    """
    entries = []
    seen = set()
    with open(mos_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["path", "mos"]:
            raise DatasetError(f"{mos_csv}: expected header 'path,mos'")
        for line_no, row in enumerate(reader, start=2):
            rel = row["path"].strip()
            image_id = rel
            if image_id in seen:
                raise DatasetError(f"{mos_csv} line {line_no}: duplicate id {image_id!r}")
            seen.add(image_id)
            try:
                mos = float(row["mos"])
            except (TypeError, ValueError):
                raise DatasetError(
                    f"{mos_csv} line {line_no}: unparseable MOS {row['mos']!r} for {image_id!r}"
                ) from None
            if not math.isfinite(mos):
                raise DatasetError(f"{mos_csv} line {line_no}: non-finite MOS for {image_id!r}")
            path = os.path.join(image_dir, rel)
            if not os.path.exists(path):
                raise DatasetError(f"{mos_csv} line {line_no}: missing file {path}")
            img = load_png(path)
            offset, crop = _crop_offset(crop_seed, image_id, img.shape, crop_size)
            entries.append(ManifestEntry(image_id, path, mos, offset, crop))
    if not entries:
        raise DatasetError("empty dataset")
    return DatasetManifest(tuple(entries), crop_seed, crop_size)


def load_crop(entry: ManifestEntry) -> np.ndarray:
    img = load_png(entry.path)
    (row, col), (ch, cw) = entry.offset, entry.crop
    return img[row : row + ch, col : col + cw, :]


@dataclass
class CampaignConfig:
    """Campaign-level knobs wrapping the per-attack configuration."""

    oracle_spec: str = "native:sharpness"
    budget: int = DEFAULT_BUDGET
    output_dir: str = "campaign-out"
    donor_dir: Optional[str] = None
    workers: int = 1
    seed: int = 0
    attack: AttackConfig = field(default_factory=AttackConfig)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        # The attack seed is always the campaign seed.
        self.attack = dataclasses.replace(self.attack, seed=self.seed)

    def to_dict(self) -> dict:
        return {
            "oracle_spec": self.oracle_spec,
            "budget": self.budget,
            "output_dir": self.output_dir,
            "donor_dir": self.donor_dir,
            "workers": self.workers,
            "seed": self.seed,
            "attack": dataclasses.asdict(self.attack),
        }


@dataclass
class PerImageRow:
    image_id: str
    mos: float
    score_before: Optional[float]
    score_after: Optional[float]
    side: Optional[str]
    total_queries: int
    stopped_reason: str
    ssim: float
    psnr: Optional[float]
    png_path: str
    lpips: Optional[float] = None
    error: Optional[str] = None


@dataclass
class MetricBlock:
    srocc: float
    plcc: float
    krocc: float
    mae: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class CampaignReport:
    pre: MetricBlock
    post: MetricBlock
    mean_ssim: float
    mean_psnr: Optional[float]
    mean_lpips: Optional[float]
    rows: List[PerImageRow]
    total_queries: int
    config: dict

    def to_dict(self) -> dict:
        def clean(value):
            if isinstance(value, float) and not math.isfinite(value):
                return None
            return value

        return {
            "pre": self.pre.to_dict(),
            "post": self.post.to_dict(),
            "mean_ssim": clean(self.mean_ssim),
            "mean_psnr": clean(self.mean_psnr),
            "mean_lpips": clean(self.mean_lpips),
            "total_queries": self.total_queries,
            "config": self.config,
            "rows": [
                {k: clean(v) for k, v in dataclasses.asdict(row).items()} for row in self.rows
            ],
        }


def quantize_into_box(x_adv: np.ndarray, box: JndBox) -> np.ndarray:
    """8-bit quantization that provably stays inside the feasible box.

    Round-half-up can step outside the box by under half a level; offending
    pixels are nudged one level back inward (the box is at least one level
    wide everywhere, so a single nudge suffices).
    """
    levels = quantize_u8(x_adv).astype(np.int16)
    decoded = from_u8(levels)
    levels = np.where(decoded < box.lo, levels + 1, levels)
    levels = np.where(from_u8(levels) > box.hi, levels - 1, levels)
    out = levels.astype(np.uint8)
    if not box.contains(from_u8(out)):
        raise AssertionError("quantized adversarial image escaped the feasible box")
    return out


def run_campaign(
    cfg: CampaignConfig,
    manifest: DatasetManifest,
    on_outcome: Optional[Callable[[str, np.ndarray, AttackOutcome], None]] = None,
) -> CampaignReport:
    """Attack every manifest entry and assemble the report.

    Per-image failures are recorded and skipped; the campaign itself fails
    only when more than half of the images fail.
    """
    if not manifest.entries:
        raise DatasetError("empty dataset")
    os.makedirs(cfg.output_dir, exist_ok=True)
    adv_dir = os.path.join(cfg.output_dir, "adversarial")
    os.makedirs(adv_dir, exist_ok=True)

    crops = {e.image_id: load_crop(e) for e in manifest.entries}
    shapes = {crops[e.image_id].shape for e in manifest.entries}
    banks = {}
    for shape in shapes:
        if cfg.donor_dir:
            banks[shape] = load_texture_bank(cfg.donor_dir, shape)
        else:
            banks[shape] = default_texture_bank(
                shape, seed=cfg.seed, cache_dir=os.path.join(cfg.output_dir, "donors")
            )

    # Measurement handle: the experimenter's own scoring pass, not charged
    # against any attack budget.
    measure = make_oracle(cfg.oracle_spec, budget=None)

    outcomes: dict[str, AttackOutcome] = {}
    failures: dict[str, str] = {}

    def attack_one(entry: ManifestEntry):
        x0 = crops[entry.image_id]
        handle = make_oracle(cfg.oracle_spec, budget=cfg.budget)
        outcome = run_attack(
            x0,
            handle,
            cfg.attack,
            bank=banks[x0.shape],
            rng=per_image_rng(cfg.seed, entry.image_id),
        )
        if on_outcome is not None:
            on_outcome(entry.image_id, x0, outcome)
        for step in outcome.trace:  # free per-step images once observed
            step.x = None
        return outcome

    if cfg.workers <= 1:
        for entry in manifest.entries:
            try:
                outcomes[entry.image_id] = attack_one(entry)
            except Exception as exc:  # per-image isolation
                log.exception("attack failed for %s", entry.image_id)
                failures[entry.image_id] = str(exc)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {e.image_id: pool.submit(attack_one, e) for e in manifest.entries}
        for image_id, fut in futures.items():
            try:
                outcomes[image_id] = fut.result()
            except Exception as exc:
                log.exception("attack failed for %s", image_id)
                failures[image_id] = str(exc)

    if len(failures) * 2 > len(manifest.entries):
        raise RuntimeError(f"campaign failed: {len(failures)}/{len(manifest.entries)} images failed")

    rows: List[PerImageRow] = []
    trace_lines: List[str] = []
    mos_values, pre_scores, post_scores = [], [], []
    for entry in manifest.entries:
        if entry.image_id in failures:
            rows.append(
                PerImageRow(
                    image_id=entry.image_id,
                    mos=entry.mos,
                    score_before=None,
                    score_after=None,
                    side=None,
                    total_queries=0,
                    stopped_reason="failed",
                    ssim=math.nan,
                    psnr=None,
                    png_path="",
                    error=failures[entry.image_id],
                )
            )
            continue
        x0 = crops[entry.image_id]
        outcome = outcomes[entry.image_id]

        box = jnd_box(x0, jnd_threshold(x0, cfg.attack.edge_low, cfg.attack.edge_high))
        adv_u8 = quantize_into_box(outcome.x_adv, box)
        png_name = _safe_name(entry.image_id) + ".png"
        png_path = os.path.join(adv_dir, png_name)
        save_png(png_path, from_u8(adv_u8))
        adv = load_png(png_path)

        score_before = (
            outcome.score_before if outcome.score_before is not None else measure.score(x0)
        )
        score_after = measure.score(adv)
        row = PerImageRow(
            image_id=entry.image_id,
            mos=entry.mos,
            score_before=score_before,
            score_after=score_after,
            side=outcome.side.name if outcome.side else None,
            total_queries=outcome.total_queries,
            stopped_reason=outcome.stopped_reason,
            ssim=metrics.ssim(x0, adv),
            psnr=metrics.psnr(x0, adv),
            png_path=os.path.relpath(png_path, cfg.output_dir),
            error=outcome.error,
        )
        rows.append(row)
        mos_values.append(entry.mos)
        pre_scores.append(score_before)
        post_scores.append(score_after)
        record = {"image_id": entry.image_id, "png_path": row.png_path}
        record.update(outcome.trace_dict())
        trace_lines.append(json.dumps(record, sort_keys=True))

    if len(mos_values) < 2:
        raise RuntimeError("campaign needs at least 2 successfully attacked images for metrics")

    pre = MetricBlock(
        srocc=metrics.srocc(pre_scores, mos_values),
        plcc=metrics.plcc(pre_scores, mos_values),
        krocc=metrics.krocc(pre_scores, mos_values),
        mae=metrics.mae(pre_scores, mos_values),
    )
    post = MetricBlock(
        srocc=metrics.srocc(post_scores, mos_values),
        plcc=metrics.plcc(post_scores, mos_values),
        krocc=metrics.krocc(post_scores, mos_values),
        mae=metrics.mae(post_scores, mos_values),
    )
    finite_psnr = [r.psnr for r in rows if r.psnr is not None and math.isfinite(r.psnr)]
    report = CampaignReport(
        pre=pre,
        post=post,
        mean_ssim=float(np.mean([r.ssim for r in rows if math.isfinite(r.ssim)])),
        mean_psnr=float(np.mean(finite_psnr)) if finite_psnr else None,
        mean_lpips=None,
        rows=rows,
        total_queries=sum(r.total_queries for r in rows),
        config=cfg.to_dict(),
    )

    with open(os.path.join(cfg.output_dir, "trace.jsonl"), "w") as fh:
        for line in trace_lines:
            fh.write(line + "\n")
    emit_report(report, "json", os.path.join(cfg.output_dir, "report.json"))
    emit_report(report, "markdown", os.path.join(cfg.output_dir, "report.md"))
    emit_report(report, "csv", os.path.join(cfg.output_dir, "per_image.csv"))
    return report


def _safe_name(image_id: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in image_id)


def _fmt(value, digits=4) -> str:
    if value is None:
        return "-"
    if isinstance(value, float) and not math.isfinite(value):
        return "inf"
    return f"{value:.{digits}f}"


def render_markdown(report: CampaignReport) -> str:
    lines = [
        "| Setting | SROCC↓ | PLCC↓ | KROCC↓ | MAE↑ | SSIM↑ | PSNR↑ | LPIPS↓ |",
        "|---|---|---|---|---|---|---|---|",
        "| Original | {} | {} | {} | {} | - | - | - |".format(
            _fmt(report.pre.srocc), _fmt(report.pre.plcc), _fmt(report.pre.krocc), _fmt(report.pre.mae, 2)
        ),
        "| Ours | {} | {} | {} | {} | {} | {} | {} |".format(
            _fmt(report.post.srocc),
            _fmt(report.post.plcc),
            _fmt(report.post.krocc),
            _fmt(report.post.mae, 2),
            _fmt(report.mean_ssim),
            _fmt(report.mean_psnr, 2),
            _fmt(report.mean_lpips),
        ),
        "",
        f"Images: {len(report.rows)}; total queries: {report.total_queries}",
    ]
    return "\n".join(lines) + "\n"


def render_csv(report: CampaignReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [
        "image_id",
        "mos",
        "score_before",
        "score_after",
        "side",
        "total_queries",
        "stopped_reason",
        "ssim",
        "psnr",
        "png_path",
        "lpips",
        "error",
    ]
    writer.writerow(header)
    for row in report.rows:
        d = dataclasses.asdict(row)
        writer.writerow(["" if d[k] is None else d[k] for k in header])
    return buf.getvalue()


def emit_report(report: CampaignReport, fmt: str, path) -> None:
    """Write the report as json, csv (per-image), or a markdown table."""
    if fmt == "json":
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    elif fmt == "markdown":
        text = render_markdown(report)
    elif fmt == "csv":
        text = render_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(text)
