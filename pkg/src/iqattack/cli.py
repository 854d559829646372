"""Command-line interface: score probe, single-image attack, campaign, report.

Flags override config-file values ([campaign]/[attack] key=value sections);
the IQATTACK_ORACLE_ENDPOINT environment variable overrides the oracle spec.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import os
import sys

from .boundary import AttackConfig, run_attack
from .harness import (
    CampaignConfig,
    CampaignReport,
    MetricBlock,
    PerImageRow,
    load_dataset,
    run_campaign,
)
from .imageops import load_png, save_png
from .jnd import jnd_box, jnd_threshold
from .oracle import make_oracle

log = logging.getLogger(__name__)

ENDPOINT_ENV = "IQATTACK_ORACLE_ENDPOINT"


def _config_overrides(path):
    """Read [campaign] and [attack] sections from a key=value config file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise SystemExit(f"cannot read config file {path}")
    out = {"campaign": {}, "attack": {}}
    for section in out:
        if parser.has_section(section):
            out[section] = dict(parser.items(section))
    return out


def _coerce(dataclass_type, raw: dict) -> dict:
    fields = {f.name: f.type for f in dataclasses.fields(dataclass_type)}
    coerced = {}
    for key, value in raw.items():
        if key not in fields:
            raise SystemExit(f"unknown config key {key!r} for {dataclass_type.__name__}")
        current = getattr(dataclass_type(), key)
        if isinstance(current, bool):
            coerced[key] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            coerced[key] = int(value)
        elif isinstance(current, float):
            coerced[key] = float(value)
        else:
            coerced[key] = value
    return coerced


def _attack_config(args, file_attack: dict) -> AttackConfig:
    kwargs = _coerce(AttackConfig, file_attack)
    for name in ("boundary_count", "start_intensity", "max_attempts", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    return AttackConfig(**kwargs)


def _oracle_spec(args, file_campaign: dict) -> str:
    spec = file_campaign.get("oracle_spec", "native:sharpness")
    if args.oracle is not None:
        spec = args.oracle
    endpoint = os.environ.get(ENDPOINT_ENV)
    if endpoint:
        spec = endpoint
    return spec


def cmd_score(args) -> int:
    handle = make_oracle(_oracle_spec(args, {}), budget=None)
    img = load_png(args.image)
    print(f"{handle.descriptor}: {handle.score(img):.4f}")
    return 0


def cmd_attack(args) -> int:
    file_cfg = _config_overrides(args.config) if args.config else {"campaign": {}, "attack": {}}
    attack_cfg = _attack_config(args, file_cfg["attack"])
    spec = _oracle_spec(args, file_cfg["campaign"])
    budget = args.budget if args.budget is not None else int(
        file_cfg["campaign"].get("budget", 8000)
    )

    x0 = load_png(args.image)
    handle = make_oracle(spec, budget=budget)
    outcome = run_attack(x0, handle, attack_cfg)

    os.makedirs(args.out, exist_ok=True)
    from .harness import quantize_into_box
    from .imageops import from_u8

    box = jnd_box(x0, jnd_threshold(x0, attack_cfg.edge_low, attack_cfg.edge_high))
    adv_path = os.path.join(args.out, "adversarial.png")
    save_png(adv_path, from_u8(quantize_into_box(outcome.x_adv, box)))
    with open(os.path.join(args.out, "trace.json"), "w") as fh:
        json.dump(outcome.trace_dict(), fh, sort_keys=True, indent=2)

    def fmt(value):
        return "-" if value is None else f"{value:.3f}"

    print(
        f"score {fmt(outcome.score_before)} -> {fmt(outcome.score_after)} "
        f"({outcome.stopped_reason}, {outcome.total_queries} queries); wrote {adv_path}"
    )
    return 0


def cmd_campaign(args) -> int:
    file_cfg = _config_overrides(args.config) if args.config else {"campaign": {}, "attack": {}}
    attack_cfg = _attack_config(args, file_cfg["attack"])

    campaign_kwargs = _coerce(CampaignConfig, {
        k: v for k, v in file_cfg["campaign"].items() if k not in ("attack",)
    })
    campaign_kwargs["attack"] = attack_cfg
    if args.oracle is not None or os.environ.get(ENDPOINT_ENV):
        campaign_kwargs["oracle_spec"] = _oracle_spec(args, file_cfg["campaign"])
    elif "oracle_spec" not in campaign_kwargs:
        campaign_kwargs["oracle_spec"] = "native:sharpness"
    for name in ("budget", "workers", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            campaign_kwargs[name] = value
    if args.out is not None:
        campaign_kwargs["output_dir"] = args.out
    if args.donors is not None:
        campaign_kwargs["donor_dir"] = args.donors

    cfg = CampaignConfig(**campaign_kwargs)
    manifest = load_dataset(args.images, args.mos, crop_seed=args.crop_seed, crop_size=args.crop_size)
    with open(os.path.join(_ensure_dir(cfg.output_dir), "manifest.json"), "w") as fh:
        fh.write(manifest.to_json())
    report = run_campaign(cfg, manifest)
    print(open(os.path.join(cfg.output_dir, "report.md")).read())
    return 0


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _report_from_dict(payload: dict) -> CampaignReport:
    rows = [PerImageRow(**row) for row in payload["rows"]]
    return CampaignReport(
        pre=MetricBlock(**payload["pre"]),
        post=MetricBlock(**payload["post"]),
        mean_ssim=payload["mean_ssim"],
        mean_psnr=payload["mean_psnr"],
        mean_lpips=payload["mean_lpips"],
        rows=rows,
        total_queries=payload["total_queries"],
        config=payload["config"],
    )


def cmd_report(args) -> int:
    from .harness import render_csv, render_markdown

    with open(args.report) as fh:
        report = _report_from_dict(json.load(fh))
    if args.format == "json":
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    elif args.format == "markdown":
        text = render_markdown(report)
    else:
        text = render_csv(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iqattack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="probe an oracle with one image")
    p_score.add_argument("--image", required=True)
    p_score.add_argument("--oracle", default=None, help="native:sharpness | native:noise | URL")
    p_score.set_defaults(func=cmd_score)

    p_attack = sub.add_parser("attack", help="attack a single image")
    p_attack.add_argument("--image", required=True)
    p_attack.add_argument("--out", required=True)
    p_attack.add_argument("--oracle", default=None)
    p_attack.add_argument("--budget", type=int, default=None)
    p_attack.add_argument("--boundary-count", dest="boundary_count", type=int, default=None)
    p_attack.add_argument("--start-intensity", dest="start_intensity", type=float, default=None)
    p_attack.add_argument("--max-attempts", dest="max_attempts", type=int, default=None)
    p_attack.add_argument("--seed", type=int, default=None)
    p_attack.add_argument("--config", default=None)
    p_attack.set_defaults(func=cmd_attack)

    p_camp = sub.add_parser("campaign", help="attack a dataset and report metrics")
    p_camp.add_argument("--images", required=True, help="image directory")
    p_camp.add_argument("--mos", required=True, help="CSV with header path,mos")
    p_camp.add_argument("--out", default=None)
    p_camp.add_argument("--oracle", default=None)
    p_camp.add_argument("--budget", type=int, default=None)
    p_camp.add_argument("--workers", type=int, default=None)
    p_camp.add_argument("--seed", type=int, default=None)
    p_camp.add_argument("--crop-seed", dest="crop_seed", type=int, default=0)
    p_camp.add_argument("--crop-size", dest="crop_size", type=int, default=224)
    p_camp.add_argument("--donors", default=None)
    p_camp.add_argument("--boundary-count", dest="boundary_count", type=int, default=None)
    p_camp.add_argument("--start-intensity", dest="start_intensity", type=float, default=None)
    p_camp.add_argument("--max-attempts", dest="max_attempts", type=int, default=None)
    p_camp.add_argument("--config", default=None)
    p_camp.set_defaults(func=cmd_campaign)

    p_rep = sub.add_parser("report", help="re-render a report.json")
    p_rep.add_argument("--report", required=True)
    p_rep.add_argument("--format", choices=("json", "csv", "markdown"), default="markdown")
    p_rep.add_argument("--out", default=None)
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # fail loudly but with a clean exit path
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
