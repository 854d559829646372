"""Acceptance gate: one test per shipping criterion, each printing a
PASS line with the measured numbers when it holds.

The expensive fixtures run once per session: a 24-image default-settings
campaign against the native sharpness scorer, with every intermediate
attack point re-verified through a fresh oracle handle while it is still
in memory.
"""

import itertools
import json
import math
import os
import time
from types import SimpleNamespace

import numpy as np
import pytest

from iqattack import metrics
from iqattack.boundary import AttackConfig, IntensityLadder, LadderEntry, is_success
from iqattack.directions import Direction
from iqattack.geometry import (
    ProjectedFrame,
    StepContext,
    arc_point,
    project_orthogonal_direction,
    project_primary_direction,
    single_step_attack,
)
from iqattack.harness import CampaignConfig, load_crop, load_dataset, run_campaign
from iqattack.imageops import load_png, mbd_transform
from iqattack.jnd import JndBox, jnd_box, jnd_threshold
from iqattack.oracle import OracleHandle, make_oracle
from iqattack.synthetic import make_corpus, write_corpus

from oracles import exact_mbd, kendall_exhaustive, spearman_exhaustive

DEFAULT_BUDGET = 8000


def report_line(criterion, detail):
    print(f"\n[criterion {criterion}] PASS: {detail}")


@pytest.fixture(scope="session")
def full_campaign(tmp_path_factory):
    """Default-settings campaign over the 24-image synthetic corpus."""
    corpus_dir = tmp_path_factory.mktemp("acceptance-corpus")
    out_dir = tmp_path_factory.mktemp("acceptance-out")
    csv_path = write_corpus(corpus_dir, count=24, size=(224, 224), seed=7)

    cfg = CampaignConfig(
        oracle_spec="native:sharpness",
        budget=DEFAULT_BUDGET,
        output_dir=str(out_dir),
        workers=4,
        seed=0,
        attack=AttackConfig(keep_trace_images=True),
    )
    manifest = load_dataset(corpus_dir, csv_path, crop_seed=0, crop_size=224)

    records = {}

    def verify_outcome(image_id, x0, outcome):
        fresh = make_oracle(cfg.oracle_spec, budget=None)
        score0 = fresh.score(x0)
        box = jnd_box(x0, jnd_threshold(x0))
        chain = []
        for entry in outcome.trace:
            if entry.achieved and entry.x is not None:
                requery_ok = is_success(
                    score0, fresh.score(entry.x), entry.intensity, outcome.side
                )
                chain.append((entry.intensity, requery_ok, box.contains(entry.x)))
        accounting = 1 + sum(e.queries for e in outcome.trace) == outcome.total_queries
        records[image_id] = SimpleNamespace(
            score0=score0,
            chain=chain,
            accounting_exact=accounting,
            total_queries=outcome.total_queries,
            stopped_reason=outcome.stopped_reason,
            side=outcome.side,
            score_before=outcome.score_before,
            score_after=outcome.score_after,
        )

    started = time.monotonic()
    report = run_campaign(cfg, manifest, on_outcome=verify_outcome)
    wall = time.monotonic() - started
    return SimpleNamespace(
        cfg=cfg,
        manifest=manifest,
        report=report,
        records=records,
        wall_seconds=wall,
        corpus_dir=str(corpus_dir),
    )


def test_criterion_01_jnd_containment_after_png_roundtrip(full_campaign):
    violations = 0
    pixels = 0
    for entry in full_campaign.manifest.entries:
        x0 = load_crop(entry)
        row = next(r for r in full_campaign.report.rows if r.image_id == entry.image_id)
        adv = load_png(os.path.join(full_campaign.cfg.output_dir, row.png_path))
        box = jnd_box(x0, jnd_threshold(x0))
        inside = (adv >= box.lo) & (adv <= box.hi)
        pixels += inside.size
        violations += int(inside.size - int(inside.sum()))
    assert violations == 0
    assert full_campaign.wall_seconds < 300.0
    report_line(
        1,
        f"0/{pixels} pixels escaped their feasible boxes after PNG round-trip "
        f"(campaign wall time {full_campaign.wall_seconds:.0f}s < 300s)",
    )


def test_criterion_02_intensity_success_chain(full_campaign):
    steps = 0
    for image_id, rec in full_campaign.records.items():
        for intensity, requery_ok, contained in rec.chain:
            assert requery_ok, f"{image_id}: step at intensity {intensity} failed re-query"
            assert contained, f"{image_id}: step at intensity {intensity} left the box"
            steps += 1
    assert steps > 0
    report_line(2, f"{steps}/{steps} achieved steps re-verified against a fresh oracle")


def test_criterion_03_query_budget(full_campaign):
    for image_id, rec in full_campaign.records.items():
        assert rec.total_queries <= DEFAULT_BUDGET, image_id
        assert rec.accounting_exact, image_id
    report_line(
        3,
        f"max queries {max(r.total_queries for r in full_campaign.records.values())} "
        f"<= {DEFAULT_BUDGET}; accounting identity exact on all 24 images",
    )


def test_criterion_04_rank_destruction(full_campaign):
    report = full_campaign.report
    assert report.pre.srocc == 1.0
    assert float(report.post.srocc) <= 0.6
    assert report.post.mae >= 8.0
    assert full_campaign.wall_seconds < 600.0
    report_line(
        4,
        f"pre SROCC {float(report.pre.srocc):.4f} -> post {float(report.post.srocc):.4f} "
        f"(<= 0.6), post MAE {report.post.mae:.2f} (>= 8)",
    )


def test_criterion_05_intensity_schedule_exactness():
    # Unattained ladder: the recurrence reproduces 0.01, 0.02, ..., N*0.01.
    ladder = IntensityLadder(start=0.01, max_len=20)
    produced = []
    for _ in range(20):
        target = ladder.next_intensity()
        produced.append(target)
        ladder.append(LadderEntry(target, True, 1, None, "success"))
    prev2, prev1 = 0.0, None
    for i, value in enumerate(produced):
        expected = 0.01 if prev1 is None else prev1 + (prev1 - prev2)
        assert value == expected  # bit-level on the recurrence
        assert abs(value - 0.01 * (i + 1)) < 1e-12
        if prev1 is not None:
            prev2 = prev1
        prev1 = value

    # Decrease arithmetic, bit-level: a constant oracle halves the gap
    # until it undercuts 1/400.
    x0 = np.full((16, 16, 3), 0.4)
    handle = OracleHandle(lambda img: 30.0, budget=10_000)
    score0 = handle.score(x0)
    ctx = _scripted_ctx(x0, handle, score0, max_attempts=3)
    step = single_step_attack(x0, 0.02, 0.01, ctx)
    expected_gamma = 0.02
    while True:
        expected_gamma = expected_gamma - (expected_gamma - 0.01) / 2.0
        if expected_gamma - 0.01 < 1.0 / 400.0:
            break
    assert step.status == "exhausted"
    assert step.intensity == expected_gamma

    # Increase arithmetic, bit-level: an overshooting endpoint lifts the
    # target by exactly one gap.
    def jumpy(img):
        return 30.0 if np.array_equal(img, x0) else 90.0

    handle2 = OracleHandle(jumpy, budget=1000)
    score0 = handle2.score(x0)
    ctx2 = _scripted_ctx(x0, handle2, score0, max_attempts=5)
    step2 = single_step_attack(x0, 0.02, 0.01, ctx2)
    assert step2.intensity == 0.02 + (0.02 - 0.01)
    report_line(5, "ladder recurrence, decrease, and increase all bit-exact")


def _scripted_ctx(x0, handle, score0, **overrides):
    from iqattack.boundary import Side
    from iqattack.directions import default_texture_bank

    defaults = dict(
        query=handle.score,
        query_count=lambda: handle.used,
        success=lambda s, g: is_success(score0, s, g, Side.LOW_QUALITY),
        bank=default_texture_bank(x0.shape, seed=0),
        mask=np.ones(x0.shape[:2], dtype=bool),
        box=jnd_box(x0, jnd_threshold(x0)),
        x0=x0,
        rng=np.random.default_rng(0),
    )
    defaults.update(overrides)
    return StepContext(**defaults)


def test_criterion_06_early_stop_against_constant_oracle():
    from iqattack.boundary import run_attack

    x0 = dict(make_corpus(4, (224, 224), 7))["gradient-00"]
    handle = OracleHandle(lambda img: 47.0, budget=DEFAULT_BUDGET)
    config = AttackConfig()  # defaults: 20 boundaries, 200 attempts
    outcome = run_attack(x0, handle, config)
    bound = 2 * config.max_attempts * config.boundary_count
    assert outcome.stopped_reason == "early-stop"
    assert outcome.total_queries < bound
    assert outcome.x_adv is x0
    assert outcome.score_after == outcome.score_before
    report_line(
        6, f"constant oracle: early-stop after {outcome.total_queries} queries (< {bound})"
    )


def test_criterion_07_metric_oracles(rng):
    cases = 0
    for a in itertools.product(range(1, 7), repeat=2):
        for b in itertools.product(range(1, 7), repeat=2):
            if len(set(a)) == 1 or len(set(b)) == 1:
                continue
            assert metrics.srocc(a, b) == spearman_exhaustive(a, b)
            assert metrics.krocc(a, b) == kendall_exhaustive(a, b)
            cases += 1
    gen = np.random.default_rng(99)
    for _ in range(4000):
        n = int(gen.integers(3, 7))
        a = list(gen.integers(1, 7, size=n))
        b = list(gen.integers(1, 7, size=n))
        if len(set(a)) == 1 or len(set(b)) == 1:
            continue
        assert metrics.srocc(a, b) == spearman_exhaustive(a, b), (a, b)
        assert metrics.krocc(a, b) == kendall_exhaustive(a, b), (a, b)
        cases += 1

    img = rng.random((32, 32, 3))
    assert abs(metrics.ssim(img, img) - 1.0) < 1e-9
    c1 = 1e-4
    closed_form = (2.0 * 0.5 * 0.6 + c1) / (0.25 + 0.36 + c1)
    measured = metrics.ssim(np.full((16, 16, 3), 0.5), np.full((16, 16, 3), 0.6))
    assert abs(measured - closed_form) < 1e-6
    report_line(
        7,
        f"rank metrics exact on {cases} enumerated cases; SSIM identity and "
        f"closed-form value within tolerance",
    )


def _aggressive_frame(gen):
    shape = (6, 6, 3)
    x0 = gen.uniform(0.1, 0.9, size=shape)
    m = gen.uniform(1.0 / 255.0, 32.0 / 255.0, size=shape)
    box = JndBox(lo=np.maximum(0.0, x0 - m), hi=np.minimum(1.0, x0 + m))
    raw = Direction(0.03 * gen.standard_normal(shape))
    unit, reach = project_primary_direction(x0, raw, box)
    vec = gen.standard_normal(shape).ravel()
    u = unit.vec.ravel()
    vec -= (vec @ u) * u
    vec /= np.linalg.norm(vec)
    ortho = project_orthogonal_direction(x0, Direction(vec.reshape(shape), "unit"), reach, box)
    clamped = not np.array_equal(ortho.vec, vec.reshape(shape))
    return ProjectedFrame(x0, unit.vec, ortho.vec, reach, box), clamped


def _gentle_frame(gen):
    shape = (6, 6, 3)
    anchor = gen.uniform(0.45, 0.55, size=shape)
    slack = gen.uniform(0.2, 0.4, size=shape)
    box = JndBox(lo=anchor - slack, hi=anchor + slack)
    raw = Direction(0.4 * slack * gen.uniform(-1.0, 1.0, size=shape))
    unit, reach = project_primary_direction(anchor, raw, box)
    vec = gen.standard_normal(shape).ravel()
    u = unit.vec.ravel()
    vec -= (vec @ u) * u
    vec /= np.linalg.norm(vec)
    ortho = project_orthogonal_direction(anchor, Direction(vec.reshape(shape), "unit"), reach, box)
    clamped = not np.array_equal(ortho.vec, vec.reshape(shape))
    return ProjectedFrame(anchor, unit.vec, ortho.vec, reach, box), clamped


def test_criterion_08_geometry_properties():
    gen = np.random.default_rng(2024)
    thetas = np.linspace(-math.pi, math.pi, 64)
    law_checked = 0
    for index in range(1000):
        frame, v_clamped = (
            _aggressive_frame(gen) if index % 10 < 7 else _gentle_frame(gen)
        )
        for theta in thetas:
            point = arc_point(frame, float(theta))
            assert frame.box.contains(point), f"frame {index}, theta {theta}"
        if not v_clamped:
            for theta in thetas:
                dist = float(np.linalg.norm(arc_point(frame, float(theta)) - frame.anchor))
                assert abs(dist - frame.reach * abs(math.cos(theta))) < 1e-6
            law_checked += 1
    assert law_checked >= 50
    report_line(
        8,
        f"1000 random frames x 64 angles stayed inside their boxes; distance law "
        f"held on {law_checked} unclamped frames",
    )


def test_criterion_09_mbs_matches_exact_oracle():
    gen = np.random.default_rng(31)
    worst = 1.0
    for trial in range(50):
        h = int(gen.integers(6, 11))
        w = int(gen.integers(6, 11))
        plane = gen.random((h, w))
        if trial % 2 == 0:  # include smooth grids, not just noise
            from iqattack.imageops import gaussian_blur

            plane = gaussian_blur(plane, 1.0)
        approx = mbd_transform(plane)
        exact = exact_mbd(plane)
        rho = metrics.srocc(approx.ravel(), exact.ravel())
        worst = min(worst, rho)
        assert rho >= 0.95, f"trial {trial}: spearman {rho:.4f}"
    report_line(9, f"raster-scan MBD vs exact oracle: worst per-grid Spearman {worst:.4f} >= 0.95")


def test_criterion_10_reproducibility(tmp_path_factory):
    corpus_dir = tmp_path_factory.mktemp("repro-corpus")
    csv_path = write_corpus(corpus_dir, count=6, size=(64, 64), seed=3)
    manifest = load_dataset(corpus_dir, csv_path, crop_seed=5, crop_size=64)

    digests = []
    for run in range(2):
        out_dir = tmp_path_factory.mktemp(f"repro-out-{run}")
        cfg = CampaignConfig(
            oracle_spec="native:sharpness",
            budget=500,
            output_dir=str(out_dir),
            workers=2,
            seed=17,
            attack=AttackConfig(boundary_count=4, max_attempts=10),
        )
        run_campaign(cfg, manifest)
        snapshot = {}
        for root, _, files in os.walk(out_dir):
            for name in files:
                path = os.path.join(root, name)
                rel = os.path.relpath(path, out_dir)
                with open(path, "rb") as fh:
                    snapshot[rel] = fh.read()
        # The output_dir differs between runs; normalize it out of the
        # config echo before comparing.
        parsed = json.loads(snapshot["report.json"])
        parsed["config"]["output_dir"] = "<out>"
        snapshot["report.json"] = json.dumps(parsed, sort_keys=True).encode()
        digests.append(snapshot)

    first, second = digests
    assert set(first) == set(second)
    for rel in sorted(first):
        assert first[rel] == second[rel], f"{rel} differs between identical runs"
    report_line(
        10, f"two identical campaigns produced byte-identical outputs ({len(first)} files)"
    )
