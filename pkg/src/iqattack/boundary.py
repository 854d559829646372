"""Score-boundary semantics, the adaptive intensity ladder, and the driver.

An attack on one image walks a ladder of score boundaries: each boundary is
the original score moved a fraction ``intensity`` of the way toward the
worst extreme for that image's side (100 for low-quality images, 0 for
high-quality ones). Boundary i+1 extrapolates the last two effective
intensities, so untouched ladders grow linearly and adapted ladders keep
their momentum.
"""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from .directions import TextureBank, combined_mask, default_texture_bank
from .geometry import StepContext, single_step_attack
from .jnd import jnd_box, jnd_threshold
from .oracle import BudgetExceededError, OracleHandle, OracleUnavailableError

log = logging.getLogger(__name__)

MOS_MAX = 100.0
MOS_MIN = 0.0
SPLIT_THRESHOLD = 50.0
START_INTENSITY = 0.01
BOUNDARY_COUNT = 20
MAX_ATTEMPTS = 200
EARLY_STOP_GAP = 1.0 / 400.0


class Side(Enum):
    """Which way an image's score gets pushed."""

    LOW_QUALITY = 1  # predicted low quality; push the score up
    HIGH_QUALITY = -1  # predicted high quality; push the score down

    @property
    def sign(self) -> int:
        return self.value


def side_of(score0: float, split_threshold: float = SPLIT_THRESHOLD) -> Side:
    """High-quality side iff the original score strictly exceeds the split."""
    return Side.HIGH_QUALITY if score0 > split_threshold else Side.LOW_QUALITY


def success_threshold(score0: float, intensity: float, side: Side) -> float:
    """Score level a perturbed image must cross for an intensity-success."""
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    target = MOS_MAX if side is Side.LOW_QUALITY else MOS_MIN
    return score0 + intensity * (target - score0)


def is_success(score0: float, score_adv: float, intensity: float, side: Side) -> bool:
    """Strict boundary crossing: above the threshold for low, below for high."""
    threshold = success_threshold(score0, intensity, side)
    if side is Side.LOW_QUALITY:
        return score_adv > threshold
    return score_adv < threshold


@dataclass
class LadderEntry:
    """One completed (or aborted) boundary step."""

    intensity: float
    achieved: bool
    queries: int
    theta: Optional[float]
    status: str
    score: Optional[float] = None
    x: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "intensity": self.intensity,
            "achieved": self.achieved,
            "queries": self.queries,
            "theta": self.theta,
            "status": self.status,
            "score": self.score,
        }


class IntensityLadder:
    """Ordered boundary intensities with per-step achievement records.

    ``next_intensity`` extrapolates the last two effective intensities
    (with a 0 sentinel before the first); the very first boundary is the
    configured start intensity itself.
    """

    def __init__(
        self,
        start: float = START_INTENSITY,
        max_len: int = BOUNDARY_COUNT,
        early_stop_gap: float = EARLY_STOP_GAP,
    ):
        if start <= 0:
            raise ValueError("start intensity must be positive")
        self.start = start
        self.max_len = max_len
        self.early_stop_gap = early_stop_gap
        self.entries: List[LadderEntry] = []

    def last_effective(self) -> float:
        return self.entries[-1].intensity if self.entries else 0.0

    def next_intensity(self) -> float:
        if not self.entries:
            return self.start
        latest = self.entries[-1].intensity
        previous = self.entries[-2].intensity if len(self.entries) >= 2 else 0.0
        return latest + (latest - previous)

    def append(self, entry: LadderEntry) -> None:
        if entry.intensity <= self.last_effective():
            raise ValueError("ladder intensities must be strictly increasing")
        self.entries.append(entry)


@dataclass
class AttackConfig:
    """Attack hyperparameters; defaults match the standard setting."""

    boundary_count: int = BOUNDARY_COUNT
    start_intensity: float = START_INTENSITY
    max_attempts: int = MAX_ATTEMPTS
    early_stop_gap: float = EARLY_STOP_GAP
    split_threshold: float = SPLIT_THRESHOLD
    saliency_thresh: float = 0.1
    edge_low: float = 0.1
    edge_high: float = 0.2
    coarse_steps: int = 8
    refinements: int = 4
    low_freq_fraction: float = 1.0 / 16.0
    seed: int = 0
    keep_trace_images: bool = False


@dataclass
class AttackOutcome:
    """Final adversarial image plus the full per-step trace."""

    x_adv: np.ndarray
    score_before: Optional[float]
    score_after: Optional[float]
    trace: List[LadderEntry]
    total_queries: int
    stopped_reason: str  # "ladder-complete" | "early-stop" | "budget"
    side: Optional[Side] = None
    error: Optional[str] = None

    def trace_dict(self) -> dict:
        return {
            "score_before": self.score_before,
            "score_after": self.score_after,
            "side": self.side.name if self.side else None,
            "ladder": [e.to_dict() for e in self.trace],
            "total_queries": self.total_queries,
            "stopped_reason": self.stopped_reason,
            "error": self.error,
        }


def run_attack(
    x0: np.ndarray,
    oracle: OracleHandle,
    config: AttackConfig = AttackConfig(),
    bank: Optional[TextureBank] = None,
    rng: Optional[np.random.Generator] = None,
) -> AttackOutcome:
    """Iterative boundary attack on one image.

    Scores the original once, fixes the side and the feasible box, then
    walks up to ``boundary_count`` boundaries, carrying adapted intensities
    forward. Stops early when a step's intensity gap shrinks below the
    early-stop gap, or when the budget dies; the returned image is the last
    boundary-crossing point (the original if there is none).
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng(config.seed)

    try:
        score0 = oracle.score(x0)
    except BudgetExceededError:
        return AttackOutcome(x0, None, None, [], oracle.used, "budget")
    except OracleUnavailableError as exc:
        return AttackOutcome(x0, None, None, [], oracle.used, "budget", error=str(exc))

    side = side_of(score0, config.split_threshold)
    box = jnd_box(x0, jnd_threshold(x0, config.edge_low, config.edge_high))
    mask = combined_mask(x0, config.saliency_thresh, config.edge_low, config.edge_high)
    if not mask.any():
        log.warning("combined mask is empty; attacking the whole image instead")
        mask = np.ones(mask.shape, dtype=bool)
    if bank is None:
        bank = default_texture_bank(x0.shape, seed=config.seed)

    ctx = StepContext(
        query=oracle.score,
        query_count=lambda: oracle.used,
        success=lambda score, intensity: is_success(score0, score, intensity, side),
        bank=bank,
        mask=mask,
        box=box,
        x0=x0,
        rng=rng,
        max_attempts=config.max_attempts,
        early_stop_gap=config.early_stop_gap,
        coarse_steps=config.coarse_steps,
        refinements=config.refinements,
        low_freq_fraction=config.low_freq_fraction,
    )

    ladder = IntensityLadder(config.start_intensity, config.boundary_count, config.early_stop_gap)
    x_cur = x0
    score_cur = score0
    stopped = "ladder-complete"
    error = None
    for _ in range(config.boundary_count):
        target = ladder.next_intensity()
        before = oracle.used
        try:
            step = single_step_attack(x_cur, target, ladder.last_effective(), ctx)
        except OracleUnavailableError as exc:
            stopped, error = "budget", str(exc)
            break
        entry = LadderEntry(
            intensity=step.intensity,
            achieved=step.achieved,
            queries=oracle.used - before,
            theta=step.theta_star,
            status=step.status,
            score=step.score_next,
            x=step.x_next if (step.achieved and config.keep_trace_images) else None,
        )
        ladder.append(entry)
        if step.achieved:
            x_cur = step.x_next
            score_cur = step.score_next
        if step.status == "exhausted":
            stopped = "budget" if oracle.exhausted else "early-stop"
            break

    return AttackOutcome(
        x_adv=x_cur,
        score_before=score0,
        score_after=score_cur,
        trace=ladder.entries,
        total_queries=oracle.used,
        stopped_reason=stopped,
        side=side,
        error=error,
    )


def per_image_rng(campaign_seed: int, image_id: str) -> np.random.Generator:
    """Deterministic generator for one image of a campaign."""
    tag = zlib.crc32(image_id.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([campaign_seed, tag]))


def attack_many(
    images: Sequence[tuple[str, np.ndarray]],
    oracle_factory: Callable[[], OracleHandle],
    config: AttackConfig = AttackConfig(),
    bank: Optional[TextureBank] = None,
    workers: int = 1,
    on_outcome: Optional[Callable[[str, np.ndarray, AttackOutcome], None]] = None,
) -> dict[str, AttackOutcome]:
    """Attack a list of (id, image) pairs, one oracle handle per image.

    Each image gets a generator derived from (config.seed, id), so results
    do not depend on worker count or scheduling order.
    """

    def one(item):
        image_id, img = item
        outcome = run_attack(
            img,
            oracle_factory(),
            config,
            bank=bank,
            rng=per_image_rng(config.seed, image_id),
        )
        if on_outcome is not None:
            on_outcome(image_id, img, outcome)
        return image_id, outcome

    if workers <= 1:
        results = [one(item) for item in images]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, images))
    return dict(results)
