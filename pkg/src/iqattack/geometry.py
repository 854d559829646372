"""Feasible-box projections, polar-arc candidates, and the single-step attack.

A step starts from an anchor point inside the feasible box, finds a primary
direction whose box-projected endpoint already crosses the target score
boundary, then rotates along a polar arc between that endpoint and a bounded
orthogonal direction, keeping the farthest-rotated candidate that still
crosses the boundary (the smallest move that stays adversarial).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .directions import (
    AMPLITUDE_RANGE,
    DegenerateDirectionError,
    Direction,
    EmptyAttackRegionError,
    TextureBank,
    sample_orthogonal_direction,
)
from .jnd import JndBox
from .oracle import BudgetExceededError

COARSE_STEPS = 8
REFINEMENTS = 4
EARLY_STOP_GAP = 1.0 / 400.0


class ProjectionCollapsedError(ValueError):
    """The box projection of a direction is numerically zero."""


@dataclass(frozen=True)
class ProjectedFrame:
    """Anchor plus an orthogonal (unit, bounded) direction pair and a reach.

    Invariants: ``unit_dir`` has unit norm, ``anchor + reach * unit_dir`` and
    ``anchor +/- reach * ortho_dir`` lie in the box, and the two directions
    are orthogonal up to the tilt introduced by clamping.
    """

    anchor: np.ndarray
    unit_dir: np.ndarray
    ortho_dir: np.ndarray
    reach: float
    box: JndBox


@dataclass
class StepResult:
    """Outcome of one single-step attack."""

    x_next: np.ndarray
    intensity: float
    queries_used: int
    theta_star: Optional[float]
    status: str  # "success" | "exhausted"
    achieved: bool  # x_next verified to cross the final intensity boundary
    score_next: Optional[float] = None


@dataclass
class StepContext:
    """Everything a single-step attack needs from the surrounding driver."""

    query: Callable[[np.ndarray], float]
    query_count: Callable[[], int]
    success: Callable[[float, float], bool]  # (score, intensity) -> crossed?
    bank: TextureBank
    mask: np.ndarray
    box: JndBox
    x0: np.ndarray
    rng: np.random.Generator
    max_attempts: int = 200
    early_stop_gap: float = EARLY_STOP_GAP
    coarse_steps: int = COARSE_STEPS
    refinements: int = REFINEMENTS
    low_freq_fraction: float = 1.0 / 16.0
    _masked_donors: Optional[list] = field(default=None, repr=False)

    def masked_donors(self) -> list:
        """Donors pre-multiplied by the mask; multiplying by the scalar
        amplitude afterwards reproduces ``sample_texture_direction`` bitwise
        (mask entries are exactly 0/1)."""
        if self._masked_donors is None:
            mask3 = np.asarray(self.mask, dtype=np.float64)[:, :, None]
            self._masked_donors = [donor * mask3 for donor in self.bank.donors]
        return self._masked_donors


def project_primary_direction(
    anchor: np.ndarray, raw_dir: Direction, box: JndBox
) -> tuple[Direction, float]:
    """Clamp a raw direction so the anchor plus the result stays in the box.

    Componentwise clamping onto an axis-aligned box minimizes every separable
    p-norm distance to the raw direction simultaneously. Returns the unit
    direction and the Euclidean reach of the clamped step.
    """
    clamped = np.clip(raw_dir.vec, box.lo - anchor, box.hi - anchor)
    reach = float(np.linalg.norm(clamped))
    if reach < 1e-9:
        raise ProjectionCollapsedError("projection collapsed: no feasible step remains")
    return Direction(clamped / reach, "unit"), reach


def project_orthogonal_direction(
    anchor: np.ndarray, unit_dir: Direction, reach: float, box: JndBox
) -> Direction:
    """Bound a unit direction so the anchor +/- reach times it stays in the box.

    Each component is clamped to the two-sided slack at its pixel, then
    rescaled by the reach, so the result has norm at most 1.
    """
    if reach <= 0:
        raise ValueError("reach must be positive")
    slack = np.maximum(0.0, np.minimum(box.hi - anchor, anchor - box.lo))
    scaled = reach * unit_dir.vec
    bounded = np.clip(scaled, -slack, slack)
    if float(np.abs(bounded).max()) == 0.0:
        raise ProjectionCollapsedError("orthogonal direction collapsed to zero")
    if np.array_equal(bounded, scaled):
        # Clamp inactive: hand back the direction untouched instead of a
        # multiply/divide round trip that would wobble the last ulp.
        return Direction(unit_dir.vec.copy(), "raw")
    return Direction(bounded / reach, "raw")


def arc_point(frame: ProjectedFrame, theta: float) -> np.ndarray:
    """Polar-arc candidate at angle ``theta``, clamped into the feasible box.

    The raw arc point is ``anchor + reach*cos(theta) * (unit_dir*cos(theta)
    + ortho_dir*sin(theta))``. When both projections clamped the same pixel
    in the same sign the raw point can leave the box at small ``|theta|``,
    so the result is clamped elementwise; the clamp also swallows the
    floating-point dust that exact box-face arithmetic leaves behind.
    """
    if not (-math.pi <= theta <= math.pi):
        raise ValueError("theta must lie in [-pi, pi]")
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    raw = frame.anchor + (frame.reach * cos_t) * (
        cos_t * frame.unit_dir + sin_t * frame.ortho_dir
    )
    return frame.box.clip(raw)


def search_arc(
    frame: ProjectedFrame,
    is_success: Callable[[np.ndarray], bool],
    coarse_steps: int = COARSE_STEPS,
    refinements: int = REFINEMENTS,
) -> tuple[float, int]:
    """Largest-|theta| successful arc angle: coarse descending grid, then bisection.

    The caller guarantees theta = 0 succeeds, so 0 is the fallback when no
    grid point does. Grid magnitudes are (pi/2) * (coarse_steps - t) /
    coarse_steps for t = 1.., tried largest first with + before - at each
    magnitude; the first hit is refined toward the next larger magnitude.
    """
    evals = 0
    failed_mag = math.pi / 2.0
    best = 0.0
    for t in range(1, coarse_steps):
        mag = (math.pi / 2.0) * (coarse_steps - t) / coarse_steps
        hit = False
        for sign in (1.0, -1.0):
            evals += 1
            if is_success(arc_point(frame, sign * mag)):
                best = sign * mag
                hit = True
                break
        if hit:
            break
        failed_mag = mag
    if best == 0.0:
        return 0.0, evals

    sign = 1.0 if best > 0 else -1.0
    lo, hi = abs(best), failed_mag
    for _ in range(refinements):
        mid = 0.5 * (lo + hi)
        evals += 1
        if is_success(arc_point(frame, sign * mid)):
            lo = mid
            best = sign * mid
        else:
            hi = mid
    return best, evals


def single_step_attack(
    x_prev: np.ndarray, intensity: float, intensity_prev: float, ctx: StepContext
) -> StepResult:
    """One adaptive boundary-crossing step from ``x_prev``.

    Re-samples the masked texture direction until its box-projected endpoint
    crosses the ``intensity`` boundary, lowering the intensity halfway toward
    ``intensity_prev`` whenever ``max_attempts`` consecutive tries fail and
    raising it by the current gap when the endpoint overshoots the boundary
    at ``intensity + 2 * gap`` (the overshoot test reuses the same score).
    Then it rotates along the arc to the farthest angle that still crosses.

    Returns an exhausted result when the intensity gap shrinks below
    ``early_stop_gap`` after a decrease, or when the query budget dies
    mid-step; ``x_next`` is then the best boundary-crossing point found so
    far, or ``x_prev`` when there is none.
    """
    if intensity <= intensity_prev:
        raise ValueError("intensity must exceed the previous effective intensity")
    used_before = ctx.query_count()
    gamma = intensity
    best_x = x_prev
    best_score: Optional[float] = None
    best_achieved = False

    def result(status, theta=None):
        return StepResult(
            x_next=best_x,
            intensity=gamma,
            queries_used=ctx.query_count() - used_before,
            theta_star=theta,
            status=status,
            achieved=best_achieved,
            score_next=best_score,
        )

    masked_donors = ctx.masked_donors()
    lo_rel = ctx.box.lo - x_prev
    hi_rel = ctx.box.hi - x_prev
    if not np.any(ctx.mask):
        raise EmptyAttackRegionError("empty attack region: mask has no positive pixels")

    try:
        while True:
            # Find a primary endpoint that crosses the current boundary.
            endpoint = None
            attempts = 0
            while attempts <= ctx.max_attempts:
                # Same draws and arithmetic as sample_texture_direction +
                # project_primary_direction, without the per-attempt remask.
                index = int(ctx.rng.integers(len(masked_donors)))
                amplitude = float(ctx.rng.uniform(-AMPLITUDE_RANGE, AMPLITUDE_RANGE))
                clamped = np.clip(amplitude * masked_donors[index], lo_rel, hi_rel)
                reach = float(np.linalg.norm(clamped.ravel()))
                if reach < 1e-9:
                    attempts += 1
                    continue
                x_u = ctx.box.clip(x_prev + clamped)
                score_u = ctx.query(x_u)
                if ctx.success(score_u, gamma):
                    endpoint = (Direction(clamped / reach, "unit"), reach, x_u, score_u)
                    break
                attempts += 1
            if endpoint is not None:
                break
            # Too hard: pull the boundary halfway back toward the last one.
            gamma = gamma - (gamma - intensity_prev) / 2.0
            if gamma - intensity_prev < ctx.early_stop_gap:
                return result("exhausted")

        unit, reach, x_u, score_u = endpoint
        best_x, best_score, best_achieved = x_u, score_u, True

        # Too easy: the same endpoint overshoots a boundary two gaps further
        # out, so move the target up by one gap (no extra query needed).
        gap = gamma - intensity_prev
        if ctx.success(score_u, gamma + 2.0 * gap):
            gamma = gamma + gap

        try:
            ortho_raw = sample_orthogonal_direction(
                ctx.x0, unit, ctx.rng, ctx.low_freq_fraction
            )
            ortho = project_orthogonal_direction(x_prev, ortho_raw, reach, ctx.box)
        except (DegenerateDirectionError, ProjectionCollapsedError):
            # No usable orthogonal direction; the primary endpoint stands.
            return result("success")

        frame = ProjectedFrame(
            anchor=x_prev, unit_dir=unit.vec, ortho_dir=ortho.vec, reach=reach, box=ctx.box
        )

        def crossed(img: np.ndarray) -> bool:
            nonlocal best_x, best_score
            score = ctx.query(img)
            ok = ctx.success(score, gamma)
            if ok:
                best_x, best_score = img, score
            return ok

        theta, _ = search_arc(frame, crossed, ctx.coarse_steps, ctx.refinements)
        if theta == 0.0:
            best_x, best_score = x_u, score_u
        return result("success", theta)
    except BudgetExceededError:
        return result("exhausted")
