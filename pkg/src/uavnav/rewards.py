"""Composite episode rewards and group-relative advantage normalization.

Three scalar components, each in [0, 1], summed into a total in [0, 3]:
goal accuracy (piecewise exponential in the 2D distance to the truth
point), landmark IoU, and output-format adherence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import BBox, MapMeta, Point2D, distance, px_to_m
from .parsing import ParsedOutput

GROUP_EPSILON = 1e-8


@dataclass(frozen=True)
class RewardParams:
    """Goal-reward shape: success radius, cutoff radius, decay temperature (meters)."""

    d_success: float = 20.0
    d_cutoff: float = 80.0
    tau: float = 100.0

    def __post_init__(self):
        if not (0 < self.d_success < self.d_cutoff):
            raise ValueError(
                f"need 0 < d_success < d_cutoff, got {self.d_success}, {self.d_cutoff}"
            )
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class RewardBreakdown:
    goal: float
    iou: float
    format: float
    total: float


def goal_reward(pred: Point2D, truth: Point2D, params: RewardParams = RewardParams()) -> float:
    """1 inside d_success, exp(-(d - d_success)/tau) out to d_cutoff, else 0.

    Both boundaries are inclusive: d == d_success scores 1, d == d_cutoff
    falls on the exponential branch. The function jumps to 0 past d_cutoff.
    """
    d = distance(pred, truth)
    if d <= params.d_success:
        return 1.0
    if d <= params.d_cutoff:
        return math.exp(-(d - params.d_success) / params.tau)
    return 0.0


def iou(a: BBox, b: BBox) -> float:
    """Continuous intersection-over-union of two boxes (0 for an empty union)."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def iou_reward(parsed: ParsedOutput, truth_bbox: BBox) -> float:
    """IoU between the predicted landmark box and the truth box; 0 if none predicted."""
    if truth_bbox.area <= 0:
        raise ValueError(f"truth bbox has zero area: {truth_bbox}")
    if parsed.landmark_bbox is None:
        return 0.0
    return iou(parsed.landmark_bbox, truth_bbox)


def format_reward(parsed: ParsedOutput) -> float:
    """0.5 for both tags, 0.25 for a bbox in think, 0.25 for a target in answer.

    The three bullets are independent: a lone think tag carrying a bbox
    scores 0.25 even without an answer tag.
    """
    score = 0.0
    if parsed.has_think_tag and parsed.has_answer_tag:
        score += 0.5
    if parsed.landmark_bbox is not None:
        score += 0.25
    if parsed.target_location is not None:
        score += 0.25
    return score


def total_reward(
    parsed: ParsedOutput,
    truth_point: Point2D,
    truth_bbox: BBox,
    meta: MapMeta,
    params: RewardParams = RewardParams(),
) -> RewardBreakdown:
    """Score one parsed output against episode truth; total is the exact sum.

    The predicted pixel target converts to meters through the map scale
    before the goal term; a missing prediction scores goal = 0 rather
    than raising, so every rollout yields a scalar.
    """
    if parsed.target_location is None:
        goal = 0.0
    else:
        goal = goal_reward(px_to_m(parsed.target_location, meta), truth_point, params)
    iou_score = iou_reward(parsed, truth_bbox)
    fmt = format_reward(parsed)
    return RewardBreakdown(goal=goal, iou=iou_score, format=fmt, total=goal + iou_score + fmt)


def group_advantages(rewards: Sequence[float], epsilon: float = GROUP_EPSILON) -> list[float]:
    """Standardize rewards within one rollout group: (r - mean) / population std.

    Groups with population std below epsilon get all-zero advantages
    instead of a division blow-up. Requires at least two rewards.
    """
    if len(rewards) < 2:
        raise ValueError(f"need at least 2 rewards in a group, got {len(rewards)}")
    arr = np.asarray(rewards, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("rewards must be finite")
    std = float(arr.std())
    if std < epsilon:
        return [0.0] * len(arr)
    mean = float(arr.mean())
    return [(float(r) - mean) / std for r in arr]
