"""Per-episode navigation outcomes and the four-column summary (NE, SR, OSR, SPL)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .geometry import distance
from .types import EpisodeSpec, Trajectory

SUCCESS_RADIUS = 20.0


@dataclass(frozen=True)
class EpisodeResult:
    """Outcome of one trajectory against its episode truth.

    shortest_path is the straight-line distance from the start position
    to the truth target; the environment has no obstacles, so the
    geodesic is the straight line.
    """

    nav_error: float
    success: bool
    oracle_success: bool
    path_length: float
    shortest_path: float

    def __post_init__(self):
        if self.nav_error < 0 or self.path_length < 0 or self.shortest_path < 0:
            raise ValueError("distances must be >= 0")
        if self.success and not self.oracle_success:
            raise ValueError("success implies oracle_success")


@dataclass(frozen=True)
class MetricsSummary:
    mean_ne: float
    sr: float
    osr: float
    spl: float
    episode_count: int


def episode_result(
    trajectory: Trajectory,
    episode: EpisodeSpec,
    success_radius: float = SUCCESS_RADIUS,
) -> EpisodeResult:
    """Score one trajectory: 2D final error, stop-gated success, ever-close flag.

    success needs an executed Stop within success_radius of the truth;
    oracle_success only needs some pose within that radius, stopped or
    not. Altitude never enters any distance.
    """
    if not trajectory.poses:
        raise ValueError("trajectory has no poses")
    truth = episode.truth_target
    nav_error = distance(trajectory.final_pose.position, truth)
    oracle_success = any(
        distance(pose.position, truth) <= success_radius for pose in trajectory.poses
    )
    return EpisodeResult(
        nav_error=nav_error,
        success=trajectory.stopped and nav_error <= success_radius,
        oracle_success=oracle_success,
        path_length=trajectory.path_length,
        shortest_path=distance(episode.initial.position, truth),
    )


def summarize(results: Sequence[EpisodeResult]) -> MetricsSummary:
    """Aggregate episode results into mean NE and percent SR / OSR / SPL.

    SPL weights each success by shortest / max(shortest, path); an
    episode that starts on the target (both lengths 0) counts as ratio 1.
    """
    if not results:
        raise ValueError("no results to summarize")
    n = len(results)
    spl_sum = 0.0
    for r in results:
        if not r.success:
            continue
        denom = max(r.shortest_path, r.path_length)
        spl_sum += 1.0 if denom == 0 else r.shortest_path / denom
    return MetricsSummary(
        mean_ne=sum(r.nav_error for r in results) / n,
        sr=100.0 * sum(r.success for r in results) / n,
        osr=100.0 * sum(r.oracle_success for r in results) / n,
        spl=100.0 * spl_sum / n,
        episode_count=n,
    )
