"""Batch orchestration behind the CLI: run, score, and the misc commands."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .citygen import gen_synthetic_city
from .env import run_episode
from .files import (
    format_metrics_line,
    load_episodes,
    load_map,
    load_outputs,
    load_sft_samples,
    save_episodes,
    save_map,
    save_metrics,
    save_results_csv,
    save_sft_samples,
    save_trace_csv,
    save_trajectories,
)
from .geometry import Point2D
from .metrics import EpisodeResult, MetricsSummary, episode_result, summarize
from .parsing import parse_output
from .policies import EndpointConfig, make_policy
from .rendering import render_map
from .rewards import RewardParams, group_advantages, total_reward
from .sft import FilterReport, filter_sft
from .judge import judge_many
from .toytrain import ToyPolicyParams, train_toy_grpo
from .types import EpisodeSpec, MotionParams, Trajectory

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """Everything one evaluation run needs, serializable as flat JSON."""

    episodes_path: str
    map_path: str
    output_dir: str
    policy_kind: str = "oracle"
    sigma: float = 0.0
    endpoint: Optional[EndpointConfig] = None
    motion: MotionParams = field(default_factory=MotionParams)
    reward: RewardParams = field(default_factory=RewardParams)
    parallelism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")
        # Cross-module sanity: a stop inside stop_radius must count as a
        # success, so the planner's radius has to sit inside the scorer's.
        if self.motion.stop_radius >= self.reward.d_success:
            raise ValueError(
                f"stop_radius ({self.motion.stop_radius}) must be smaller than "
                f"d_success ({self.reward.d_success})"
            )
        if self.policy_kind == "remote" and self.endpoint is None:
            raise ValueError("remote policy requires endpoint settings")


def episode_seed(run_seed: int, episode_id: str) -> int:
    """Stable per-episode seed, independent of scheduling order."""
    digest = hashlib.sha256(f"{run_seed}:{episode_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _policy_for(config: RunConfig, episode: EpisodeSpec):
    return make_policy(
        config.policy_kind,
        sigma=config.sigma,
        seed=episode_seed(config.seed, episode.id),
        config=config.endpoint,
    )


def run_batch(
    episodes: Sequence[EpisodeSpec], config: RunConfig
) -> list["tuple[EpisodeSpec, Trajectory]"]:
    """Run every episode, fanning out across a bounded worker pool.

    Each episode gets its own policy instance seeded from the run seed
    and the episode id, so results do not depend on the parallelism
    level or completion order.
    """

    def one(episode: EpisodeSpec) -> "tuple[EpisodeSpec, Trajectory]":
        policy = _policy_for(config, episode)
        return episode, run_episode(episode, policy, config.motion)

    if config.parallelism == 1:
        return [one(ep) for ep in episodes]
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        return list(pool.map(one, episodes))


def cmd_run(config: RunConfig) -> MetricsSummary:
    """Evaluate a policy over an episode file and write all run artifacts.

    Writes trajectories.jsonl, results.csv, metrics.csv, metrics.md, and
    manifest.json (the only artifact carrying timestamps) into
    output_dir. Episodes whose policy failed are recorded with their
    error and still scored from the partial trajectory.
    """
    started = time.time()
    for path in (config.episodes_path, config.map_path):
        if not Path(path).exists():
            raise FileNotFoundError(f"input not found: {path}")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    city = load_map(config.map_path)
    episodes = load_episodes(config.episodes_path, city)
    if not episodes:
        raise ValueError(f"no usable episodes in {config.episodes_path}")

    pairs = run_batch(episodes, config)
    results = [(ep.id, episode_result(traj, ep), traj.error) for ep, traj in pairs]
    summary = summarize([r for _, r, _ in results])

    save_trajectories([(ep.id, traj) for ep, traj in pairs], out_dir / "trajectories.jsonl")
    save_results_csv(results, out_dir / "results.csv")
    save_metrics(summary, out_dir / "metrics.csv", out_dir / "metrics.md")
    manifest = {
        "config": _config_to_json(config),
        "package_version": __version__,
        "started_at": started,
        "finished_at": time.time(),
        "episodes_run": len(pairs),
        "episodes_failed": sum(1 for _, traj in pairs if traj.error),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    log.info("run complete: %s", format_metrics_line(summary))
    return summary


def _config_to_json(config: RunConfig) -> dict:
    doc = dataclasses.asdict(config)
    if config.endpoint is not None:
        # Keep the env var NAME only; the key value must never be persisted.
        doc["endpoint"] = dataclasses.asdict(config.endpoint)
    return doc


def cmd_score(
    outputs_path: "str | Path",
    episodes_path: "str | Path",
    map_path: "str | Path",
    out_path: "str | Path",
    reward_params: RewardParams = RewardParams(),
) -> list[dict]:
    """Score raw model outputs against episode truth into a reward CSV.

    Each input line references an episode id; unknown ids become error
    rows. Lines sharing a group_id of size >= 2 additionally get
    group-relative advantages over their totals.
    """
    city = load_map(map_path)
    episodes = {ep.id: ep for ep in load_episodes(episodes_path, city)}
    rows = []
    for record in load_outputs(outputs_path):
        ep = episodes.get(record["episode_id"])
        row = {
            "episode_id": record["episode_id"],
            "group_id": record["group_id"],
            "goal": None,
            "iou": None,
            "format": None,
            "total": None,
            "advantage": None,
            "error": None,
        }
        if ep is None:
            row["error"] = "unknown episode id"
        else:
            parsed = parse_output(record["raw_output"])
            breakdown = total_reward(
                parsed, ep.truth_target, ep.truth_landmark.bbox, city.meta, reward_params
            )
            row.update(
                goal=breakdown.goal,
                iou=breakdown.iou,
                format=breakdown.format,
                total=breakdown.total,
            )
        rows.append(row)

    _attach_group_advantages(rows)
    _write_score_csv(rows, out_path)
    return rows


def _attach_group_advantages(rows: list[dict]) -> None:
    groups: dict[str, list[int]] = {}
    for i, row in enumerate(rows):
        if row["group_id"] is not None and row["total"] is not None:
            groups.setdefault(row["group_id"], []).append(i)
    for indices in groups.values():
        if len(indices) < 2:
            continue
        advantages = group_advantages([rows[i]["total"] for i in indices])
        for i, adv in zip(indices, advantages):
            rows[i]["advantage"] = adv


def _write_score_csv(rows: list[dict], out_path: "str | Path") -> None:
    def fmt(value) -> str:
        return "" if value is None else (f"{value:.6f}" if isinstance(value, float) else str(value))

    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode_id", "group_id", "goal", "iou", "format", "total", "advantage", "error"])
        for row in rows:
            writer.writerow(
                [
                    row["episode_id"],
                    row["group_id"] or "",
                    fmt(row["goal"]),
                    fmt(row["iou"]),
                    fmt(row["format"]),
                    fmt(row["total"]),
                    fmt(row["advantage"]),
                    row["error"] or "",
                ]
            )


def cmd_gen_city(
    seed: int,
    extent: float,
    n_landmarks: int,
    n_episodes: int,
    out_dir: "str | Path",
    meters_per_pixel: float = 1.0,
) -> "tuple[Path, Path]":
    """Generate a synthetic city and write map.json + episodes.jsonl."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    city, episodes = gen_synthetic_city(
        seed=seed,
        extent=extent,
        n_landmarks=n_landmarks,
        n_episodes=n_episodes,
        meters_per_pixel=meters_per_pixel,
    )
    map_path = out / "map.json"
    episodes_path = out / "episodes.jsonl"
    save_map(city, map_path)
    save_episodes(episodes, episodes_path)
    return map_path, episodes_path


def cmd_filter_sft(
    in_path: "str | Path", map_path: "str | Path", out_dir: "str | Path"
) -> FilterReport:
    """Filter an SFT corpus and write the annotated JSONL plus a report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    city = load_map(map_path)
    samples = load_sft_samples(in_path)
    _, report = filter_sft(samples, city.meta)
    save_sft_samples(report.samples, out / "filtered.jsonl")
    report_doc = {
        "total": report.total,
        "kept": report.kept,
        "dropped_format": report.dropped_format,
        "dropped_distance": report.dropped_distance,
    }
    (out / "filter_report.json").write_text(json.dumps(report_doc, indent=2) + "\n", encoding="utf-8")
    return report


def cmd_train_toy(
    truth: Point2D,
    out_dir: "str | Path",
    mean: Point2D = Point2D(0.0, 0.0),
    sigma0: float = 20.0,
    learning_rate: float = 0.5,
    group_size: int = 8,
    iterations: int = 300,
    seed: int = 0,
    reward_params: RewardParams = RewardParams(),
) -> "tuple[ToyPolicyParams, list[float]]":
    """Run the toy trainer on one truth point and write trace + final params."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = ToyPolicyParams(
        mean=mean,
        log_std=(math.log(sigma0), math.log(sigma0)),
        learning_rate=learning_rate,
        group_size=group_size,
        iterations=iterations,
    )
    trained, trace = train_toy_grpo([truth], params, reward_params, seed=seed)
    save_trace_csv(trace, out / "trace.csv")
    doc = {
        "mean": [trained.mean.x, trained.mean.y],
        "log_std": list(trained.log_std),
        "final_mean_reward": trace[-1] if trace else None,
    }
    (out / "trained.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return trained, trace


def cmd_judge(
    outputs_path: "str | Path",
    endpoint: EndpointConfig,
    out_path: "str | Path",
    repeats: int = 3,
) -> None:
    """Judge a JSONL of {id, text} records and write the score CSV."""
    records = []
    with open(outputs_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                records.append((str(doc["id"]), str(doc["text"])))
            except (ValueError, KeyError, TypeError) as exc:
                log.warning("%s:%d: skipping malformed judge line (%s)", outputs_path, lineno, exc)

    results = judge_many([text for _, text in records], endpoint=endpoint, repeats=repeats)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "completeness", "coherence", "fluency", "repeats_used"])
        for (record_id, _), result in zip(records, results):
            if result.scores is None:
                writer.writerow([record_id, "", "", "", 0])
            else:
                writer.writerow(
                    [
                        record_id,
                        f"{result.scores.completeness:.2f}",
                        f"{result.scores.coherence:.2f}",
                        f"{result.scores.fluency:.2f}",
                        result.repeats_used,
                    ]
                )


def cmd_render(
    episodes_path: "str | Path", map_path: "str | Path", out_dir: "str | Path"
) -> list[Path]:
    """Write one PNG per episode, rendered at its initial pose."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    city = load_map(map_path)
    paths = []
    for ep in load_episodes(episodes_path, city):
        png = render_map(ep, ep.initial)
        path = out / f"{ep.id}.png"
        path.write_bytes(png)
        paths.append(path)
    return paths
