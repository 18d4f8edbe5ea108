"""On-disk formats: map JSON, episode/trajectory/SFT JSONL, CSV reports."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .geometry import BBox, MapMeta, Point2D, Pose
from .metrics import EpisodeResult, MetricsSummary
from .sft import SftSample
from .types import Action, CityMap, EpisodeSpec, Landmark, Trajectory

log = logging.getLogger(__name__)


def save_map(city: CityMap, path: "str | Path") -> None:
    doc = {
        "meta": {
            "width": city.meta.width,
            "height": city.meta.height,
            "meters_per_pixel": city.meta.meters_per_pixel,
        },
        "landmarks": [
            {"id": lm.id, "name": lm.name, "bbox": [lm.bbox.x1, lm.bbox.y1, lm.bbox.x2, lm.bbox.y2]}
            for lm in city.landmarks
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_map(path: "str | Path") -> CityMap:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    meta = MapMeta(
        width=int(doc["meta"]["width"]),
        height=int(doc["meta"]["height"]),
        meters_per_pixel=float(doc["meta"]["meters_per_pixel"]),
    )
    landmarks = tuple(
        Landmark(id=str(lm["id"]), name=str(lm["name"]), bbox=BBox(*map(float, lm["bbox"])))
        for lm in doc["landmarks"]
    )
    return CityMap(meta=meta, landmarks=landmarks)


def _pose_to_json(pose: Pose) -> dict:
    return {"x": pose.position.x, "y": pose.position.y, "z": pose.altitude, "heading": pose.heading}


def _pose_from_json(doc: dict) -> Pose:
    return Pose(
        position=Point2D(float(doc["x"]), float(doc["y"])),
        altitude=float(doc["z"]),
        heading=float(doc["heading"]),
    )


def save_episodes(episodes: Sequence[EpisodeSpec], path: "str | Path") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(
                json.dumps(
                    {
                        "id": ep.id,
                        "initial": _pose_to_json(ep.initial),
                        "description": ep.description,
                        "truth_target": [ep.truth_target.x, ep.truth_target.y],
                        "truth_landmark_id": ep.truth_landmark_id,
                    }
                )
                + "\n"
            )


def load_episodes(path: "str | Path", city: CityMap) -> list[EpisodeSpec]:
    """Read episode JSONL against its map; malformed lines are skipped with a log."""
    episodes = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                episodes.append(
                    EpisodeSpec(
                        id=str(doc["id"]),
                        initial=_pose_from_json(doc["initial"]),
                        description=str(doc["description"]),
                        map=city,
                        truth_target=Point2D(*map(float, doc["truth_target"])),
                        truth_landmark_id=str(doc["truth_landmark_id"]),
                    )
                )
            except (ValueError, KeyError, TypeError) as exc:
                log.warning("%s:%d: skipping malformed episode line (%s)", path, lineno, exc)
    return episodes


def save_trajectories(
    records: Iterable["tuple[str, Trajectory]"], path: "str | Path"
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for episode_id, traj in records:
            fh.write(
                json.dumps(
                    {
                        "id": episode_id,
                        "poses": [_pose_to_json(p) for p in traj.poses],
                        "actions": [a.value for a in traj.actions],
                        "policy_calls": traj.policy_calls,
                        "stopped": traj.stopped,
                        "error": traj.error,
                    }
                )
                + "\n"
            )


def load_trajectories(path: "str | Path") -> list["tuple[str, Trajectory]"]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            records.append(
                (
                    str(doc["id"]),
                    Trajectory(
                        poses=tuple(_pose_from_json(p) for p in doc["poses"]),
                        actions=tuple(Action(a) for a in doc["actions"]),
                        stopped=bool(doc["stopped"]),
                        policy_calls=int(doc["policy_calls"]),
                        error=doc.get("error"),
                    ),
                )
            )
    return records


def save_results_csv(
    rows: Sequence["tuple[str, EpisodeResult, Optional[str]]"], path: "str | Path"
) -> None:
    """Per-episode outcomes: id, metrics fields, and any policy error."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "nav_error", "success", "oracle_success", "path_length", "shortest_path", "error"]
        )
        for episode_id, res, error in rows:
            writer.writerow(
                [
                    episode_id,
                    f"{res.nav_error:.4f}",
                    int(res.success),
                    int(res.oracle_success),
                    f"{res.path_length:.4f}",
                    f"{res.shortest_path:.4f}",
                    error or "",
                ]
            )


def save_metrics(summary: MetricsSummary, csv_path: "str | Path", md_path: "str | Path") -> None:
    """Emit the summary table, CSV and markdown, columns NE, SR, OSR, SPL."""
    header = ["NE", "SR", "OSR", "SPL"]
    values = [f"{summary.mean_ne:.2f}", f"{summary.sr:.2f}", f"{summary.osr:.2f}", f"{summary.spl:.2f}"]
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerow(values)
    width = max(len(v) for v in header + values) + 2
    lines = [
        "|" + "|".join(h.center(width) for h in header) + "|",
        "|" + "|".join("-" * width for _ in header) + "|",
        "|" + "|".join(v.center(width) for v in values) + "|",
    ]
    Path(md_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_metrics_line(summary: MetricsSummary) -> str:
    return (
        f"episodes={summary.episode_count} NE={summary.mean_ne:.2f} "
        f"SR={summary.sr:.2f} OSR={summary.osr:.2f} SPL={summary.spl:.2f}"
    )


def load_sft_samples(path: "str | Path") -> list[SftSample]:
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                samples.append(
                    SftSample.from_raw(
                        prompt=str(doc["prompt"]),
                        raw_output=str(doc["raw_output"]),
                        truth_target=Point2D(*map(float, doc["truth_target"])),
                    )
                )
            except (ValueError, KeyError, TypeError) as exc:
                log.warning("%s:%d: skipping malformed SFT line (%s)", path, lineno, exc)
    return samples


def save_sft_samples(samples: Sequence[SftSample], path: "str | Path") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(
                json.dumps(
                    {
                        "prompt": s.prompt,
                        "raw_output": s.raw_output,
                        "truth_target": [s.truth_target.x, s.truth_target.y],
                        "kept": s.kept,
                        "drop_rule": s.drop_rule,
                        "final_output": s.final_output,
                    }
                )
                + "\n"
            )


def load_outputs(path: "str | Path") -> list[dict]:
    """Score-command input: JSONL of {episode_id, raw_output, group_id?}."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                rows.append(
                    {
                        "episode_id": str(doc["episode_id"]),
                        "raw_output": str(doc["raw_output"]),
                        "group_id": str(doc["group_id"]) if doc.get("group_id") is not None else None,
                    }
                )
            except (ValueError, KeyError, TypeError) as exc:
                log.warning("%s:%d: skipping malformed output line (%s)", path, lineno, exc)
    return rows


def save_trace_csv(trace: Sequence[float], path: "str | Path") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "mean_reward"])
        for i, value in enumerate(trace):
            writer.writerow([i, f"{value:.6f}"])
