"""Command line interface: run, score, gen-city, filter-sft, train-toy, judge, render."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from .files import format_metrics_line
from .geometry import Point2D
from .policies import EndpointConfig
from .rewards import RewardParams
from .runner import (
    RunConfig,
    cmd_filter_sft,
    cmd_gen_city,
    cmd_judge,
    cmd_render,
    cmd_run,
    cmd_score,
    cmd_train_toy,
)
from .types import MotionParams

log = logging.getLogger(__name__)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; CLI flags override its values")
    common.add_argument("--seed", type=int, help="run seed (default 0)")
    common.add_argument("--parallelism", type=int, help="worker count (default 1)")
    common.add_argument("--out", help="output directory or file")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavnav",
        description="Desk-scale UAV vision-and-language navigation harness",
    )
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="evaluate a policy over episodes")
    p_run.add_argument("--episodes", help="episode JSONL path")
    p_run.add_argument("--map", dest="map_path", help="map JSON path")
    p_run.add_argument(
        "--policy", choices=("oracle", "noisy_oracle", "random", "remote"), help="policy kind"
    )
    p_run.add_argument("--sigma", type=float, help="noise std in meters for noisy_oracle")
    p_run.add_argument("--endpoint-url", help="chat-completions endpoint URL (remote policy)")
    p_run.add_argument("--endpoint-model", help="model name sent to the endpoint")
    p_run.add_argument("--timeout", type=float, help="endpoint timeout seconds")
    p_run.add_argument("--max-retries", type=int, help="endpoint retry budget")
    p_run.add_argument("--api-key-env", help="environment variable holding the API key")

    p_score = sub.add_parser("score", parents=[common], help="score raw outputs into rewards")
    p_score.add_argument("--outputs", required=True, help="JSONL of {episode_id, raw_output, group_id?}")
    p_score.add_argument("--episodes", required=True, help="episode JSONL path")
    p_score.add_argument("--map", dest="map_path", required=True, help="map JSON path")

    p_gen = sub.add_parser("gen-city", parents=[common], help="generate a synthetic city")
    p_gen.add_argument("--extent", type=float, default=400.0, help="map side length in meters")
    p_gen.add_argument("--landmarks", type=int, default=8, help="landmark count")
    p_gen.add_argument("--episodes-count", type=int, default=50, help="episode count")
    p_gen.add_argument("--mpp", type=float, default=1.0, help="meters per pixel")

    p_filter = sub.add_parser("filter-sft", parents=[common], help="filter an SFT corpus")
    p_filter.add_argument("--in", dest="in_path", required=True, help="input SFT JSONL")
    p_filter.add_argument("--map", dest="map_path", required=True, help="map JSON path")

    p_train = sub.add_parser("train-toy", parents=[common], help="run the toy GRPO trainer")
    p_train.add_argument("--truth-x", type=float, default=60.0)
    p_train.add_argument("--truth-y", type=float, default=0.0)
    p_train.add_argument("--mean-x", type=float, default=0.0)
    p_train.add_argument("--mean-y", type=float, default=0.0)
    p_train.add_argument("--sigma0", type=float, default=20.0, help="initial policy std in meters")
    p_train.add_argument("--lr", type=float, default=0.5)
    p_train.add_argument("--group-size", type=int, default=8)
    p_train.add_argument("--iterations", type=int, default=300)

    p_judge = sub.add_parser("judge", parents=[common], help="score reasoning quality via a judge model")
    p_judge.add_argument("--outputs", required=True, help="JSONL of {id, text}")
    p_judge.add_argument("--endpoint-url", required=True)
    p_judge.add_argument("--endpoint-model", required=True)
    p_judge.add_argument("--timeout", type=float)
    p_judge.add_argument("--max-retries", type=int)
    p_judge.add_argument("--api-key-env", help="environment variable holding the API key")
    p_judge.add_argument("--repeats", type=int, default=3)

    p_render = sub.add_parser("render", parents=[common], help="render one PNG per episode")
    p_render.add_argument("--episodes", required=True, help="episode JSONL path")
    p_render.add_argument("--map", dest="map_path", required=True, help="map JSON path")

    return parser


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _setting(args: argparse.Namespace, file_cfg: dict, name: str, default):
    """Precedence: CLI flag, then config file key, then default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in file_cfg:
        return file_cfg[name]
    return default


def _endpoint_from(args: argparse.Namespace, file_cfg: dict) -> Optional[EndpointConfig]:
    ep_cfg = dict(file_cfg.get("endpoint") or {})
    url = getattr(args, "endpoint_url", None) or ep_cfg.get("base_url")
    if not url:
        return None
    kwargs = dict(
        base_url=url,
        model_name=getattr(args, "endpoint_model", None) or ep_cfg.get("model_name", "default"),
    )
    for attr, key in (("timeout", "timeout"), ("max_retries", "max_retries"), ("api_key_env", "api_key_env_var")):
        value = getattr(args, attr, None)
        if value is None:
            value = ep_cfg.get(key)
        if value is not None:
            kwargs[key] = value
    if "backoff_base" in ep_cfg:
        kwargs["backoff_base"] = ep_cfg["backoff_base"]
    return EndpointConfig(**kwargs)


def _motion_from(file_cfg: dict) -> MotionParams:
    return MotionParams(**file_cfg.get("motion", {}))


def _reward_from(file_cfg: dict) -> RewardParams:
    return RewardParams(**file_cfg.get("reward", {}))


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    file_cfg = _load_config_file(args.config)
    seed = int(_setting(args, file_cfg, "seed", 0))
    out = _setting(args, file_cfg, "out", "out")

    if args.command == "run":
        config = RunConfig(
            episodes_path=_setting(args, file_cfg, "episodes", None),
            map_path=args.map_path or file_cfg.get("map"),
            output_dir=str(out),
            policy_kind=_setting(args, file_cfg, "policy", "oracle"),
            sigma=float(_setting(args, file_cfg, "sigma", 0.0)),
            endpoint=_endpoint_from(args, file_cfg),
            motion=_motion_from(file_cfg),
            reward=_reward_from(file_cfg),
            parallelism=int(_setting(args, file_cfg, "parallelism", 1)),
            seed=seed,
        )
        if not config.episodes_path or not config.map_path:
            log.error("run needs --episodes and --map (or config file keys episodes/map)")
            return 2
        summary = cmd_run(config)
        print(format_metrics_line(summary))
        return 0

    if args.command == "score":
        out_path = Path(out)
        if out_path.suffix != ".csv":
            out_path.mkdir(parents=True, exist_ok=True)
            out_path = out_path / "rewards.csv"
        cmd_score(args.outputs, args.episodes, args.map_path, out_path, _reward_from(file_cfg))
        print(f"wrote {out_path}")
        return 0

    if args.command == "gen-city":
        map_path, episodes_path = cmd_gen_city(
            seed=seed,
            extent=args.extent,
            n_landmarks=args.landmarks,
            n_episodes=args.episodes_count,
            out_dir=out,
            meters_per_pixel=args.mpp,
        )
        print(f"wrote {map_path} and {episodes_path}")
        return 0

    if args.command == "filter-sft":
        report = cmd_filter_sft(args.in_path, args.map_path, out)
        print(
            f"total={report.total} kept={report.kept} "
            f"dropped_format={report.dropped_format} dropped_distance={report.dropped_distance}"
        )
        return 0

    if args.command == "train-toy":
        trained, trace = cmd_train_toy(
            truth=Point2D(args.truth_x, args.truth_y),
            out_dir=out,
            mean=Point2D(args.mean_x, args.mean_y),
            sigma0=args.sigma0,
            learning_rate=args.lr,
            group_size=args.group_size,
            iterations=args.iterations,
            seed=seed,
        )
        final = trace[-1] if trace else float("nan")
        print(f"final mean=({trained.mean.x:.2f}, {trained.mean.y:.2f}) reward={final:.4f}")
        return 0

    if args.command == "judge":
        endpoint = _endpoint_from(args, file_cfg)
        if endpoint is None:
            log.error("judge needs --endpoint-url")
            return 2
        out_path = Path(out)
        if out_path.suffix != ".csv":
            out_path.mkdir(parents=True, exist_ok=True)
            out_path = out_path / "judge.csv"
        cmd_judge(args.outputs, endpoint, out_path, repeats=args.repeats)
        print(f"wrote {out_path}")
        return 0

    if args.command == "render":
        paths = cmd_render(args.episodes, args.map_path, out)
        print(f"wrote {len(paths)} images to {out}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
