"""Desk-scale UAV vision-and-language navigation harness.

Episode simulation with six discrete actions, structured-output rewards
(goal / IoU / format), group-relative advantages with a toy trainer,
navigation metrics (NE, SR, OSR, SPL), SFT data filtering, judge
scoring, and pluggable policies from scripted oracles to a remote
vision-language model endpoint.
"""

__version__ = "0.1.0"

from .geometry import BBox, MapMeta, PixelPoint, Point2D, Pose, bearing, distance, m_to_px, px_to_m
from .parsing import ParsedOutput, parse_output, serialize_output
from .rewards import (
    RewardBreakdown,
    RewardParams,
    format_reward,
    goal_reward,
    group_advantages,
    iou,
    iou_reward,
    total_reward,
)
from .types import Action, CityMap, EpisodeSpec, Landmark, MotionParams, Trajectory
from .env import plan_actions, run_episode, step
from .citygen import gen_synthetic_city
from .prompts import build_prompt
from .rendering import RenderError, render_map
from .policies import (
    EndpointConfig,
    NoisyOraclePolicy,
    OraclePolicy,
    PolicyError,
    PolicyInput,
    ProtocolError,
    RandomPolicy,
    RemotePolicy,
    RequestError,
    TransportError,
    build_policy_input,
    builtin_policy,
    chat_complete,
    make_policy,
    remote_policy,
)
from .metrics import EpisodeResult, MetricsSummary, episode_result, summarize
from .files import (
    load_episodes,
    load_map,
    load_trajectories,
    save_episodes,
    save_map,
    save_trajectories,
)
from .sft import FilterReport, SftSample, filter_sft
from .judge import JudgeParseError, JudgeRangeError, JudgeResult, JudgeScores, judge_many, judge_prompt, parse_judge
from .toytrain import ToyPolicyParams, TrainingError, log_density, log_density_grad, smooth_trace, train_toy_grpo
from .runner import RunConfig, cmd_run, cmd_score, run_batch

__all__ = [
    "__version__",
    "Action",
    "BBox",
    "CityMap",
    "EndpointConfig",
    "EpisodeResult",
    "EpisodeSpec",
    "FilterReport",
    "JudgeParseError",
    "JudgeRangeError",
    "JudgeResult",
    "JudgeScores",
    "Landmark",
    "MapMeta",
    "MetricsSummary",
    "MotionParams",
    "NoisyOraclePolicy",
    "OraclePolicy",
    "ParsedOutput",
    "PixelPoint",
    "Point2D",
    "PolicyError",
    "PolicyInput",
    "Pose",
    "ProtocolError",
    "RandomPolicy",
    "RemotePolicy",
    "RenderError",
    "RequestError",
    "RewardBreakdown",
    "RewardParams",
    "RunConfig",
    "SftSample",
    "ToyPolicyParams",
    "Trajectory",
    "TrainingError",
    "TransportError",
    "bearing",
    "build_policy_input",
    "build_prompt",
    "builtin_policy",
    "chat_complete",
    "cmd_run",
    "cmd_score",
    "distance",
    "episode_result",
    "filter_sft",
    "format_reward",
    "gen_synthetic_city",
    "goal_reward",
    "group_advantages",
    "iou",
    "iou_reward",
    "judge_many",
    "judge_prompt",
    "load_episodes",
    "load_map",
    "load_trajectories",
    "log_density",
    "log_density_grad",
    "m_to_px",
    "make_policy",
    "parse_judge",
    "parse_output",
    "plan_actions",
    "px_to_m",
    "remote_policy",
    "render_map",
    "run_batch",
    "run_episode",
    "save_episodes",
    "save_map",
    "save_trajectories",
    "serialize_output",
    "smooth_trace",
    "step",
    "summarize",
    "total_reward",
    "train_toy_grpo",
]
