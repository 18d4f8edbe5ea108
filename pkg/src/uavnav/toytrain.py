"""Desk-scale GRPO loop on a 2D Gaussian policy.

The policy predicts a target point directly (no language model): an
isotropic-per-axis Gaussian with a mean and per-axis log standard
deviations. Each iteration samples a group per episode, scores the
samples with the goal reward, standardizes rewards into group
advantages, and ascends the group-mean REINFORCE estimate of
advantage * grad log-density, preconditioned by the Gaussian's inverse
Fisher information (the natural gradient: the mean update scales by
sigma^2, the log_std update by 1/2). The preconditioning keeps step
sizes proportional to the current exploration scale; the raw
unpreconditioned sum update diverges at practical learning rates
because the mean gradient carries a 1/sigma factor that explodes as
the policy sharpens.

Each iteration draws from a generator keyed on (seed, current
parameters), so a policy that does not move replays the same samples:
a zero learning rate yields an exactly constant reward trace, and a
converged policy (zero-variance group, zero advantages) freezes both
parameters and trace. Parameters that do move get fresh draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .geometry import Point2D
from .rewards import RewardParams, goal_reward, group_advantages
from .types import EpisodeSpec


class TrainingError(RuntimeError):
    """The update produced a non-finite gradient or parameter."""


@dataclass(frozen=True)
class ToyPolicyParams:
    """Gaussian policy state plus the optimization knobs."""

    mean: Point2D
    log_std: "tuple[float, float]" = (math.log(20.0), math.log(20.0))
    learning_rate: float = 0.5
    group_size: int = 8
    iterations: int = 300

    def __post_init__(self):
        object.__setattr__(self, "log_std", tuple(float(v) for v in self.log_std))
        if len(self.log_std) != 2:
            raise ValueError("log_std must have one entry per axis")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.group_size < 2:
            raise ValueError(f"group_size must be >= 2, got {self.group_size}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")


def log_density(mean: "tuple[float, float]", log_std: "tuple[float, float]", x: "tuple[float, float]") -> float:
    """Log density of the diagonal Gaussian at x."""
    total = 0.0
    for axis in range(2):
        sigma = math.exp(log_std[axis])
        z = (x[axis] - mean[axis]) / sigma
        total += -0.5 * z * z - log_std[axis] - 0.5 * math.log(2.0 * math.pi)
    return total


def log_density_grad(
    mean: "tuple[float, float]", log_std: "tuple[float, float]", x: "tuple[float, float]"
) -> "tuple[np.ndarray, np.ndarray]":
    """Analytic gradients of log_density w.r.t. mean and log_std, per axis."""
    mean_arr = np.asarray(mean, dtype=np.float64)
    sigma = np.exp(np.asarray(log_std, dtype=np.float64))
    diff = np.asarray(x, dtype=np.float64) - mean_arr
    grad_mean = diff / sigma**2
    grad_log_std = (diff / sigma) ** 2 - 1.0
    return grad_mean, grad_log_std


def _state_rng(seed: int, mean: np.ndarray, log_std: np.ndarray) -> np.random.Generator:
    """Generator keyed on the seed and the exact parameter bits."""
    bits = np.concatenate([mean, log_std]).view(np.uint64)
    return np.random.default_rng(np.random.SeedSequence([seed, *map(int, bits)]))


def train_toy_grpo(
    episodes: Sequence[Union[EpisodeSpec, Point2D]],
    params: ToyPolicyParams,
    reward_params: RewardParams = RewardParams(),
    seed: int = 0,
) -> "tuple[ToyPolicyParams, list[float]]":
    """Run the GRPO surrogate and return trained params plus a reward trace.

    episodes may be full EpisodeSpec values or bare truth points; only
    the truth target enters the objective. The trace records the mean
    goal reward across all samples drawn in each iteration. Groups whose
    rewards have (near-)zero variance contribute zero advantages, so a
    converged policy stops moving. Deterministic in the seed.
    """
    if not episodes:
        raise ValueError("need at least one episode")
    truths = [e.truth_target if isinstance(e, EpisodeSpec) else e for e in episodes]

    mean = np.array([params.mean.x, params.mean.y], dtype=np.float64)
    log_std = np.array(params.log_std, dtype=np.float64)
    lr = params.learning_rate
    trace: list[float] = []

    for iteration in range(params.iterations):
        rng = _state_rng(seed, mean, log_std)
        grad_mean = np.zeros(2)
        grad_log_std = np.zeros(2)
        reward_sum = 0.0
        sample_count = 0
        for truth in truths:
            sigma = np.exp(log_std)
            samples = mean + sigma * rng.standard_normal((params.group_size, 2))
            rewards = [
                goal_reward(Point2D(float(s[0]), float(s[1])), truth, reward_params)
                for s in samples
            ]
            reward_sum += sum(rewards)
            sample_count += len(rewards)
            advantages = group_advantages(rewards)
            for advantage, sample in zip(advantages, samples):
                g_mean, g_log_std = log_density_grad(mean, log_std, sample)
                # Natural-gradient preconditioning: inverse Fisher is
                # diag(sigma^2) for the mean and 1/2 for log_std.
                grad_mean += advantage * g_mean * sigma**2
                grad_log_std += advantage * g_log_std / 2.0

        if not (np.all(np.isfinite(grad_mean)) and np.all(np.isfinite(grad_log_std))):
            raise TrainingError(f"non-finite gradient at iteration {iteration}")
        grad_mean /= sample_count
        grad_log_std /= sample_count
        mean = mean + lr * grad_mean
        log_std = log_std + lr * grad_log_std
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(log_std))):
            raise TrainingError(f"non-finite parameters at iteration {iteration}")
        trace.append(reward_sum / sample_count)

    trained = replace(
        params,
        mean=Point2D(float(mean[0]), float(mean[1])),
        log_std=(float(log_std[0]), float(log_std[1])),
    )
    return trained, trace


def smooth_trace(trace: Sequence[float], window: int = 25) -> list[float]:
    """Moving average over the trace, full windows only.

    Entry i of the result averages trace[i : i + window], so the output
    is shorter than the input by window - 1 and every value covers a
    complete window.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(trace) < window:
        return []
    acc = sum(trace[:window])
    smoothed = [acc / window]
    for i in range(window, len(trace)):
        acc += trace[i] - trace[i - window]
        smoothed.append(acc / window)
    return smoothed
