"""Discrete-action motion model, look-ahead planner, and the episode loop."""

from __future__ import annotations

import math
import logging
from typing import Callable, Optional

from .geometry import (
    MapMeta,
    Point2D,
    Pose,
    bearing,
    clamp_to_map,
    distance,
    heading_delta,
    px_to_m,
)
from .parsing import parse_output
from .policies import PolicyError, PolicyInput, build_policy_input
from .types import Action, EpisodeSpec, MotionParams, Trajectory

log = logging.getLogger(__name__)

Policy = Callable[[EpisodeSpec, PolicyInput], str]


def step(
    pose: Pose,
    action: Action,
    params: MotionParams = MotionParams(),
    extent: Optional[MapMeta] = None,
) -> Pose:
    """Apply one action to a pose.

    Forward moves forward_step meters along the heading (heading 0 is
    +y, 90 is +x); turns rotate by turn_step with wraparound; vertical
    moves change altitude by vertical_step, floored at 0; Stop leaves
    the pose unchanged. When a map extent is given the position is
    clamped to it.
    """
    if action is Action.FORWARD:
        rad = math.radians(pose.heading)
        new_pos = Point2D(
            pose.position.x + params.forward_step * math.sin(rad),
            pose.position.y + params.forward_step * math.cos(rad),
        )
        if extent is not None:
            new_pos = clamp_to_map(new_pos, extent)
        return Pose(new_pos, pose.altitude, pose.heading)
    if action is Action.TURN_LEFT:
        return Pose(pose.position, pose.altitude, pose.heading - params.turn_step)
    if action is Action.TURN_RIGHT:
        return Pose(pose.position, pose.altitude, pose.heading + params.turn_step)
    if action is Action.ASCEND:
        return Pose(pose.position, pose.altitude + params.vertical_step, pose.heading)
    if action is Action.DESCEND:
        return Pose(pose.position, max(pose.altitude - params.vertical_step, 0.0), pose.heading)
    return pose


def plan_actions(
    pose: Pose,
    predicted_target: Point2D,
    params: MotionParams = MotionParams(),
    extent: Optional[MapMeta] = None,
) -> list[Action]:
    """Look-ahead plan from a pose toward a predicted target.

    Simulates rounds of (rotate toward the target bearing until the
    heading error is at most half a turn step, then move forward while
    each step strictly shrinks the simulated distance), ending with Stop
    once within stop_radius. Capped at max_steps actions; if motion
    parameters make no action productive the plan ends early without a
    Stop and the caller re-queries its policy.
    """
    plan: list[Action] = []
    sim = pose
    half_turn = params.turn_step / 2.0 + 1e-9

    while len(plan) < params.max_steps:
        d = distance(sim.position, predicted_target)
        if d <= params.stop_radius:
            plan.append(Action.STOP)
            return plan

        progressed = False
        # Rotate phase: face the target to within half a turn increment.
        while len(plan) < params.max_steps:
            err = heading_delta(sim.heading, bearing(sim.position, predicted_target))
            if abs(err) <= half_turn:
                break
            action = Action.TURN_RIGHT if err > 0 else Action.TURN_LEFT
            plan.append(action)
            sim = step(sim, action, params, extent)
            progressed = True

        # Forward phase: advance while distance strictly decreases.
        while len(plan) < params.max_steps:
            d = distance(sim.position, predicted_target)
            if d <= params.stop_radius:
                plan.append(Action.STOP)
                return plan
            ahead = step(sim, Action.FORWARD, params, extent)
            if distance(ahead.position, predicted_target) >= d:
                break
            plan.append(Action.FORWARD)
            sim = ahead
            progressed = True

        if not progressed:
            return plan
    return plan


def run_episode(
    episode: EpisodeSpec,
    policy: Policy,
    params: MotionParams = MotionParams(),
) -> Trajectory:
    """Run the iterative perceive/predict/plan/execute loop for one episode.

    Each round builds the prompt (and map image when the policy consumes
    images), queries the policy once, parses the raw text, plans toward
    the predicted target, and executes the plan. A response with no
    extractable target burns the policy call and holds position for one
    step. The run ends when a planned Stop executes, the pose budget
    (max_steps) is exhausted, or max_policy_calls is reached. A policy
    error ends the run early with the trajectory retained.
    """
    meta = episode.map.meta
    poses = [episode.initial]
    actions: list[Action] = []
    stopped = False
    policy_calls = 0
    error: Optional[str] = None

    def budget_left() -> bool:
        return len(poses) < params.max_steps + 1

    while not stopped and budget_left() and policy_calls < params.max_policy_calls:
        pose = poses[-1]
        policy_input = build_policy_input(episode, pose, include_image=_wants_image(policy))
        policy_calls += 1
        try:
            raw = policy(episode, policy_input)
        except PolicyError as exc:
            log.warning("episode %s: policy failed: %s", episode.id, exc)
            error = str(exc)
            break

        parsed = parse_output(raw)
        if parsed.target_location is None:
            # Unusable response: hold position for one step.
            poses.append(pose)
            actions.append(Action.STOP)
            continue

        target_m = px_to_m(parsed.target_location, meta)
        plan = plan_actions(pose, target_m, params, extent=meta)
        for action in plan:
            if not budget_left():
                break
            new_pose = step(poses[-1], action, params, extent=meta)
            poses.append(new_pose)
            actions.append(action)
            if action is Action.STOP:
                stopped = True
                break

    return Trajectory(
        poses=tuple(poses),
        actions=tuple(actions),
        stopped=stopped,
        policy_calls=policy_calls,
        error=error,
    )


def _wants_image(policy: Policy) -> bool:
    return bool(getattr(policy, "needs_image", False))
