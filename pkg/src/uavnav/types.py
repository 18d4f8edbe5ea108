"""Domain types for episodes, maps, motion, and execution logs."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .geometry import BBox, MapMeta, Point2D, Pose, in_map_bounds


class Action(str, Enum):
    FORWARD = "Forward"
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    ASCEND = "Ascend"
    DESCEND = "Descend"
    STOP = "Stop"


@dataclass(frozen=True)
class MotionParams:
    """Discrete motion model and episode budgets.

    stop_radius should stay below the success radius used for scoring
    (20 m by default); that relation is checked where both configs meet,
    in RunConfig.
    """

    forward_step: float = 5.0
    turn_step: float = 15.0
    vertical_step: float = 2.0
    stop_radius: float = 5.0
    max_steps: int = 200
    max_policy_calls: int = 10

    def __post_init__(self):
        for name in ("forward_step", "turn_step", "vertical_step", "stop_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_steps < 1 or self.max_policy_calls < 1:
            raise ValueError("max_steps and max_policy_calls must be >= 1")
        if self.turn_step > 180:
            raise ValueError(f"turn_step must be <= 180 degrees, got {self.turn_step}")


@dataclass(frozen=True)
class Landmark:
    id: str
    name: str
    bbox: BBox


@dataclass(frozen=True)
class CityMap:
    """One map: raster metadata plus its landmark set (pixel boxes)."""

    meta: MapMeta
    landmarks: tuple[Landmark, ...]

    def __post_init__(self):
        object.__setattr__(self, "landmarks", tuple(self.landmarks))
        seen = set()
        for lm in self.landmarks:
            if lm.id in seen:
                raise ValueError(f"duplicate landmark id {lm.id!r}")
            seen.add(lm.id)
            box = lm.bbox
            if box.x1 < 0 or box.y1 < 0 or box.x2 > self.meta.width or box.y2 > self.meta.height:
                raise ValueError(f"landmark {lm.id!r} bbox {box} exceeds map bounds")

    def landmark_by_id(self, landmark_id: str) -> Landmark:
        for lm in self.landmarks:
            if lm.id == landmark_id:
                return lm
        raise KeyError(f"no landmark with id {landmark_id!r}")


@dataclass(frozen=True)
class EpisodeSpec:
    """One navigation task: start pose, language description, map, and truth."""

    id: str
    initial: Pose
    description: str
    map: CityMap
    truth_target: Point2D
    truth_landmark_id: str

    def __post_init__(self):
        if not in_map_bounds(self.truth_target, self.map.meta):
            raise ValueError(f"truth_target {self.truth_target} outside map extent")
        try:
            self.map.landmark_by_id(self.truth_landmark_id)
        except KeyError as exc:
            raise ValueError(str(exc)) from exc

    @property
    def truth_landmark(self) -> Landmark:
        return self.map.landmark_by_id(self.truth_landmark_id)


@dataclass(frozen=True)
class Trajectory:
    """Execution log of one episode run.

    Always one more pose than actions. stopped is set only when a Stop
    was executed as a deliberate terminal action; hold-in-place steps
    also log Stop actions but leave stopped false. error carries the
    message of a policy failure that cut the run short, if any.
    """

    poses: tuple[Pose, ...]
    actions: tuple[Action, ...]
    stopped: bool
    policy_calls: int
    error: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        object.__setattr__(self, "actions", tuple(self.actions))
        if len(self.poses) != len(self.actions) + 1:
            raise ValueError(
                f"need exactly one more pose than actions, got {len(self.poses)} poses "
                f"and {len(self.actions)} actions"
            )
        if self.stopped and (not self.actions or self.actions[-1] != Action.STOP):
            raise ValueError("stopped trajectories must end with a Stop action")
        if self.policy_calls < 0:
            raise ValueError("policy_calls must be >= 0")

    @property
    def final_pose(self) -> Pose:
        return self.poses[-1]

    @property
    def path_length(self) -> float:
        """Total 2D distance traveled, in meters."""
        total = 0.0
        for a, b in zip(self.poses, self.poses[1:]):
            dx = b.position.x - a.position.x
            dy = b.position.y - a.position.y
            total += (dx * dx + dy * dy) ** 0.5
        return total
