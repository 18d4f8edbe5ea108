"""Procedural generation of desk-scale city maps and episode sets."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .geometry import BBox, MapMeta, Point2D, Pose, point_to_bbox_distance
from .types import CityMap, EpisodeSpec, Landmark

TARGET_NEAR_LANDMARK_M = 15.0

_ADJECTIVES = (
    "old", "grand", "silver", "east", "west", "north", "south", "little",
    "round", "brick", "stone", "green",
)
_PLACES = (
    "tower", "market", "depot", "plaza", "garage", "terminal", "warehouse",
    "pavilion", "fountain", "arena", "library", "chapel",
)
_COLORS = ("black", "white", "red", "blue", "silver", "green", "yellow")
_OBJECTS = ("car", "truck", "van", "tent", "kiosk", "bench", "container", "trailer")


class GenerationError(RuntimeError):
    """Could not satisfy the layout constraints within the retry budget."""


def gen_synthetic_city(
    seed: int,
    extent: float,
    n_landmarks: int,
    n_episodes: int,
    meters_per_pixel: float = 1.0,
    max_tries: int = 2000,
) -> "tuple[CityMap, list[EpisodeSpec]]":
    """Generate a map with disjoint landmark boxes plus episodes over it.

    Deterministic in the seed. Each episode gets a start pose sampled
    anywhere on the map, one target landmark, a truth point within
    TARGET_NEAR_LANDMARK_M of that landmark's box, and a templated
    description naming the landmark. Raises GenerationError when the
    boxes cannot be packed without overlap within max_tries attempts
    per landmark.
    """
    if extent <= 0:
        raise ValueError(f"extent must be positive, got {extent}")
    if n_landmarks < 1 or n_episodes < 1:
        raise ValueError("n_landmarks and n_episodes must be >= 1")

    rng = np.random.default_rng(seed)
    side = max(int(round(extent / meters_per_pixel)), 1)
    meta = MapMeta(width=side, height=side, meters_per_pixel=meters_per_pixel)

    landmarks = _place_landmarks(rng, meta, n_landmarks, max_tries)
    city = CityMap(meta=meta, landmarks=tuple(landmarks))

    episodes = []
    for i in range(n_episodes):
        landmark = landmarks[int(rng.integers(0, n_landmarks))]
        truth = _sample_near_box(rng, landmark.bbox, meta, max_tries)
        initial = Pose(
            position=Point2D(
                float(rng.uniform(0.0, meta.extent_x)),
                float(rng.uniform(0.0, meta.extent_y)),
            ),
            altitude=float(rng.uniform(10.0, 50.0)),
            heading=float(rng.uniform(0.0, 360.0)),
        )
        color = _COLORS[int(rng.integers(0, len(_COLORS)))]
        obj = _OBJECTS[int(rng.integers(0, len(_OBJECTS)))]
        episodes.append(
            EpisodeSpec(
                id=f"ep-{i:04d}",
                initial=initial,
                description=f"the {color} {obj} near {landmark.name}",
                map=city,
                truth_target=truth,
                truth_landmark_id=landmark.id,
            )
        )
    return city, episodes


def _place_landmarks(
    rng: np.random.Generator, meta: MapMeta, count: int, max_tries: int
) -> list[Landmark]:
    """Pack disjoint boxes sized relative to the map, with generated names."""
    min_side = max(min(meta.width, meta.height) // 50, 8)
    max_side = max(min(meta.width, meta.height) // 12, min_side + 1)
    boxes: list[BBox] = []
    landmarks: list[Landmark] = []
    for i in range(count):
        placed: Optional[BBox] = None
        for _ in range(max_tries):
            w = int(rng.integers(min_side, max_side + 1))
            h = int(rng.integers(min_side, max_side + 1))
            if meta.width - w < 1 or meta.height - h < 1:
                continue
            x1 = int(rng.integers(0, meta.width - w))
            y1 = int(rng.integers(0, meta.height - h))
            candidate = BBox(float(x1), float(y1), float(x1 + w), float(y1 + h))
            if all(not _boxes_overlap(candidate, other) for other in boxes):
                placed = candidate
                break
        if placed is None:
            raise GenerationError(
                f"could not place landmark {i + 1}/{count} after {max_tries} tries"
            )
        boxes.append(placed)
        adjective = _ADJECTIVES[int(rng.integers(0, len(_ADJECTIVES)))]
        place = _PLACES[int(rng.integers(0, len(_PLACES)))]
        landmarks.append(
            Landmark(id=f"lm-{i:03d}", name=f"the {adjective} {place}", bbox=placed)
        )
    return landmarks


def _boxes_overlap(a: BBox, b: BBox) -> bool:
    return not (a.x2 <= b.x1 or b.x2 <= a.x1 or a.y2 <= b.y1 or b.y2 <= a.y1)


def _sample_near_box(
    rng: np.random.Generator, box: BBox, meta: MapMeta, max_tries: int
) -> Point2D:
    """Uniform point within TARGET_NEAR_LANDMARK_M of the box, inside the map."""
    margin = TARGET_NEAR_LANDMARK_M
    lo_x = max(box.x1 * meta.meters_per_pixel - margin, 0.0)
    hi_x = min(box.x2 * meta.meters_per_pixel + margin, meta.extent_x)
    lo_y = max(box.y1 * meta.meters_per_pixel - margin, 0.0)
    hi_y = min(box.y2 * meta.meters_per_pixel + margin, meta.extent_y)
    for _ in range(max_tries):
        p = Point2D(float(rng.uniform(lo_x, hi_x)), float(rng.uniform(lo_y, hi_y)))
        if point_to_bbox_distance(p, box, meta.meters_per_pixel) <= margin:
            return p
    raise GenerationError("could not sample a truth point near the landmark box")
