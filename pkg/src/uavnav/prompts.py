"""Prompt construction for vision-language navigation policies."""

from __future__ import annotations

from .geometry import Pose, m_to_px
from .types import EpisodeSpec

_PROMPT_TEMPLATE = """\
System Message:

You are an intelligent autonomous aerial vehicle (UAV) capable of real-world navigation and visual target localization.

Mission Objective:

Your mission is to locate a specific target described in natural language instructions.

Details of the Target:

{description}

Environmental Perception:

- The UAV's current position is indicated by the starting point of an arrow in the image, with its heading angle represented by the arrow's direction.
- The yellow box outlines the UAV's current camera field of view on the map, centered at pixel coordinates: cur_pose = [{col}, {row}].
- Landmark regions are highlighted with red masks.

Operational Guidance:

- The target is usually located near a red-masked landmark.
- Use both the target description and the visual input to identify the most relevant red-masked landmark region.
- Infer the relative position of the target with respect to that landmark.

Output Format Specification:

- Present your reasoning process within <think> and </think> tags.
- Provide your final answer within <answer> and </answer> tags in the following format: {{"target_location": [x, y]}}
Your reasoning may include:
    - A semantic interpretation of the target description.
    - Identification of the correct landmark region.
    - The bounding box of that region in the following format:
    {{"landmark_bbox": [x1, y1, x2, y2]}}
"""


def build_prompt(episode: EpisodeSpec, pose: Pose) -> str:
    """Fill the navigation prompt with the episode description and current pose.

    The pose enters as integer pixel coordinates (cur_pose) so the model
    sees the same frame the map image uses. Deterministic in its inputs.
    """
    px = m_to_px(pose.position, episode.map.meta)
    return _PROMPT_TEMPLATE.format(
        description=episode.description,
        col=round(px.col),
        row=round(px.row),
    )
