"""Rasterize the semantic map a vision policy looks at."""

from __future__ import annotations

import io
import math

from PIL import Image, ImageDraw

from .geometry import Pose, in_map_bounds, m_to_px
from .types import EpisodeSpec

BACKGROUND = (200, 200, 200)
LANDMARK_RED = (255, 40, 40, 110)
FOOTPRINT_YELLOW = (255, 215, 0)
ARROW_BLUE = (20, 20, 230)

DEFAULT_FOV_DEG = 90.0


class RenderError(ValueError):
    """The requested view cannot be drawn (pose off-map)."""


def render_map(
    episode: EpisodeSpec,
    pose: Pose,
    fov_deg: float = DEFAULT_FOV_DEG,
    downscale: int = 1,
) -> bytes:
    """Draw the annotated map as PNG bytes.

    Landmark boxes are filled with translucent red, the camera footprint
    is a yellow square centered on the UAV's pixel position with side
    2 * altitude * tan(fov/2) / meters_per_pixel, and an arrow starting
    at the UAV position points along its heading. Output is
    deterministic for identical inputs. downscale > 1 shrinks the
    output by that integer factor for cheaper transport; at 1 the image
    matches the map dimensions exactly.
    """
    meta = episode.map.meta
    if not in_map_bounds(pose.position, meta):
        raise RenderError(f"pose position {pose.position} outside map extent")
    if downscale < 1:
        raise ValueError(f"downscale must be >= 1, got {downscale}")
    if not (0 < fov_deg < 180):
        raise ValueError(f"fov_deg must be in (0, 180), got {fov_deg}")

    base = Image.new("RGB", (meta.width, meta.height), BACKGROUND)
    overlay = Image.new("RGBA", base.size, (0, 0, 0, 0))
    draw = ImageDraw.Draw(overlay)
    for lm in episode.map.landmarks:
        box = lm.bbox
        draw.rectangle((box.x1, box.y1, box.x2, box.y2), fill=LANDMARK_RED)
    base = Image.alpha_composite(base.convert("RGBA"), overlay).convert("RGB")

    draw = ImageDraw.Draw(base)
    px = m_to_px(pose.position, meta)
    half_side = pose.altitude * math.tan(math.radians(fov_deg) / 2.0) / meta.meters_per_pixel
    if half_side > 0:
        draw.rectangle(
            (px.col - half_side, px.row - half_side, px.col + half_side, px.row + half_side),
            outline=FOOTPRINT_YELLOW,
            width=2,
        )

    _draw_heading_arrow(draw, px.col, px.row, pose.heading)

    if downscale > 1:
        base = base.resize(
            (max(meta.width // downscale, 1), max(meta.height // downscale, 1)),
            Image.BILINEAR,
        )

    buf = io.BytesIO()
    base.save(buf, format="PNG")
    return buf.getvalue()


def _draw_heading_arrow(draw: ImageDraw.ImageDraw, col: float, row: float, heading: float):
    """Arrow anchored at (col, row), pointing along the heading.

    Heading 0 points toward +row (the +y axis in the metric frame),
    heading 90 toward +col.
    """
    rad = math.radians(heading)
    ux, uy = math.sin(rad), math.cos(rad)
    length = 14.0
    tip = (col + length * ux, row + length * uy)
    draw.line((col, row, tip[0], tip[1]), fill=ARROW_BLUE, width=2)
    for side in (150.0, -150.0):
        srad = math.radians(heading + side)
        draw.line(
            (tip[0], tip[1], tip[0] + 5.0 * math.sin(srad), tip[1] + 5.0 * math.cos(srad)),
            fill=ARROW_BLUE,
            width=2,
        )
