import io

import pytest
from PIL import Image

from uavnav.geometry import Point2D, Pose, m_to_px
from uavnav.prompts import build_prompt
from uavnav.rendering import BACKGROUND, RenderError, render_map


class TestBuildPrompt:
    def test_contains_description(self, episode):
        assert episode.description in build_prompt(episode, episode.initial)

    def test_contains_cur_pose_pixels(self, episode):
        pose = episode.initial
        prompt = build_prompt(episode, pose)
        px = m_to_px(pose.position, episode.map.meta)
        assert f"cur_pose = [{round(px.col)}, {round(px.row)}]" in prompt

    def test_contains_output_grammar(self, episode):
        prompt = build_prompt(episode, episode.initial)
        assert "<think>" in prompt and "</think>" in prompt
        assert "<answer>" in prompt and "</answer>" in prompt
        assert '"target_location"' in prompt
        assert '"landmark_bbox"' in prompt

    def test_deterministic(self, episode):
        assert build_prompt(episode, episode.initial) == build_prompt(episode, episode.initial)

    def test_pose_changes_prompt(self, episode):
        moved = Pose(
            Point2D(episode.initial.position.x + 50.0, episode.initial.position.y),
            altitude=episode.initial.altitude,
            heading=episode.initial.heading,
        )
        assert build_prompt(episode, episode.initial) != build_prompt(episode, moved)


def decode(png: bytes) -> Image.Image:
    return Image.open(io.BytesIO(png)).convert("RGB")


class TestRenderMap:
    def test_dimensions_match_map(self, episode):
        image = decode(render_map(episode, episode.initial))
        assert image.size == (episode.map.meta.width, episode.map.meta.height)

    def test_landmark_center_redder_than_background(self, episode):
        image = decode(render_map(episode, episode.initial))
        center = episode.map.landmarks[0].bbox.center
        r, g, b = image.getpixel((int(center.col), int(center.row)))
        assert r > BACKGROUND[0]
        assert g < r and b < r

    def test_footprint_centered_on_pose(self, episode):
        meta = episode.map.meta
        # Dead center with a modest altitude so the square cannot clip.
        pose = Pose(Point2D(meta.extent_x / 2, meta.extent_y / 2), altitude=20.0, heading=0.0)
        image = decode(render_map(episode, pose))
        px = m_to_px(pose.position, meta)
        yellows = [
            (x, y)
            for x in range(image.width)
            for y in range(image.height)
            if image.getpixel((x, y)) == (255, 215, 0)
        ]
        assert yellows, "no footprint pixels rendered"
        center_col = sum(x for x, _ in yellows) / len(yellows)
        center_row = sum(y for _, y in yellows) / len(yellows)
        assert center_col == pytest.approx(px.col, abs=1.5)
        assert center_row == pytest.approx(px.row, abs=1.5)

    def test_deterministic_bytes(self, episode):
        assert render_map(episode, episode.initial) == render_map(episode, episode.initial)

    def test_pose_outside_map_rejected(self, episode):
        bad = Pose(Point2D(-10.0, 0.0), altitude=10.0, heading=0.0)
        with pytest.raises(RenderError):
            render_map(episode, bad)

    def test_downscale(self, episode):
        image = decode(render_map(episode, episode.initial, downscale=2))
        assert image.size == (episode.map.meta.width // 2, episode.map.meta.height // 2)

    def test_downscale_validation(self, episode):
        with pytest.raises(ValueError):
            render_map(episode, episode.initial, downscale=0)

    def test_fov_validation(self, episode):
        with pytest.raises(ValueError):
            render_map(episode, episode.initial, fov_deg=180.0)
