import pytest

from uavnav.citygen import TARGET_NEAR_LANDMARK_M, GenerationError, gen_synthetic_city
from uavnav.geometry import BBox, Point2D, in_map_bounds, point_to_bbox_distance


def meters_box(bbox: BBox, mpp: float) -> BBox:
    return BBox(bbox.x1 * mpp, bbox.y1 * mpp, bbox.x2 * mpp, bbox.y2 * mpp)


class TestGeneration:
    def test_deterministic_in_seed(self):
        a = gen_synthetic_city(seed=3, extent=300, n_landmarks=4, n_episodes=6)
        b = gen_synthetic_city(seed=3, extent=300, n_landmarks=4, n_episodes=6)
        assert a == b

    def test_different_seeds_differ(self):
        a = gen_synthetic_city(seed=3, extent=300, n_landmarks=4, n_episodes=6)
        b = gen_synthetic_city(seed=4, extent=300, n_landmarks=4, n_episodes=6)
        assert a != b

    def test_landmark_count_and_disjointness(self):
        city, _ = gen_synthetic_city(seed=0, extent=400, n_landmarks=5, n_episodes=1)
        assert len(city.landmarks) == 5
        boxes = [lm.bbox for lm in city.landmarks]
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                a, b = boxes[i], boxes[j]
                overlap_x = min(a.x2, b.x2) - max(a.x1, b.x1)
                overlap_y = min(a.y2, b.y2) - max(a.y1, b.y1)
                assert overlap_x <= 0 or overlap_y <= 0

    def test_unique_ids_and_names(self):
        city, _ = gen_synthetic_city(seed=1, extent=400, n_landmarks=6, n_episodes=1)
        assert len({lm.id for lm in city.landmarks}) == 6

    def test_truth_near_named_landmark(self):
        city, episodes = gen_synthetic_city(seed=2, extent=400, n_landmarks=5, n_episodes=40)
        mpp = city.meta.meters_per_pixel
        for ep in episodes:
            box_m = meters_box(ep.truth_landmark.bbox, mpp)
            assert point_to_bbox_distance(ep.truth_target, box_m) <= TARGET_NEAR_LANDMARK_M + 1e-9

    def test_description_names_landmark(self):
        _, episodes = gen_synthetic_city(seed=2, extent=400, n_landmarks=5, n_episodes=10)
        for ep in episodes:
            assert ep.truth_landmark.name in ep.description
            assert ep.description.startswith("the ")

    def test_episode_count_and_ids(self):
        _, episodes = gen_synthetic_city(seed=9, extent=300, n_landmarks=3, n_episodes=17)
        assert len(episodes) == 17
        assert len({ep.id for ep in episodes}) == 17

    def test_start_poses_in_bounds(self):
        city, episodes = gen_synthetic_city(seed=5, extent=250, n_landmarks=4, n_episodes=25)
        for ep in episodes:
            assert in_map_bounds(ep.initial.position, city.meta)
            assert ep.initial.altitude >= 0
            assert 0 <= ep.initial.heading < 360

    def test_meters_per_pixel_scales_map(self):
        city, _ = gen_synthetic_city(
            seed=0, extent=400, n_landmarks=3, n_episodes=1, meters_per_pixel=2.0
        )
        assert city.meta.width == 200
        assert city.meta.extent_x == 400.0

    def test_infeasible_packing_raises(self):
        with pytest.raises(GenerationError):
            gen_synthetic_city(seed=0, extent=60, n_landmarks=50, n_episodes=1)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            gen_synthetic_city(seed=0, extent=0, n_landmarks=1, n_episodes=1)
        with pytest.raises(ValueError):
            gen_synthetic_city(seed=0, extent=100, n_landmarks=0, n_episodes=1)
