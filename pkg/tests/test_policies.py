import base64
import json
import time

import numpy as np
import pytest

from conftest import chat_reply
from uavnav.geometry import Point2D, distance, px_to_m
from uavnav.parsing import parse_output
from uavnav.policies import (
    EndpointConfig,
    NoisyOraclePolicy,
    OraclePolicy,
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
from uavnav.rewards import RewardParams, total_reward


def policy_input(episode, include_image=False) -> PolicyInput:
    return build_policy_input(episode, episode.initial, include_image=include_image)


class TestBuiltinPolicies:
    def test_oracle_scores_three(self, episode):
        raw = OraclePolicy()(episode, policy_input(episode))
        parsed = parse_output(raw)
        breakdown = total_reward(
            parsed,
            episode.truth_target,
            episode.truth_landmark.bbox,
            episode.map.meta,
            RewardParams(),
        )
        assert breakdown.total == pytest.approx(3.0, abs=1e-9)

    def test_zero_sigma_noisy_equals_oracle(self, episode):
        oracle = OraclePolicy()(episode, policy_input(episode))
        noisy = NoisyOraclePolicy(sigma=0.0, seed=4)(episode, policy_input(episode))
        assert parse_output(noisy).target_location == parse_output(oracle).target_location

    def test_noisy_mean_near_truth(self, episode):
        n = 10_000
        policy = NoisyOraclePolicy(sigma=30.0, seed=7)
        meta = episode.map.meta
        points = []
        for _ in range(n):
            parsed = parse_output(policy(episode, policy_input(episode)))
            points.append(px_to_m(parsed.target_location, meta))
        mean = Point2D(
            sum(p.x for p in points) / n,
            sum(p.y for p in points) / n,
        )
        tolerance = 3.0 * 30.0 / 100.0
        assert abs(mean.x - episode.truth_target.x) <= tolerance
        assert abs(mean.y - episode.truth_target.y) <= tolerance

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            NoisyOraclePolicy(sigma=-1.0, seed=0)

    def test_random_covers_quadrants(self, episode):
        meta = episode.map.meta
        policy = RandomPolicy(seed=13)
        counts = {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 0}
        n = 1000
        for _ in range(n):
            parsed = parse_output(policy(episode, policy_input(episode)))
            point = px_to_m(parsed.target_location, meta)
            key = (int(point.x >= meta.extent_x / 2), int(point.y >= meta.extent_y / 2))
            counts[key] += 1
        for quadrant, count in counts.items():
            assert abs(count / n - 0.25) <= 0.05, (quadrant, count)

    def test_all_builtins_emit_full_grammar(self, episode):
        for kind in ("oracle", "noisy_oracle", "random"):
            policy = make_policy(kind, sigma=10.0, seed=3)
            parsed = parse_output(policy(episode, policy_input(episode)))
            assert parsed.has_think_tag and parsed.has_answer_tag
            assert parsed.target_location is not None
            assert parsed.landmark_bbox is not None

    def test_builtin_policy_one_shot(self, episode):
        raw = builtin_policy("oracle", episode, policy_input(episode), seed=0)
        truth_px = parse_output(raw).target_location
        assert distance(px_to_m(truth_px, episode.map.meta), episode.truth_target) < 1e-9

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            make_policy("psychic")

    def test_builtins_do_not_request_images(self):
        for kind in ("oracle", "noisy_oracle", "random"):
            assert make_policy(kind, seed=0).needs_image is False

    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            PolicyInput(prompt="", map_image=None, episode_id="e")


class TestEndpointConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            EndpointConfig(base_url="http://x", model_name="m", timeout=0)
        with pytest.raises(ValueError):
            EndpointConfig(base_url="http://x", model_name="m", max_retries=-1)


def endpoint_for(server, **overrides) -> EndpointConfig:
    settings = dict(
        base_url=server.url,
        model_name="stub-model",
        timeout=5.0,
        max_retries=2,
        backoff_base=0.01,
    )
    settings.update(overrides)
    return EndpointConfig(**settings)


class TestWireProtocol:
    def test_body_shape_and_image_data_url(self, stub_server, episode, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        server = stub_server([(200, chat_reply("hello"))])
        inp = policy_input(episode, include_image=True)
        text = RemotePolicy(endpoint_for(server))(episode, inp)
        assert text == "hello"

        assert len(server.requests) == 1
        body = server.requests[0]["body"]
        assert body["model"] == "stub-model"
        assert len(body["messages"]) == 1
        message = body["messages"][0]
        assert message["role"] == "user"
        text_parts = [p for p in message["content"] if p["type"] == "text"]
        image_parts = [p for p in message["content"] if p["type"] == "image_url"]
        assert len(text_parts) == 1 and len(image_parts) == 1
        assert text_parts[0]["text"] == inp.prompt
        url = image_parts[0]["image_url"]["url"]
        prefix = "data:image/png;base64,"
        assert url.startswith(prefix)
        assert base64.b64decode(url[len(prefix):]) == inp.map_image

    def test_auth_header_from_env(self, stub_server, monkeypatch):
        server = stub_server([(200, chat_reply("ok"))])
        monkeypatch.setenv("UAVNAV_API_KEY", "sekrit")
        chat_complete(endpoint_for(server), "prompt")
        assert server.requests[0]["headers"].get("Authorization") == "Bearer sekrit"

    def test_no_auth_header_when_keyless(self, stub_server, monkeypatch):
        server = stub_server([(200, chat_reply("ok"))])
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        chat_complete(endpoint_for(server), "prompt")
        assert "Authorization" not in server.requests[0]["headers"]

    def test_text_only_call_has_no_image_part(self, stub_server, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        server = stub_server([(200, chat_reply("ok"))])
        chat_complete(endpoint_for(server), "judge this")
        content = server.requests[0]["body"]["messages"][0]["content"]
        assert [p["type"] for p in content] == ["text"]

    def test_retry_on_5xx_then_success(self, stub_server, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        server = stub_server(
            [(500, b"boom"), (500, b"boom"), (200, chat_reply("recovered"))]
        )
        assert chat_complete(endpoint_for(server), "p") == "recovered"
        assert len(server.requests) == 3

    def test_retries_exhausted_raise_transport_error(self, stub_server, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        server = stub_server([(503, b"down")])
        with pytest.raises(TransportError):
            chat_complete(endpoint_for(server, max_retries=1), "p")
        assert len(server.requests) == 2

    def test_4xx_raises_without_retry(self, stub_server, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        server = stub_server([(401, b"no")])
        with pytest.raises(RequestError):
            chat_complete(endpoint_for(server), "p")
        assert len(server.requests) == 1

    def test_timeout_is_retried_then_raises(self, stub_server, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        server = stub_server([(200, chat_reply("late"), 1.0)])
        config = endpoint_for(server, timeout=0.15, max_retries=1)
        started = time.monotonic()
        with pytest.raises(TransportError):
            chat_complete(config, "p")
        assert time.monotonic() - started < 3.0
        assert len(server.requests) == 2

    def test_non_json_response_is_protocol_error(self, stub_server, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        server = stub_server([(200, b"<html>not json</html>")])
        with pytest.raises(ProtocolError):
            chat_complete(endpoint_for(server), "p")

    def test_choiceless_response_is_protocol_error(self, stub_server, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        server = stub_server([(200, json.dumps({"choices": []}).encode())])
        with pytest.raises(ProtocolError):
            chat_complete(endpoint_for(server), "p")

    def test_non_text_content_is_protocol_error(self, stub_server, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        payload = json.dumps({"choices": [{"message": {"content": 42}}]}).encode()
        server = stub_server([(200, payload)])
        with pytest.raises(ProtocolError):
            chat_complete(endpoint_for(server), "p")

    def test_remote_policy_requires_image(self, episode):
        config = EndpointConfig(base_url="http://127.0.0.1:9", model_name="m")
        with pytest.raises(ValueError):
            RemotePolicy(config)(episode, policy_input(episode, include_image=False))
        with pytest.raises(ValueError):
            remote_policy(config, policy_input(episode, include_image=False))

    def test_remote_policy_declares_image_need(self):
        config = EndpointConfig(base_url="http://127.0.0.1:9", model_name="m")
        assert RemotePolicy(config).needs_image is True

    def test_connection_refused_is_transport_error(self, monkeypatch):
        monkeypatch.delenv("UAVNAV_API_KEY", raising=False)
        config = EndpointConfig(
            base_url="http://127.0.0.1:9/v1/chat/completions",
            model_name="m",
            timeout=0.5,
            max_retries=0,
            backoff_base=0.0,
        )
        with pytest.raises(TransportError):
            chat_complete(config, "p")
