"""Policies: scripted oracles for testing plus a remote VLM client.

Every policy is a callable (episode, PolicyInput) -> raw model text.
Policies that consume the rendered map set needs_image = True so the
episode loop can skip rasterization for the ones that do not.
"""

from __future__ import annotations

import base64
import logging
import os
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import requests

from .geometry import BBox, Point2D, Pose, m_to_px
from .parsing import format_number
from .prompts import build_prompt
from .rendering import render_map
from .types import EpisodeSpec

log = logging.getLogger(__name__)


class PolicyError(Exception):
    """Base class for policy call failures."""


class TransportError(PolicyError):
    """Network-level failure that persisted through all retries."""


class ProtocolError(PolicyError):
    """The endpoint answered, but not in the expected response shape."""


class RequestError(PolicyError):
    """The endpoint rejected the request (4xx); retrying would not help."""


@dataclass(frozen=True)
class PolicyInput:
    """What one policy call sees: the prompt, the map image, the episode id.

    map_image is the rendered PNG at map dimensions, or None when the
    policy declared it does not consume images.
    """

    prompt: str
    map_image: Optional[bytes]
    episode_id: str

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclass(frozen=True)
class EndpointConfig:
    """Where and how to reach a chat-completions style model server.

    The API key is read from the environment variable named by
    api_key_env_var at request time; when unset the endpoint is assumed
    keyless. backoff_base scales the exponential retry delay.
    """

    base_url: str
    model_name: str
    timeout: float = 30.0
    max_retries: int = 2
    api_key_env_var: str = "UAVNAV_API_KEY"
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.backoff_base < 0:
            raise ValueError(f"backoff_base must be >= 0, got {self.backoff_base}")


def build_policy_input(episode: EpisodeSpec, pose: Pose, include_image: bool) -> PolicyInput:
    """Assemble the prompt (and optionally the rendered map) for one call."""
    return PolicyInput(
        prompt=build_prompt(episode, pose),
        map_image=render_map(episode, pose) if include_image else None,
        episode_id=episode.id,
    )


def format_response(target_px: "tuple[float, float]", bbox: BBox, landmark_name: str) -> str:
    """Canonical well-formed response text: think with bbox, answer with target."""
    box = ", ".join(format_number(v) for v in (bbox.x1, bbox.y1, bbox.x2, bbox.y2))
    target = ", ".join(format_number(v) for v in target_px)
    return (
        f"<think>The description points to the landmark {landmark_name}. "
        f'{{"landmark_bbox": [{box}]}} The target sits next to it.</think>\n'
        f'<answer>{{"target_location": [{target}]}}</answer>'
    )


class OraclePolicy:
    """Answers with the exact truth target and truth landmark box."""

    needs_image = False

    def __call__(self, episode: EpisodeSpec, inp: PolicyInput) -> str:
        lm = episode.truth_landmark
        px = m_to_px(episode.truth_target, episode.map.meta)
        return format_response((px.col, px.row), lm.bbox, lm.name)


class NoisyOraclePolicy:
    """Oracle with isotropic Gaussian position noise (std sigma, meters)."""

    needs_image = False

    def __init__(self, sigma: float, seed: int = 0):
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        self.sigma = sigma
        self._rng = np.random.default_rng(seed)

    def __call__(self, episode: EpisodeSpec, inp: PolicyInput) -> str:
        lm = episode.truth_landmark
        noise = self._rng.normal(0.0, self.sigma, size=2) if self.sigma > 0 else (0.0, 0.0)
        noisy = Point2D(episode.truth_target.x + noise[0], episode.truth_target.y + noise[1])
        px = m_to_px(noisy, episode.map.meta)
        return format_response((px.col, px.row), lm.bbox, lm.name)


class RandomPolicy:
    """Predicts a uniform in-bounds target and a uniformly chosen landmark box."""

    needs_image = False

    def __init__(self, seed: int = 0):
        self._rng = np.random.default_rng(seed)

    def __call__(self, episode: EpisodeSpec, inp: PolicyInput) -> str:
        meta = episode.map.meta
        col = self._rng.uniform(0.0, meta.width)
        row = self._rng.uniform(0.0, meta.height)
        lm = episode.map.landmarks[self._rng.integers(0, len(episode.map.landmarks))]
        return format_response((col, row), lm.bbox, lm.name)


class RemotePolicy:
    """Queries a chat-completions endpoint with the prompt and map image."""

    needs_image = True

    def __init__(self, config: EndpointConfig):
        self.config = config

    def __call__(self, episode: EpisodeSpec, inp: PolicyInput) -> str:
        if inp.map_image is None:
            raise ValueError("remote policy requires a rendered map image")
        return chat_complete(self.config, inp.prompt, inp.map_image)


BUILTIN_KINDS = ("oracle", "noisy_oracle", "random")


def make_policy(
    kind: str,
    sigma: float = 0.0,
    seed: int = 0,
    config: Optional[EndpointConfig] = None,
):
    """Construct a policy by name: oracle, noisy_oracle, random, or remote."""
    if kind == "oracle":
        return OraclePolicy()
    if kind == "noisy_oracle":
        return NoisyOraclePolicy(sigma=sigma, seed=seed)
    if kind == "random":
        return RandomPolicy(seed=seed)
    if kind == "remote":
        if config is None:
            raise ValueError("remote policy requires an EndpointConfig")
        return RemotePolicy(config)
    raise ValueError(f"unknown policy kind {kind!r}")


def builtin_policy(
    kind: str,
    episode: EpisodeSpec,
    inp: PolicyInput,
    seed: int = 0,
    sigma: float = 0.0,
) -> str:
    """One-shot functional form of the scripted policies."""
    if kind not in BUILTIN_KINDS:
        raise ValueError(f"unknown builtin policy kind {kind!r}")
    return make_policy(kind, sigma=sigma, seed=seed)(episode, inp)


def remote_policy(config: EndpointConfig, inp: PolicyInput) -> str:
    """One-shot functional form of the remote client."""
    if inp.map_image is None:
        raise ValueError("remote policy requires a rendered map image")
    return chat_complete(config, inp.prompt, inp.map_image)


def chat_complete(config: EndpointConfig, prompt: str, image_png: Optional[bytes] = None) -> str:
    """POST one user message (text, plus inline PNG when given) and return the reply.

    Sends the widely used chat-completions JSON shape and reads
    choices[0].message.content. Transport failures and 5xx responses are
    retried with exponential backoff up to max_retries; 4xx responses
    raise RequestError immediately; a reply that is not JSON or has no
    choices raises ProtocolError. The API key, when present, travels
    only in the Authorization header and is never logged.
    """
    content: list[dict] = [{"type": "text", "text": prompt}]
    if image_png is not None:
        content.append(
            {
                "type": "image_url",
                "image_url": {
                    "url": "data:image/png;base64," + base64.b64encode(image_png).decode("ascii")
                },
            }
        )
    body = {"model": config.model_name, "messages": [{"role": "user", "content": content}]}

    headers = {}
    api_key = os.environ.get(config.api_key_env_var, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_failure = "no attempt made"
    for attempt in range(config.max_retries + 1):
        if attempt > 0:
            time.sleep(config.backoff_base * (2 ** (attempt - 1)))
        try:
            response = requests.post(
                config.base_url, json=body, headers=headers, timeout=config.timeout
            )
        except requests.RequestException as exc:
            last_failure = f"transport failure: {exc}"
            log.warning("attempt %d/%d failed: %s", attempt + 1, config.max_retries + 1, exc)
            continue

        if 400 <= response.status_code < 500:
            raise RequestError(f"endpoint rejected request: HTTP {response.status_code}")
        if response.status_code != 200:
            last_failure = f"HTTP {response.status_code}"
            log.warning(
                "attempt %d/%d got HTTP %d",
                attempt + 1,
                config.max_retries + 1,
                response.status_code,
            )
            continue
        return _extract_choice_text(response)

    raise TransportError(f"gave up after {config.max_retries + 1} attempts: {last_failure}")


def _extract_choice_text(response: requests.Response) -> str:
    try:
        payload = response.json()
    except ValueError as exc:
        raise ProtocolError(f"response body is not JSON: {exc}") from exc
    try:
        text = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"response JSON has no choices[0].message.content: {exc}") from exc
    if not isinstance(text, str):
        raise ProtocolError(f"choice content is {type(text).__name__}, expected text")
    return text
