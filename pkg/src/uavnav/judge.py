"""Reasoning-quality scoring: judge prompt, reply parsing, repeated averaging."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .policies import EndpointConfig, PolicyError, chat_complete

log = logging.getLogger(__name__)

DEFAULT_REPEATS = 3

_JUDGE_TEMPLATE = """\
System Message:

You are a language model output quality evaluator. Please evaluate the following text based on the three criteria below.

Evaluation Criteria Definitions:

1. Completeness
- Does the text fully present all the necessary reasoning steps or information needed to answer the question or solve the problem?
- Are there any missing steps, skipped logic, or gaps in reasoning?
2. Coherence
- Is the reasoning internally consistent and logically connected? Are there any contradictions or abrupt jumps?
3. Fluency
- Is the language natural and smooth? Are grammar, sentence structure, and word choice appropriate?

Scoring Guideline:

- 1: Very poor
- 2: Poor
- 3: Fair
- 4: Good
- 5: Excellent
Based on the above definitions and scoring scale, please evaluate the following text. Output one integer score (1-5) per criterion. Strictly follow the format below so it can be parsed by code.

Language Model Output:

{output}

Output Format:

- Completeness: x
- Coherence: x
- Fluency: x
"""

_SCORE_RES = {
    "completeness": re.compile(r"-\s*Completeness:\s*(-?\d+)"),
    "coherence": re.compile(r"-\s*Coherence:\s*(-?\d+)"),
    "fluency": re.compile(r"-\s*Fluency:\s*(-?\d+)"),
}


class JudgeParseError(ValueError):
    """A required labeled score line is missing from the judge reply."""


class JudgeRangeError(ValueError):
    """A score line parsed but its value falls outside the 1-5 scale."""


@dataclass(frozen=True)
class JudgeScores:
    """Per-criterion scores on the 1-5 scale.

    Single-run scores are integers; averaged scores carry two decimals
    and averaged_over records how many successful runs went in.
    """

    completeness: float
    coherence: float
    fluency: float
    averaged_over: int = 1

    def __post_init__(self):
        for name in ("completeness", "coherence", "fluency"):
            value = getattr(self, name)
            if not (1.0 <= value <= 5.0):
                raise ValueError(f"{name} must be within [1, 5], got {value}")
        if self.averaged_over < 1:
            raise ValueError("averaged_over must be >= 1")


@dataclass(frozen=True)
class JudgeResult:
    """Outcome for one judged output: averaged scores plus failure records."""

    scores: Optional[JudgeScores]
    repeats_used: int
    failures: tuple[str, ...] = ()

    @property
    def partial(self) -> bool:
        return bool(self.failures) and self.scores is not None


def judge_prompt(output_text: str) -> str:
    """Wrap a model output in the three-criteria evaluation prompt."""
    if not output_text:
        raise ValueError("output_text must be non-empty")
    return _JUDGE_TEMPLATE.format(output=output_text)


def parse_judge(reply: str) -> JudgeScores:
    """Read the three labeled integer lines from one judge reply.

    The first matching line per label wins when the judge adds prose
    around the format block. All three labels are required and each
    value must sit in [1, 5].
    """
    values = {}
    for name, pattern in _SCORE_RES.items():
        match = pattern.search(reply)
        if match is None:
            raise JudgeParseError(f"no '- {name.capitalize()}: <score>' line in judge reply")
        value = int(match.group(1))
        if not (1 <= value <= 5):
            raise JudgeRangeError(f"{name} score {value} outside the 1-5 scale")
        values[name] = value
    return JudgeScores(**values)


def judge_many(
    outputs: Sequence[str],
    endpoint: Optional[EndpointConfig] = None,
    repeats: int = DEFAULT_REPEATS,
    scorer: Optional[Callable[[str], str]] = None,
) -> list[JudgeResult]:
    """Score each output `repeats` times and average per criterion.

    scorer maps a judge prompt to a reply text; by default it is a
    text-only call to the configured endpoint. A failed repeat (transport
    or parse) is recorded and the average covers the successful runs
    only; an output whose every repeat failed gets scores = None.
    Averages are rounded to 2 decimals.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if scorer is None:
        if endpoint is None:
            raise ValueError("judge_many needs an endpoint or an injected scorer")
        config = endpoint

        def scorer(prompt: str) -> str:
            return chat_complete(config, prompt)

    results = []
    for index, output in enumerate(outputs):
        prompt = judge_prompt(output)
        runs: list[JudgeScores] = []
        failures: list[str] = []
        for _ in range(repeats):
            try:
                runs.append(parse_judge(scorer(prompt)))
            except (PolicyError, JudgeParseError, JudgeRangeError) as exc:
                failures.append(str(exc))
        if not runs:
            log.warning("output %d: all %d judge runs failed", index, repeats)
            results.append(JudgeResult(scores=None, repeats_used=0, failures=tuple(failures)))
            continue
        n = len(runs)
        averaged = JudgeScores(
            completeness=round(sum(r.completeness for r in runs) / n, 2),
            coherence=round(sum(r.coherence for r in runs) / n, 2),
            fluency=round(sum(r.fluency for r in runs) / n, 2),
            averaged_over=n,
        )
        results.append(JudgeResult(scores=averaged, repeats_used=n, failures=tuple(failures)))
    return results
