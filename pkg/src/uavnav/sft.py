"""Fine-tuning data filter: drop bad samples, rewrite kept answers to truth."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .geometry import MapMeta, Point2D, distance, m_to_px, px_to_m
from .parsing import ParsedOutput, parse_output, replace_answer_target

MAX_TARGET_ERROR_M = 20.0

DROP_RULE_FORMAT = 1
DROP_RULE_DISTANCE = 2


@dataclass(frozen=True)
class SftSample:
    """One candidate training sample, before or after filtering.

    Kept samples always carry a final_output whose answer target equals
    the truth (pixel) coordinates, with the original reasoning text
    preserved; final_answer_target records the substituted point in
    meters.
    """

    prompt: str
    raw_output: str
    parsed: ParsedOutput
    truth_target: Point2D
    kept: bool = False
    drop_rule: Optional[int] = None
    final_output: Optional[str] = None
    final_answer_target: Optional[Point2D] = None

    def __post_init__(self):
        if self.kept:
            usable = (
                self.parsed.has_think_tag
                and self.parsed.has_answer_tag
                and self.parsed.target_location is not None
            )
            if not usable:
                raise ValueError("kept samples must have both tags and a target")
            if self.final_answer_target != self.truth_target:
                raise ValueError("kept samples must carry the truth target")
            if self.drop_rule is not None:
                raise ValueError("kept samples cannot carry a drop rule")

    @classmethod
    def from_raw(cls, prompt: str, raw_output: str, truth_target: Point2D) -> "SftSample":
        return cls(
            prompt=prompt,
            raw_output=raw_output,
            parsed=parse_output(raw_output),
            truth_target=truth_target,
        )


@dataclass(frozen=True)
class FilterReport:
    """Counts per filtering outcome plus every sample annotated, in input order."""

    total: int
    kept: int
    dropped_format: int
    dropped_distance: int
    samples: tuple[SftSample, ...]


def filter_sft(
    samples: Sequence[SftSample], meta: MapMeta
) -> "tuple[list[SftSample], FilterReport]":
    """Apply the three-rule pipeline; first matching drop rule wins.

    Rule 1 drops outputs missing either tag or an extractable target.
    Rule 2 drops predictions farther than MAX_TARGET_ERROR_M (meters,
    via the map scale) from the truth. Survivors get the truth pixel
    coordinates spliced into their answer's target array (rule 3).
    """
    annotated: list[SftSample] = []
    kept: list[SftSample] = []
    dropped_format = 0
    dropped_distance = 0

    for sample in samples:
        parsed = sample.parsed
        usable = (
            parsed.has_think_tag
            and parsed.has_answer_tag
            and parsed.target_location is not None
        )
        if not usable:
            dropped_format += 1
            annotated.append(replace(sample, kept=False, drop_rule=DROP_RULE_FORMAT))
            continue

        predicted_m = px_to_m(parsed.target_location, meta)
        if distance(predicted_m, sample.truth_target) > MAX_TARGET_ERROR_M:
            dropped_distance += 1
            annotated.append(replace(sample, kept=False, drop_rule=DROP_RULE_DISTANCE))
            continue

        truth_px = m_to_px(sample.truth_target, meta)
        final_output = replace_answer_target(sample.raw_output, truth_px.col, truth_px.row)
        if final_output is None:
            # Unreachable when the parse found a target, but never let a
            # kept sample through without the substitution applied.
            dropped_format += 1
            annotated.append(replace(sample, kept=False, drop_rule=DROP_RULE_FORMAT))
            continue
        kept_sample = replace(
            sample,
            kept=True,
            drop_rule=None,
            final_output=final_output,
            final_answer_target=sample.truth_target,
        )
        annotated.append(kept_sample)
        kept.append(kept_sample)

    report = FilterReport(
        total=len(annotated),
        kept=len(kept),
        dropped_format=dropped_format,
        dropped_distance=dropped_distance,
        samples=tuple(annotated),
    )
    return kept, report
