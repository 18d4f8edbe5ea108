"""Decode raw model text into the `<think>/<answer>` structure rewards consume.

Parsing is total: any str or bytes input yields a ParsedOutput, never an
exception. Malformed pieces show up as absent fields or false flags.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

from .geometry import BBox, PixelPoint

_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
# Bracketed payload after the quoted key; contents validated separately.
_BBOX_RE = re.compile(r'"landmark_bbox"\s*:\s*\[([^\[\]]*)\]')
_TARGET_RE = re.compile(r'"target_location"\s*:\s*\[([^\[\]]*)\]')


@dataclass(frozen=True)
class ParsedOutput:
    """Structured view of one model response.

    think_text / answer_text hold the raw inner spans ("" when the tag
    pair is missing). landmark_bbox can be present only when the think
    tag is, target_location only when the answer tag is.
    """

    think_text: str = ""
    answer_text: str = ""
    has_think_tag: bool = False
    has_answer_tag: bool = False
    landmark_bbox: Optional[BBox] = None
    target_location: Optional[PixelPoint] = None

    def __post_init__(self):
        if self.landmark_bbox is not None and not self.has_think_tag:
            raise ValueError("landmark_bbox requires a think tag")
        if self.target_location is not None and not self.has_answer_tag:
            raise ValueError("target_location requires an answer tag")


def _parse_numbers(payload: str, arity: int) -> Optional[list[float]]:
    """Comma-separated numbers, or None on wrong arity / non-numeric / non-finite."""
    parts = payload.split(",")
    if len(parts) != arity:
        return None
    values = []
    for part in parts:
        try:
            value = float(part.strip())
        except ValueError:
            return None
        if not math.isfinite(value):
            return None
        values.append(value)
    return values


def _first_bbox(text: str) -> Optional[BBox]:
    for match in _BBOX_RE.finditer(text):
        values = _parse_numbers(match.group(1), 4)
        if values is not None:
            return BBox.from_corners(*values)
    return None


def _first_target(text: str) -> Optional[PixelPoint]:
    for match in _TARGET_RE.finditer(text):
        values = _parse_numbers(match.group(1), 2)
        if values is not None:
            return PixelPoint(values[0], values[1])
    return None


def parse_output(raw: "str | bytes") -> ParsedOutput:
    """Extract think/answer spans and their structured fields from raw text.

    The first complete tag pair wins; within the think span the first
    "landmark_bbox" entry that holds exactly four numbers wins (corners
    are reordered if swapped), and within the answer span the first
    two-number "target_location" wins. Anything unextractable is simply
    absent. Never raises.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", errors="replace")
    elif not isinstance(raw, str):
        raw = str(raw)

    think_match = _THINK_RE.search(raw)
    answer_match = _ANSWER_RE.search(raw)
    think_text = think_match.group(1) if think_match else ""
    answer_text = answer_match.group(1) if answer_match else ""

    bbox = _first_bbox(think_text) if think_match else None
    target = _first_target(answer_text) if answer_match else None

    return ParsedOutput(
        think_text=think_text,
        answer_text=answer_text,
        has_think_tag=think_match is not None,
        has_answer_tag=answer_match is not None,
        landmark_bbox=bbox,
        target_location=target,
    )


def format_number(value: float) -> str:
    """Integer-valued floats print without a decimal point."""
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def replace_answer_target(raw: str, col: float, row: float) -> Optional[str]:
    """Rewrite the committed target_location numbers inside the answer span.

    Splices new coordinates into exactly the array parse_output would
    read, leaving every other character of raw (think text included)
    untouched. Returns None when raw has no answer span or no
    well-formed target to rewrite.
    """
    answer_match = _ANSWER_RE.search(raw)
    if answer_match is None:
        return None
    for match in _TARGET_RE.finditer(answer_match.group(1)):
        if _parse_numbers(match.group(1), 2) is not None:
            start = answer_match.start(1) + match.start(1)
            end = answer_match.start(1) + match.end(1)
            return raw[:start] + f"{format_number(col)}, {format_number(row)}" + raw[end:]
    return None


def serialize_output(parsed: ParsedOutput) -> str:
    """Render a ParsedOutput back into canonical tag form.

    Re-parsing the result reproduces any ParsedOutput that itself came
    from parse_output. When a span embeds tag text of the other kind,
    plain concatenation can shadow the other section on re-parse, so a
    family of candidate layouts is tried (either section order, one span
    nested in the other, the two spans interleaved) and the first one
    that re-parses to equality is returned. Values not produced by
    parse_output fall back to the think-first layout unverified.
    """
    think_section = f"<think>{parsed.think_text}</think>" if parsed.has_think_tag else None
    answer_section = f"<answer>{parsed.answer_text}</answer>" if parsed.has_answer_tag else None
    if think_section is None or answer_section is None:
        return think_section or answer_section or ""

    candidates = [
        f"{think_section}\n{answer_section}",
        f"{answer_section}\n{think_section}",
        think_section,  # a complete answer pair already sits inside the think span
        answer_section,  # a complete think pair already sits inside the answer span
    ]
    # Interleaved spans: the answer opened inside the think span and ran
    # past its close (or the mirror image); rebuild the original overlap.
    head, sep, tail = parsed.think_text.partition("<answer>")
    if sep:
        overlap = tail + "</think>"
        if parsed.answer_text.startswith(overlap):
            candidates.append(
                think_section + parsed.answer_text[len(overlap):] + "</answer>"
            )
    head, sep, tail = parsed.answer_text.partition("<think>")
    if sep:
        overlap = tail + "</answer>"
        if parsed.think_text.startswith(overlap):
            candidates.append(
                answer_section + parsed.think_text[len(overlap):] + "</think>"
            )

    for candidate in candidates:
        if parse_output(candidate) == parsed:
            return candidate
    return candidates[0]
