"""Answer comparison rules used by scoring and by gold-label checks."""

from __future__ import annotations

from .csvio import parse_number
from .types import Answer, AnswerKind

# Relative tolerance for numeric answers.
NUMERIC_REL_TOL = 0.01


def numbers_match(candidate: float, gold: float, rel_tol: float = NUMERIC_REL_TOL) -> bool:
    if gold == 0:
        return candidate == 0
    return abs(candidate - gold) <= rel_tol * abs(gold)


def _as_number(answer: Answer) -> float | None:
    if answer.kind is AnswerKind.NUMBER:
        return float(answer.value)  # type: ignore[arg-type]
    if answer.kind is AnswerKind.TEXT:
        return parse_number(str(answer.value))
    return None


def answers_match(candidate: Answer, gold: Answer, rel_tol: float = NUMERIC_REL_TOL) -> bool:
    """True when the candidate answer counts as correct against the gold label.

    Abstentions never match. Booleans require exact equality. Numbers match
    within a relative tolerance; a text candidate that parses as a number is
    compared numerically. Text matches case-insensitively after trimming.
    """
    if candidate.kind is AnswerKind.ABSTAIN:
        return False
    if gold.kind is AnswerKind.BOOLEAN:
        return candidate.kind is AnswerKind.BOOLEAN and candidate.value == gold.value
    if gold.kind is AnswerKind.NUMBER:
        value = _as_number(candidate)
        if value is None:
            return False
        return numbers_match(value, float(gold.value), rel_tol)  # type: ignore[arg-type]
    if gold.kind is AnswerKind.TEXT:
        gold_text = str(gold.value).strip()
        gold_number = parse_number(gold_text)
        if gold_number is not None:
            value = _as_number(candidate)
            return value is not None and numbers_match(value, gold_number, rel_tol)
        if candidate.kind is not AnswerKind.TEXT:
            return False
        return str(candidate.value).strip().casefold() == gold_text.casefold()
    raise ValueError(f"gold label cannot be {gold.kind}")
