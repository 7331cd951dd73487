"""Similarity scoring between produced and reference tables/programs.

Each family yields four scores: a model-judge score and an embedding-cosine
score over the raw pair, then the same two after an alignment step (greedy
column matching for tables, canonical normalization for programs). A gateway
failure leaves the affected scores absent and flagged; scores are never
silently zero-filled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..core.csvio import format_cell, table_to_text
from ..core.types import StructuredTable
from ..gateway.base import GatewayError, ModelGateway
from .normalize import try_normalize

HEAD_ROWS = 5

DATA_RUBRIC = (
    "Score how similar the two tables are in schema and content, "
    "from 0 (unrelated) to 1 (identical)."
)
CODE_RUBRIC = (
    "Score how similar the two analytic programs are in computation, "
    "from 0 (unrelated) to 1 (equivalent)."
)


@dataclass(frozen=True, slots=True)
class ScorePair:
    judge: float | None
    embed: float | None


@dataclass(frozen=True, slots=True)
class SimilarityScores:
    """raw = as produced; aligned = after column matching / normalization."""

    raw: ScorePair
    aligned: ScorePair
    flags: tuple[str, ...] = ()

    def as_list(self) -> list[float | None]:
        return [self.raw.judge, self.raw.embed, self.aligned.judge, self.aligned.embed]


def cosine(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for a zero vector")
    # negative similarity carries no signal for this scoring; clamp into [0, 1]
    return min(1.0, max(0.0, dot / (na * nb)))


def _column_text(table: StructuredTable, index: int) -> str:
    cells = ", ".join(format_cell(row[index]) for row in table.rows)
    return f"{table.columns[index]}: {cells}"


def match_columns(
    candidate: StructuredTable, gold: StructuredTable, gateway: ModelGateway
) -> list[tuple[int, int]]:
    """Greedy candidate→gold column pairs, argmax cosine without replacement.

    Candidate columns are considered in order; each takes the most similar
    still-unclaimed gold column. Kept greedy (not optimal assignment) on
    purpose; swapping the strategy only means replacing this function.
    """
    gold_vectors = [
        gateway.embed(_column_text(gold, j)) for j in range(gold.width)
    ]
    taken: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for i in range(candidate.width):
        vector = gateway.embed(_column_text(candidate, i))
        best_j, best_score = -1, -1.0
        for j in range(gold.width):
            if j in taken:
                continue
            score = cosine(vector, gold_vectors[j])
            if score > best_score:
                best_j, best_score = j, score
        if best_j < 0:
            break  # more candidate columns than gold columns
        taken.add(best_j)
        pairs.append((i, best_j))
    return pairs


def align_columns(
    candidate: StructuredTable, gold: StructuredTable, gateway: ModelGateway
) -> StructuredTable:
    """Candidate reordered into gold's column order; unmatched columns last."""
    pairs = match_columns(candidate, gold, gateway)
    by_gold = sorted(pairs, key=lambda p: p[1])
    order = [i for i, _ in by_gold]
    order += [i for i in range(candidate.width) if i not in {p[0] for p in pairs}]
    columns = tuple(candidate.columns[i] for i in order)
    rows = tuple(tuple(row[i] for i in order) for row in candidate.rows)
    return StructuredTable(columns, rows)


def _pair_scores(
    first: str, second: str, rubric: str, gateway: ModelGateway
) -> tuple[ScorePair, list[str]]:
    flags: list[str] = []
    judge: float | None = None
    embed: float | None = None
    try:
        judge = gateway.judge(first, second, rubric)
    except GatewayError as e:
        flags.append(f"judge unavailable: {e}")
    try:
        embed = cosine(gateway.embed(first), gateway.embed(second))
    except (GatewayError, ValueError) as e:
        flags.append(f"embedding unavailable: {e}")
    return ScorePair(judge, embed), flags


def data_similarity(
    candidate: StructuredTable,
    gold: StructuredTable,
    gateway: ModelGateway,
    head_rows: int = HEAD_ROWS,
) -> SimilarityScores:
    """Four table scores over heads (header + first head_rows rows)."""
    if candidate.is_empty:
        return SimilarityScores(
            ScorePair(0.0, 0.0), ScorePair(0.0, 0.0), ("empty candidate table",)
        )
    if gold.is_empty:
        raise ValueError("gold table must be non-empty")
    cand_head = candidate.head(head_rows)
    gold_head = gold.head(head_rows)
    raw, flags = _pair_scores(
        table_to_text(cand_head), table_to_text(gold_head), DATA_RUBRIC, gateway
    )
    try:
        aligned_head = align_columns(cand_head, gold_head, gateway)
    except (GatewayError, ValueError) as e:
        return SimilarityScores(
            raw, ScorePair(None, None), tuple(flags + [f"column match failed: {e}"])
        )
    aligned, aligned_flags = _pair_scores(
        table_to_text(aligned_head), table_to_text(gold_head), DATA_RUBRIC, gateway
    )
    return SimilarityScores(raw, aligned, tuple(flags + aligned_flags))


def code_similarity(
    candidate: str, gold: str, gateway: ModelGateway
) -> SimilarityScores:
    """Four program scores: raw pair, then normalized pair."""
    if not candidate.strip():
        return SimilarityScores(
            ScorePair(0.0, 0.0), ScorePair(0.0, 0.0), ("empty candidate program",)
        )
    if not gold.strip():
        raise ValueError("gold program must be non-empty")
    raw, flags = _pair_scores(candidate, gold, CODE_RUBRIC, gateway)
    cand_norm, cand_ok = try_normalize(candidate)
    gold_norm, gold_ok = try_normalize(gold)
    if not cand_ok or not gold_ok:
        which = "candidate" if not cand_ok else "gold"
        return SimilarityScores(
            raw,
            ScorePair(None, None),
            tuple(flags + [f"normalization failed for {which} program"]),
        )
    aligned, aligned_flags = _pair_scores(cand_norm, gold_norm, CODE_RUBRIC, gateway)
    return SimilarityScores(raw, aligned, tuple(flags + aligned_flags))
