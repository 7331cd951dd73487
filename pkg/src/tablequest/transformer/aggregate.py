"""Combine two structured tables into one.

Three patterns cover real collections:

- column aggregation: the tables describe the same entities with different
  attributes; equijoin on a shared key column (UNION of columns, so to speak).
- row aggregation: the tables have the same schema and stack (UNION ALL).
- mixed aggregation: same schema but each table covers a different slice
  (say, one year per sheet); stack and add a discriminator column recording
  the slice, deduplicating exact repeats (UNION).

Pattern choice is deterministic, in a fixed rule order, with an optional
model-backed chooser only for the leftover ambiguous cases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

from ..core.csvio import cells_equal, format_cell
from ..core.types import Cell, Query, StructuredTable
from ..analyzer.executor import execute_equijoin


class AggregationError(Exception):
    """No pattern fits; carries both schemas for diagnostics."""

    def __init__(self, message: str, left: tuple[str, ...], right: tuple[str, ...]):
        super().__init__(f"{message}; left schema {left}, right schema {right}")
        self.left_schema = left
        self.right_schema = right


@dataclass(frozen=True, slots=True)
class Discriminator:
    """Slice column for mixed aggregation: name plus each side's value."""

    column: str
    left_value: Cell = None
    right_value: Cell = None


@dataclass(frozen=True, slots=True)
class AggregationContext:
    """What the caller already knows: the open information items and, when
    units arrived labeled (sheet names, file years), a ready discriminator."""

    missing: tuple[str, ...] = ()
    discriminator: Discriminator | None = None


# fraction of key values that must overlap for key detection
KEY_OVERLAP_THRESHOLD = 0.8


def fold_name(name: str) -> str:
    return "".join(ch for ch in name.casefold() if ch.isalnum())


def _folded(columns: tuple[str, ...]) -> list[str]:
    return [fold_name(c) for c in columns]


def _align_right(left: StructuredTable, right: StructuredTable) -> StructuredTable | None:
    """Reorder (and take names from) the left schema when folded names match
    as a set; None when they do not."""
    lf, rf = _folded(left.columns), _folded(right.columns)
    if sorted(lf) != sorted(rf) or len(set(lf)) != len(lf) or len(set(rf)) != len(rf):
        return None
    order = [rf.index(f) for f in lf]
    rows = tuple(tuple(row[i] for i in order) for row in right.rows)
    return StructuredTable(left.columns, rows)


def row_aggregate(left: StructuredTable, right: StructuredTable) -> StructuredTable:
    """UNION ALL: stack rows; schemas must match by folded names."""
    aligned = _align_right(left, right)
    if aligned is None:
        raise AggregationError("row aggregation needs identical schemas",
                               left.columns, right.columns)
    return StructuredTable(left.columns, left.rows + aligned.rows)


def column_aggregate(
    left: StructuredTable, right: StructuredTable, left_key: str, right_key: str
) -> StructuredTable:
    """Equijoin on the shared key; exact SQL JOIN semantics, duplicate keys
    cross-match, right-side name collisions get a "_2" suffix."""
    return execute_equijoin(left, right, left_key, right_key)


def _dedup(rows: tuple[tuple[Cell, ...], ...]) -> tuple[tuple[Cell, ...], ...]:
    seen: set[tuple] = set()
    out = []
    for row in rows:
        key = tuple((type(c).__name__, format_cell(c)) for c in row)
        if key not in seen:
            seen.add(key)
            out.append(row)
    return tuple(out)


def _with_discriminator(
    table: StructuredTable, column: str, value: Cell
) -> StructuredTable:
    return StructuredTable(
        table.columns + (column,), tuple(row + (value,) for row in table.rows)
    )


def mixed_aggregate(
    left: StructuredTable, right: StructuredTable, disc: Discriminator
) -> StructuredTable:
    """UNION with a discriminator column: sides that lack the column gain it
    (filled with their slice value), then rows stack with deduplication."""
    def ensure(side: StructuredTable, value: Cell) -> StructuredTable:
        if any(fold_name(c) == fold_name(disc.column) for c in side.columns):
            return side
        if value is None:
            raise AggregationError(
                f"no discriminator value for column {disc.column!r}",
                left.columns, right.columns,
            )
        return _with_discriminator(side, disc.column, value)

    left_full = ensure(left, disc.left_value)
    right_full = ensure(right, disc.right_value)
    aligned = _align_right(left_full, right_full)
    if aligned is None:
        raise AggregationError(
            "mixed aggregation schemas do not line up after adding the discriminator",
            left_full.columns, right_full.columns,
        )
    return StructuredTable(left_full.columns, _dedup(left_full.rows + aligned.rows))


def _unique_ratio_overlap(
    left: StructuredTable, right: StructuredTable, li: int, ri: int
) -> float | None:
    """Overlap fraction when both columns are unique-valued; else None."""
    lv = [row[li] for row in left.rows if row[li] is not None]
    rv = [row[ri] for row in right.rows if row[ri] is not None]
    if not lv or not rv:
        return None
    lkeys = {(type(v).__name__, format_cell(v)) for v in lv}
    rkeys = {(type(v).__name__, format_cell(v)) for v in rv}
    if len(lkeys) != len(lv) or len(rkeys) != len(rv):
        return None
    return len(lkeys & rkeys) / min(len(lkeys), len(rkeys))


def detect_shared_key(
    left: StructuredTable, right: StructuredTable, threshold: float = KEY_OVERLAP_THRESHOLD
) -> tuple[str, str] | None:
    """First folded-name-equal column pair that is unique-valued on both sides
    with at least `threshold` value overlap."""
    if left.is_empty or right.is_empty:
        return None
    rf = _folded(right.columns)
    for li, lname in enumerate(left.columns):
        fold = fold_name(lname)
        for ri, rname in enumerate(right.columns):
            if rf[ri] != fold:
                continue
            overlap = _unique_ratio_overlap(left, right, li, ri)
            if overlap is not None and overlap >= threshold:
                return lname, rname
    return None


class PatternChooser(Protocol):
    """Fallback decision hook for ambiguous schema pairs; returns
    ("row" | "column" | "mixed", parameter) where the parameter is the key
    column for "column" or the discriminator for "mixed"."""

    def __call__(
        self, query: Query | None, left: StructuredTable, right: StructuredTable,
        context: AggregationContext,
    ) -> tuple[str, object]: ...


def aggregate_tables(
    left: StructuredTable,
    right: StructuredTable,
    query: Query | None = None,
    context: AggregationContext = AggregationContext(),
    chooser: PatternChooser | None = None,
) -> StructuredTable:
    """Deterministic pattern dispatch; the rule order is part of the contract.

    1. an empty side is the identity
    2. a provided discriminator wins when the schemas line up for it
    3. identical folded schemas stack as rows
    4. a detected shared key joins as columns
    5. the chooser (when given) may settle leftovers
    """
    if left.is_empty and not left.columns:
        return right
    if right.is_empty and not right.columns:
        return left

    disc = context.discriminator
    if disc is not None:
        def has_disc(t: StructuredTable) -> bool:
            return any(fold_name(c) == fold_name(disc.column) for c in t.columns)

        lf, rf = sorted(_folded(left.columns)), sorted(_folded(right.columns))
        fold = fold_name(disc.column)
        l_rest = sorted(f for f in lf if f != fold)
        r_rest = sorted(f for f in rf if f != fold)
        if l_rest == r_rest and (
            has_disc(left) != has_disc(right)
            or (not has_disc(left) and not has_disc(right))
        ):
            return mixed_aggregate(left, right, disc)

    if sorted(_folded(left.columns)) == sorted(_folded(right.columns)):
        aligned = _align_right(left, right)
        if aligned is not None:
            return StructuredTable(left.columns, left.rows + aligned.rows)

    key = detect_shared_key(left, right)
    if key is not None:
        return column_aggregate(left, right, key[0], key[1])

    if chooser is not None:
        pattern, parameter = chooser(query, left, right, context)
        if pattern == "row":
            return row_aggregate(left, right)
        if pattern == "column" and isinstance(parameter, tuple):
            return column_aggregate(left, right, parameter[0], parameter[1])
        if pattern == "mixed" and isinstance(parameter, Discriminator):
            return mixed_aggregate(left, right, parameter)
        raise AggregationError(
            f"chooser returned an unusable decision: {pattern!r}",
            left.columns, right.columns,
        )
    raise AggregationError("no aggregation pattern fits", left.columns, right.columns)
