"""Generic table manipulation helpers shared across stages."""

from __future__ import annotations

import re

from .csvio import cells_equal
from .types import Cell, StructuredTable


def normalize_column_name(name: str) -> str:
    """Trim and collapse internal whitespace to single underscores."""
    return re.sub(r"\s+", "_", name.strip())


def normalize_columns(table: StructuredTable) -> tuple[StructuredTable, dict[str, str]]:
    """Rename columns to normalized form; returns the table and the renames applied."""
    renames: dict[str, str] = {}
    new_names: list[str] = []
    for name in table.columns:
        normalized = normalize_column_name(name)
        if normalized != name:
            renames[name] = normalized
        new_names.append(normalized)
    if not renames:
        return table, {}
    return StructuredTable(tuple(new_names), table.rows), renames


def _rows_compatible(base: tuple[Cell, ...], extra: tuple[Cell, ...]) -> bool:
    """Rows agree on every position where both hold a value."""
    return all(
        b is None or e is None or cells_equal(b, e) for b, e in zip(base, extra)
    )


def expand_table(base: StructuredTable, addition: StructuredTable) -> StructuredTable:
    """Grow `base` with the cells of `addition`, never dropping anything.

    Columns become the union (base order first). Each addition row either
    fills the nulls of the first compatible existing row or is appended.
    Expanding with the same addition twice is a no-op, and the result always
    contains every column and row of `base`.
    """
    if addition.is_empty and not addition.columns:
        return base
    if base.is_empty and not base.columns:
        return addition
    columns = list(base.columns)
    for name in addition.columns:
        if name not in columns:
            columns.append(name)
    width = len(columns)
    base_pos = [columns.index(c) for c in base.columns]
    add_pos = [columns.index(c) for c in addition.columns]

    rows: list[list[Cell]] = []
    for row in base.rows:
        out: list[Cell] = [None] * width
        for pos, cell in zip(base_pos, row):
            out[pos] = cell
        rows.append(out)

    for row in addition.rows:
        incoming: list[Cell] = [None] * width
        for pos, cell in zip(add_pos, row):
            incoming[pos] = cell
        placed = False
        for existing in rows:
            if _rows_compatible(tuple(existing), tuple(incoming)):
                for i, cell in enumerate(incoming):
                    if existing[i] is None:
                        existing[i] = cell
                placed = True
                break
        if not placed:
            rows.append(incoming)
    return StructuredTable(tuple(columns), tuple(tuple(r) for r in rows))


def is_superset(outer: StructuredTable, inner: StructuredTable) -> bool:
    """Every column of `inner` exists in `outer` and every inner row's values
    appear (column-aligned) in some outer row."""
    try:
        positions = [outer.column_index(c) for c in inner.columns]
    except KeyError:
        return False
    for row in inner.rows:
        found = False
        for candidate in outer.rows:
            if all(
                cell is None or cells_equal(candidate[pos], cell)
                for pos, cell in zip(positions, row)
            ):
                found = True
                break
        if not found:
            return False
    return True
