"""CSV serialization for structured tables.

Framing follows RFC 4180 (stdlib csv with CRLF line endings). The cell layer
on top is ours: empty string round-trips as null, numeric-looking text parses
into numbers (thousands separators stripped, a single trailing percent sign
dropped), and numbers render with up to 12 significant digits, integral
values without a decimal point.
"""

from __future__ import annotations

import csv
import io
import math

from .types import Cell, StructuredTable


class CsvFormatError(ValueError):
    """Raised when CSV bytes cannot form a structured table."""


def parse_number(text: str) -> float | None:
    """The numeric-cell rule: float value, or None when the text is not a number."""
    candidate = text.strip()
    if candidate.endswith("%"):
        candidate = candidate[:-1].rstrip()
    candidate = candidate.replace(",", "")
    if not candidate or "_" in candidate:
        return None
    try:
        value = float(candidate)
    except ValueError:
        return None
    # float() accepts "nan"/"inf" spellings; those stay text.
    if not math.isfinite(value):
        return None
    return value


def parse_cell(text: str) -> Cell:
    if text == "":
        return None
    number = parse_number(text)
    return text if number is None else number


def format_number(value: float) -> str:
    out = "%.12g" % value
    return "0" if out == "-0" else out


def format_cell(cell: Cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, float):
        return format_number(cell)
    return cell


def table_to_csv(table: StructuredTable) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(format_cell(c) for c in row)
    return buf.getvalue().encode("utf-8")


def csv_to_table(data: bytes) -> StructuredTable:
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise CsvFormatError(f"not utf-8 text: {e}") from None
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        rows = list(reader)
    except csv.Error as e:
        raise CsvFormatError(str(e)) from None
    if not rows:
        raise CsvFormatError("no header row")
    header = rows[0]
    if not header or all(c.strip() == "" for c in header):
        raise CsvFormatError("empty header row")
    names = [c.strip() for c in header]
    if any(not n for n in names):
        raise CsvFormatError(f"blank column name in header: {header}")
    if len(set(names)) != len(names):
        raise CsvFormatError(f"duplicate column names: {header}")
    width = len(header)
    body: list[tuple[Cell, ...]] = []
    for i, raw in enumerate(rows[1:], start=1):
        if not raw:  # a blank trailing line is not a row
            continue
        if len(raw) != width:
            raise CsvFormatError(f"row {i}: expected {width} cells, got {len(raw)}")
        body.append(tuple(parse_cell(c) for c in raw))
    return StructuredTable(tuple(names), tuple(body))


def text_to_table(text: str) -> StructuredTable:
    return csv_to_table(text.encode("utf-8"))


def table_to_text(table: StructuredTable) -> str:
    return table_to_csv(table).decode("utf-8")


def cells_equal(a: Cell, b: Cell) -> bool:
    """Equality modulo numeric formatting (12 significant digits)."""
    if a is None or b is None:
        return a is b
    if isinstance(a, float) and isinstance(b, float):
        return format_number(a) == format_number(b)
    return a == b


def tables_equal(a: StructuredTable, b: StructuredTable) -> bool:
    if a.columns != b.columns or len(a.rows) != len(b.rows):
        return False
    return all(
        cells_equal(x, y) for ra, rb in zip(a.rows, b.rows) for x, y in zip(ra, rb)
    )
