"""Minimal XLSX workbook reader built on the stdlib.

Covers the subset the pipeline needs: sheet names in workbook order, shared
and inline strings, numbers, and booleans. Each sheet's first row is the
header; shorter data rows are padded with nulls. Formulas are read through
their cached values. No external spreadsheet package is required.
"""

from __future__ import annotations

import io
import re
import zipfile
from pathlib import Path
from xml.etree import ElementTree

from ..core.csvio import format_number
from ..core.types import Cell, StructuredTable

_NS = {
    "m": "http://schemas.openxmlformats.org/spreadsheetml/2006/main",
    "r": "http://schemas.openxmlformats.org/officeDocument/2006/relationships",
    "p": "http://schemas.openxmlformats.org/package/2006/relationships",
}


class XlsxFormatError(ValueError):
    """Workbook bytes the minimal reader cannot interpret."""


def _cell_text(element) -> str:
    # concatenates all <t> runs under an inline or shared string item
    return "".join(t.text or "" for t in element.iter(f"{{{_NS['m']}}}t"))


def _column_of(ref: str) -> int:
    """A1-style reference to zero-based column index."""
    letters = "".join(ch for ch in ref if ch.isalpha())
    index = 0
    for ch in letters.upper():
        index = index * 26 + (ord(ch) - ord("A") + 1)
    return index - 1


def _parse_sheet(xml: bytes, shared: list[str]) -> list[list[Cell]]:
    root = ElementTree.fromstring(xml)
    grid: list[list[Cell]] = []
    for row in root.iter(f"{{{_NS['m']}}}row"):
        cells: list[Cell] = []
        position = 0
        for c in row.iter(f"{{{_NS['m']}}}c"):
            ref = c.get("r")
            if ref is not None:
                target = _column_of(ref)
                while position < target:
                    cells.append(None)
                    position += 1
            kind = c.get("t", "n")
            value_el = c.find(f"{{{_NS['m']}}}v")
            inline_el = c.find(f"{{{_NS['m']}}}is")
            value: Cell
            if kind == "inlineStr" and inline_el is not None:
                value = _cell_text(inline_el)
            elif value_el is None or value_el.text is None:
                value = None
            elif kind == "s":
                value = shared[int(value_el.text)]
            elif kind == "str":
                value = value_el.text
            elif kind == "b":
                value = "TRUE" if value_el.text.strip() == "1" else "FALSE"
            elif kind == "e":
                value = None  # cell-level error code
            else:  # numeric
                try:
                    value = float(value_el.text)
                except ValueError:
                    raise XlsxFormatError(f"bad numeric cell {ref}: {value_el.text!r}")
            cells.append(value)
            position += 1
        grid.append(cells)
    return grid


def _grid_to_table(grid: list[list[Cell]]) -> StructuredTable:
    # drop fully empty leading/trailing rows
    while grid and all(c is None or c == "" for c in grid[0]):
        grid = grid[1:]
    while grid and all(c is None or c == "" for c in grid[-1]):
        grid = grid[:-1]
    if not grid:
        return StructuredTable.empty()
    header_cells = grid[0]
    names: list[str] = []
    for i, cell in enumerate(header_cells):
        if cell is None or (isinstance(cell, str) and not cell.strip()):
            raise XlsxFormatError(f"blank header cell at column {i}")
        names.append(format_number(cell) if isinstance(cell, float) else str(cell))
    if len(set(n.strip() for n in names)) != len(names):
        raise XlsxFormatError(f"duplicate header names: {names}")
    width = len(names)
    rows: list[tuple[Cell, ...]] = []
    for i, raw in enumerate(grid[1:], start=1):
        if len(raw) > width:
            extra = raw[width:]
            if any(c is not None and c != "" for c in extra):
                raise XlsxFormatError(f"row {i} wider than header ({len(raw)} > {width})")
            raw = raw[:width]
        padded = list(raw) + [None] * (width - len(raw))
        rows.append(tuple(c if c != "" else None for c in padded))
    return StructuredTable(tuple(names), tuple(rows))


def read_workbook(source: bytes | Path) -> list[tuple[str, StructuredTable]]:
    """All sheets of a workbook in workbook order as (name, table) pairs.

    Sheets that cannot form a valid table raise XlsxFormatError; callers
    decide whether to skip the sheet or the file.
    """
    data = source if isinstance(source, bytes) else Path(source).read_bytes()
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as e:
        raise XlsxFormatError(f"not a zip archive: {e}") from None
    names = set(archive.namelist())
    if "xl/workbook.xml" not in names:
        raise XlsxFormatError("missing xl/workbook.xml")

    shared: list[str] = []
    if "xl/sharedStrings.xml" in names:
        root = ElementTree.fromstring(archive.read("xl/sharedStrings.xml"))
        shared = [_cell_text(si) for si in root.iter(f"{{{_NS['m']}}}si")]

    rel_targets: dict[str, str] = {}
    if "xl/_rels/workbook.xml.rels" in names:
        root = ElementTree.fromstring(archive.read("xl/_rels/workbook.xml.rels"))
        for rel in root.iter(f"{{{_NS['p']}}}Relationship"):
            target = rel.get("Target", "")
            if target.startswith("/"):
                target = target.lstrip("/")
            else:
                target = "xl/" + target
            rel_targets[rel.get("Id", "")] = target

    workbook = ElementTree.fromstring(archive.read("xl/workbook.xml"))
    sheets: list[tuple[str, StructuredTable]] = []
    fallback_index = 1
    for sheet in workbook.iter(f"{{{_NS['m']}}}sheet"):
        title = sheet.get("name", f"sheet{fallback_index}")
        rel_id = sheet.get(f"{{{_NS['r']}}}id", "")
        path = rel_targets.get(rel_id, f"xl/worksheets/sheet{fallback_index}.xml")
        fallback_index += 1
        if path not in names:
            raise XlsxFormatError(f"worksheet part missing: {path}")
        grid = _parse_sheet(archive.read(path), shared)
        sheets.append((title, _grid_to_table(grid)))
    if not sheets:
        raise XlsxFormatError("workbook has no sheets")
    return sheets


_YEAR_RE = re.compile(r"^(19|20)\d{2}$")


def is_year_label(label: str) -> bool:
    return bool(_YEAR_RE.match(label.strip()))
