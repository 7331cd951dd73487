"""Deterministic test doubles and tiny document writers.

RuleBackend drives full pipeline runs from substring-matched response rules,
so scenario authors never hand-compute request hashes. RecordingBackend
wraps any backend and dumps what it saw in the scripted fixture format,
turning one rule-driven run into a replayable fixture set. The document
writers emit just enough XLSX/PDF structure for the matching readers here;
they are for building corpora, not for interchange with office software.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable
from xml.sax.saxutils import escape

from .core.csvio import format_cell
from .core.types import StructuredTable
from .gateway.base import (
    BackendReply,
    Capability,
    IMAGE_TOKENS,
    ModelRequest,
    UnscriptedRequestError,
    estimate_tokens,
)
from .gateway.scripted import (
    DEFAULT_EMBED_DIM,
    ScriptedBackend,
    synthetic_embedding,
    synthetic_judge_score,
)

# ---- rule-driven backend ----------------------------------------------------------

Responder = str | Callable[[ModelRequest], str]


@dataclass(frozen=True)
class Rule:
    """Fires when the request capability matches and every fragment appears
    in the payload. A None capability matches any request."""

    contains: tuple[str, ...]
    response: Responder
    capability: Capability | None = None

    def matches(self, request: ModelRequest) -> bool:
        if self.capability is not None and request.capability is not self.capability:
            return False
        return all(fragment in request.payload for fragment in self.contains)

    def answer(self, request: ModelRequest) -> str:
        if callable(self.response):
            return self.response(request)
        return self.response


class RuleBackend:
    """First matching rule wins; embed/judge fall back to the documented
    synthetics so scoring works without explicit rules."""

    def __init__(self, rules: list[Rule], *, embed_dim: int = DEFAULT_EMBED_DIM):
        self.rules = list(rules)
        self.embed_dim = embed_dim

    def invoke(self, request: ModelRequest) -> BackendReply:
        text: str | None = None
        for rule in self.rules:
            if rule.matches(request):
                text = rule.answer(request)
                break
        if text is None:
            if request.capability is Capability.EMBED:
                text = json.dumps(synthetic_embedding(request.payload, self.embed_dim))
            elif request.capability is Capability.JUDGE:
                text = synthetic_judge_score(request.payload)
            else:
                head = " ".join(request.payload.split())[:160]
                raise UnscriptedRequestError(
                    f"no rule matches {request.capability.value} request: {head!r}"
                )
        input_tokens = estimate_tokens(request.payload + request.context_csv)
        if request.image is not None:
            input_tokens += IMAGE_TOKENS
        return BackendReply(text, input_tokens, estimate_tokens(text))


class RecordingBackend:
    """Pass-through wrapper that captures every request/response pair."""

    def __init__(self, inner) -> None:
        self.inner = inner
        self.embed_dim = inner.embed_dim
        self.recorded = ScriptedBackend(embed_dim=inner.embed_dim)

    def invoke(self, request: ModelRequest) -> BackendReply:
        reply = self.inner.invoke(request)
        self.recorded.register(request, reply.text)
        return reply

    def save(self, directory: Path) -> None:
        self.recorded.save(directory)


# ---- minimal XLSX writer ----------------------------------------------------------


def _column_letters(index: int) -> str:
    letters = ""
    index += 1
    while index:
        index, rem = divmod(index - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


def _sheet_xml(table: StructuredTable) -> str:
    rows: list[str] = []
    grid = [list(table.columns)] + [list(r) for r in table.rows]
    for r, cells in enumerate(grid, start=1):
        parts: list[str] = []
        for c, cell in enumerate(cells):
            if cell is None:
                continue
            ref = f"{_column_letters(c)}{r}"
            if isinstance(cell, float):
                parts.append(f'<c r="{ref}"><v>{format_cell(cell)}</v></c>')
            else:
                parts.append(
                    f'<c r="{ref}" t="inlineStr"><is><t xml:space="preserve">'
                    f"{escape(str(cell))}</t></is></c>"
                )
        rows.append(f'<row r="{r}">{"".join(parts)}</row>')
    return (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main">'
        f"<sheetData>{''.join(rows)}</sheetData></worksheet>"
    )


def make_xlsx(sheets: list[tuple[str, StructuredTable]]) -> bytes:
    """A workbook with inline-string cells, one part per sheet, no styling."""
    if not sheets:
        raise ValueError("a workbook needs at least one sheet")
    content_types = [
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
        '<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">',
        '<Default Extension="rels" '
        'ContentType="application/vnd.openxmlformats-package.relationships+xml"/>',
        '<Default Extension="xml" ContentType="application/xml"/>',
        '<Override PartName="/xl/workbook.xml" ContentType="application/vnd.'
        'openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>',
    ]
    workbook_sheets: list[str] = []
    rels: list[str] = []
    parts: list[tuple[str, str]] = []
    for i, (name, table) in enumerate(sheets, start=1):
        part = f"xl/worksheets/sheet{i}.xml"
        content_types.append(
            f'<Override PartName="/{part}" ContentType="application/vnd.'
            'openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>'
        )
        workbook_sheets.append(
            f'<sheet name="{escape(name)}" sheetId="{i}" r:id="rId{i}"/>'
        )
        rels.append(
            f'<Relationship Id="rId{i}" Type="http://schemas.openxmlformats.org/'
            f'officeDocument/2006/relationships/worksheet" '
            f'Target="worksheets/sheet{i}.xml"/>'
        )
        parts.append((part, _sheet_xml(table)))
    content_types.append("</Types>")
    workbook = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<workbook xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" '
        'xmlns:r="http://schemas.openxmlformats.org/officeDocument/2006/relationships">'
        f"<sheets>{''.join(workbook_sheets)}</sheets></workbook>"
    )
    workbook_rels = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/'
        f'relationships">{"".join(rels)}</Relationships>'
    )
    root_rels = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
        '<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/'
        'officeDocument/2006/relationships/officeDocument" Target="xl/workbook.xml"/>'
        "</Relationships>"
    )
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        # fixed timestamps keep the archive byte-stable across runs
        def write(name: str, text: str) -> None:
            info = zipfile.ZipInfo(name, date_time=(2020, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, text)

        write("[Content_Types].xml", "".join(content_types))
        write("_rels/.rels", root_rels)
        write("xl/workbook.xml", workbook)
        write("xl/_rels/workbook.xml.rels", workbook_rels)
        for part, xml in parts:
            write(part, xml)
    return buf.getvalue()


# ---- minimal PDF writer -----------------------------------------------------------


def _pdf_escape(text: str) -> str:
    return text.replace("\\", r"\\").replace("(", r"\(").replace(")", r"\)")


def make_simple_pdf(pages: list[str]) -> bytes:
    """A classic-layout PDF with one uncompressed text stream per page.

    Each page string may span multiple lines; every line becomes one Tj
    operator so text extraction sees them as separate string operands.
    """
    if not pages:
        raise ValueError("a pdf needs at least one page")
    objects: list[bytes] = []  # object i+1 is objects[i]

    def add(body: bytes) -> int:
        objects.append(body)
        return len(objects)

    page_count = len(pages)
    catalog_id = add(b"<< /Type /Catalog /Pages 2 0 R >>")
    pages_id = add(b"")  # placeholder, patched once kid ids are known
    font_id = add(b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>")
    kid_ids: list[int] = []
    for text in pages:
        lines = text.splitlines() or [""]
        ops = ["BT /F1 12 Tf 72 720 Td 14 TL"]
        for i, line in enumerate(lines):
            if i:
                ops.append("T*")
            ops.append(f"({_pdf_escape(line)}) Tj")
        ops.append("ET")
        stream = " ".join(ops).encode("latin-1", "replace")
        content_id = add(
            b"<< /Length %d >>\nstream\n%s\nendstream" % (len(stream), stream)
        )
        kid_ids.append(
            add(
                b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
                b"/Resources << /Font << /F1 %d 0 R >> >> /Contents %d 0 R >>"
                % (font_id, content_id)
            )
        )
    kids = b" ".join(b"%d 0 R" % k for k in kid_ids)
    objects[pages_id - 1] = b"<< /Type /Pages /Kids [%s] /Count %d >>" % (
        kids,
        page_count,
    )

    out = io.BytesIO()
    out.write(b"%PDF-1.4\n")
    offsets = [0] * (len(objects) + 1)
    for i, body in enumerate(objects, start=1):
        offsets[i] = out.tell()
        out.write(b"%d 0 obj\n" % i)
        out.write(body)
        out.write(b"\nendobj\n")
    xref_at = out.tell()
    out.write(b"xref\n0 %d\n" % (len(objects) + 1))
    out.write(b"0000000000 65535 f \n")
    for i in range(1, len(objects) + 1):
        out.write(b"%010d 00000 n \n" % offsets[i])
    out.write(
        b"trailer\n<< /Size %d /Root %d 0 R >>\nstartxref\n%d\n%%%%EOF\n"
        % (len(objects) + 1, catalog_id, xref_at)
    )
    return out.getvalue()
