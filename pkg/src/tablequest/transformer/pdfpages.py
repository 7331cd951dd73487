"""Split classic-layout PDFs into per-page byte units.

Each page unit is a deterministic byte string (page index plus the page's
decoded content streams), which is what the vision extraction step is keyed
on. This handles the classic cross-reference layout with plain or
flate-compressed content streams; files using compressed object streams are
out of scope and raise, and the caller logs and skips them.
"""

from __future__ import annotations

import re
import zlib


class UnsupportedMediaError(ValueError):
    """File bytes this reader cannot decompose into pages."""


_OBJ_RE = re.compile(rb"(\d+)\s+\d+\s+obj\b(.*?)endobj", re.DOTALL)
_REF_RE = re.compile(rb"(\d+)\s+\d+\s+R")
_STREAM_RE = re.compile(rb"stream\r?\n(.*?)\r?\nendstream", re.DOTALL)


def _object_map(data: bytes) -> dict[int, bytes]:
    objects: dict[int, bytes] = {}
    for match in _OBJ_RE.finditer(data):
        number = int(match.group(1))
        if number not in objects:  # incremental updates prepend; first wins here
            objects[number] = match.group(2)
    return objects


def _dict_part(body: bytes) -> bytes:
    at = body.find(b"stream")
    return body[:at] if at >= 0 else body


def _find_ref(body: bytes, key: bytes) -> int | None:
    at = _dict_part(body).find(key)
    if at < 0:
        return None
    match = _REF_RE.search(body, at + len(key))
    return int(match.group(1)) if match else None


def _find_refs(body: bytes, key: bytes) -> list[int]:
    head = _dict_part(body)
    at = head.find(key)
    if at < 0:
        return []
    open_at = head.find(b"[", at)
    if open_at < 0:  # single reference without array brackets
        match = _REF_RE.search(head, at)
        return [int(match.group(1))] if match else []
    close_at = head.find(b"]", open_at)
    return [int(m.group(1)) for m in _REF_RE.finditer(head[open_at:close_at])]


def _page_order(objects: dict[int, bytes]) -> list[int]:
    catalog = None
    for number, body in objects.items():
        if re.search(rb"/Type\s*/Catalog\b", _dict_part(body)):
            catalog = number
            break
    pages: list[int] = []

    def collect(node: int, depth: int = 0) -> None:
        if depth > 64 or node not in objects:
            return
        body = objects[node]
        head = _dict_part(body)
        if re.search(rb"/Type\s*/Pages\b", head):
            for kid in _find_refs(body, b"/Kids"):
                collect(kid, depth + 1)
        elif re.search(rb"/Type\s*/Page\b", head):
            pages.append(node)

    if catalog is not None:
        root_pages = _find_ref(objects[catalog], b"/Pages")
        if root_pages is not None:
            collect(root_pages)
    if not pages:  # fall back to object-number order
        pages = sorted(
            n
            for n, body in objects.items()
            if re.search(rb"/Type\s*/Page\b", _dict_part(body))
        )
    return pages


def _content_bytes(objects: dict[int, bytes], page: int) -> bytes:
    chunks: list[bytes] = []
    refs = _find_refs(objects[page], b"/Contents")
    for ref in refs:
        body = objects.get(ref, b"")
        match = _STREAM_RE.search(body)
        if not match:
            continue
        raw = match.group(1)
        if re.search(rb"/Filter\s*/FlateDecode\b", _dict_part(body)):
            try:
                raw = zlib.decompress(raw)
            except zlib.error as e:
                raise UnsupportedMediaError(f"bad flate stream in object {ref}: {e}")
        elif re.search(rb"/Filter\b", _dict_part(body)):
            raise UnsupportedMediaError(f"unsupported stream filter in object {ref}")
        chunks.append(raw)
    return b"\n".join(chunks)


def page_units(data: bytes) -> list[bytes]:
    """Deterministic per-page unit bytes, in page order."""
    if not data.startswith(b"%PDF-"):
        raise UnsupportedMediaError("missing %PDF header")
    objects = _object_map(data)
    if not objects:
        raise UnsupportedMediaError("no objects found")
    if re.search(rb"/Type\s*/ObjStm\b", data):
        raise UnsupportedMediaError("compressed object streams are not supported")
    pages = _page_order(objects)
    if not pages:
        raise UnsupportedMediaError("no page objects found")
    units = []
    for index, page in enumerate(pages, start=1):
        content = _content_bytes(objects, page)
        units.append(b"page %d/%d\n" % (index, len(pages)) + content)
    return units


_TEXT_RE = re.compile(rb"\((?:[^()\\]|\\.)*\)")


def unit_text(unit: bytes) -> str:
    """Best-effort text inside a page unit's string operands; debugging aid."""
    out = []
    for match in _TEXT_RE.finditer(unit):
        raw = match.group()[1:-1]
        raw = raw.replace(b"\\(", b"(").replace(b"\\)", b")").replace(b"\\\\", b"\\")
        out.append(raw.decode("latin-1"))
    return "\n".join(out)
