"""File media-kind sniffing shared by collection and transformation."""

from __future__ import annotations

from .types import MediaKind


def sniff_media_kind(name: str, data: bytes) -> MediaKind:
    """Classify by name first, then by magic bytes."""
    lowered = name.lower()
    if "readme" in lowered:
        return MediaKind.README
    if lowered.endswith((".csv", ".tsv")):
        return MediaKind.STRUCTURED
    if lowered.endswith((".xlsx", ".xls")):
        return MediaKind.SEMI_STRUCTURED
    if lowered.endswith(".pdf") or data.startswith(b"%PDF-"):
        return MediaKind.UNSTRUCTURED
    if data.startswith(b"PK\x03\x04") and b"[Content_Types].xml" in data[:4096]:
        return MediaKind.SEMI_STRUCTURED
    head = data[:2048]
    if b"," in head or b"\t" in head:
        try:
            head.decode("utf-8")
            return MediaKind.STRUCTURED
        except UnicodeDecodeError:
            pass
    return MediaKind.UNKNOWN
