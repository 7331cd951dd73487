"""Scripted web corpus: a directory that stands in for the open web.

manifest.json maps search terms to result URLs, page URLs to page spec files,
file URLs to payload files, and query text to canned search-tool responses
for the backup collector. Everything resolves deterministically, so scripted
runs are byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote, unquote, urlsplit

from .actions import PageElement

SEARCH_URL_PREFIX = "scripted://search?q="


def search_url_for(term: str) -> str:
    return SEARCH_URL_PREFIX + quote(term.strip())


def term_of_search_url(url: str) -> str | None:
    if not url.startswith(SEARCH_URL_PREFIX):
        return None
    return unquote(url[len(SEARCH_URL_PREFIX):])


@dataclass(frozen=True, slots=True)
class PageSpec:
    url: str
    title: str
    text: str
    elements: tuple[PageElement, ...]

    def screenshot(self) -> bytes:
        payload = {
            "url": self.url,
            "title": self.title,
            "text": self.text,
            "elements": [
                [e.element_id, e.role, e.text, e.href, e.download]
                for e in self.elements
            ],
        }
        return json.dumps(payload, sort_keys=True).encode("utf-8")


@dataclass(frozen=True, slots=True)
class AugmenterFixture:
    text: str
    results: tuple[tuple[str, str | None], ...]  # (source url, inline csv or None)
    sources: tuple[str, ...]


class CorpusError(ValueError):
    pass


def _elements_from_spec(raw_elements: list) -> tuple[PageElement, ...]:
    out = []
    for i, el in enumerate(raw_elements):
        out.append(
            PageElement(
                element_id=f"e{i}",
                role=el.get("role", "text"),
                text=el.get("text", ""),
                href=el.get("href"),
                download=el.get("download"),
            )
        )
    return tuple(out)


class ScriptedCorpus:
    def __init__(self, root: Path):
        self.root = Path(root)
        manifest_path = self.root / "manifest.json"
        if not manifest_path.is_file():
            raise CorpusError(f"no manifest.json under {self.root}")
        try:
            self.manifest = json.loads(manifest_path.read_text("utf-8"))
        except ValueError as e:
            raise CorpusError(f"manifest.json is not valid JSON: {e}") from None
        for key in ("search", "pages", "files", "augmenter"):
            self.manifest.setdefault(key, {})

    # ---- pages ---------------------------------------------------------------

    def has_page(self, url: str) -> bool:
        return url in self.manifest["pages"] or term_of_search_url(url) is not None

    def page(self, url: str) -> PageSpec:
        term = term_of_search_url(url)
        if term is not None:
            return self._search_page(url, term)
        spec_file = self.manifest["pages"].get(url)
        if spec_file is None:
            return PageSpec(url, "Not found", f"no page at {url}", ())
        raw = json.loads((self.root / spec_file).read_text("utf-8"))
        return PageSpec(
            url,
            raw.get("title", url),
            raw.get("text", ""),
            _elements_from_spec(raw.get("elements", [])),
        )

    def _search_page(self, url: str, term: str) -> PageSpec:
        results = self.manifest["search"].get(term, [])
        elements = tuple(
            PageElement(f"e{i}", "link", result_url, href=result_url)
            for i, result_url in enumerate(results)
        )
        return PageSpec(url, f"Search: {term}", f"{len(results)} results", elements)

    # ---- files ---------------------------------------------------------------

    def file(self, url: str) -> tuple[bytes, str]:
        rel = self.manifest["files"].get(url)
        if rel is None:
            raise KeyError(url)
        path = self.root / rel
        name = Path(urlsplit(url).path).name or path.name
        return path.read_bytes(), name

    # ---- search-tool fixtures --------------------------------------------------

    def augmenter_fixture(self, query_text: str) -> AugmenterFixture | None:
        raw = self.manifest["augmenter"].get(query_text)
        if raw is None:
            return None
        return AugmenterFixture(
            text=raw.get("text", ""),
            results=tuple(
                (item["url"], item.get("csv")) for item in raw.get("results", [])
            ),
            sources=tuple(raw.get("sources", [])),
        )

    # ---- integrity -------------------------------------------------------------

    def validate(self) -> list[str]:
        problems: list[str] = []
        for url, rel in self.manifest["pages"].items():
            if not (self.root / rel).is_file():
                problems.append(f"page file missing for {url}: {rel}")
            else:
                try:
                    json.loads((self.root / rel).read_text("utf-8"))
                except ValueError as e:
                    problems.append(f"page spec unreadable for {url}: {e}")
        for url, rel in self.manifest["files"].items():
            if not (self.root / rel).is_file():
                problems.append(f"payload file missing for {url}: {rel}")
        for term, urls in self.manifest["search"].items():
            if not isinstance(urls, list):
                problems.append(f"search entry for {term!r} is not a list")
        for query, raw in self.manifest["augmenter"].items():
            if not isinstance(raw, dict):
                problems.append(f"augmenter entry for {query!r} is not an object")
        return problems
