"""Backup collector built on a search tool instead of a browser.

One call returns an answer text plus inline data payloads and the list of
consulted source URLs. The tool does not honor blacklists, so its source
list may be dirty; the orchestrator decides what survives. Payload fetches
(when a result carries a URL but no inline data) run in parallel with a
small worker cap.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

from .browser.corpus import ScriptedCorpus
from .browser.fetch import FetchError, Fetcher
from .core.csvio import CsvFormatError, csv_to_table
from .core.types import Blacklist, Clock, Query, SourceAgent, SourceLog, blacklist_matches
from .gateway import Capability, GatewayError, ModelGateway, ModelRequest

log = logging.getLogger(__name__)

MAX_FETCH_WORKERS = 8


@dataclass(frozen=True, slots=True)
class SearchResponse:
    """Raw search-tool output: answer text, (url, csv-or-None) results, and
    every source the tool consulted."""

    text: str
    results: tuple[tuple[str, str | None], ...]
    sources: tuple[str, ...]


class SearchBackend(Protocol):
    def search(self, query: Query) -> SearchResponse: ...


class ScriptedSearchBackend:
    def __init__(self, corpus: ScriptedCorpus):
        self.corpus = corpus

    def search(self, query: Query) -> SearchResponse:
        fixture = self.corpus.augmenter_fixture(query.text)
        if fixture is None:
            return SearchResponse("", (), ())
        return SearchResponse(fixture.text, fixture.results, fixture.sources)


class HttpSearchBackend:
    """POSTs the query to a search-tool endpoint returning
    {"text": ..., "results": [{"url":..., "csv":...}], "sources": [...]}."""

    def __init__(self, url: str, api_key: str = "", timeout: float = 120.0):
        self.url = url
        self.api_key = api_key
        self.timeout = timeout

    def search(self, query: Query) -> SearchResponse:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        response = requests.post(
            self.url,
            json={"query": query.text, "kind": query.kind.value},
            headers=headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        raw = response.json()
        return SearchResponse(
            raw.get("text", ""),
            tuple((item["url"], item.get("csv")) for item in raw.get("results", [])),
            tuple(raw.get("sources", [])),
        )


@dataclass
class AugmentOutcome:
    """Payloads are (csv_text, source_url) pairs; the source log may contain
    blacklisted URLs by design and must be reconciled by the caller."""

    payloads: list[tuple[str, str]] = field(default_factory=list)
    sources: SourceLog = field(default_factory=SourceLog)
    text: str = ""
    failed: bool = False


def augment(
    query: Query,
    backend: SearchBackend,
    clock: Clock,
    round_index: int,
    fetcher: Fetcher | None = None,
    max_workers: int = MAX_FETCH_WORKERS,
) -> AugmentOutcome:
    outcome = AugmentOutcome()
    try:
        response = backend.search(query)
    except Exception as e:  # tool outages degrade, never crash the task
        log.warning("search tool failed: %s", e)
        outcome.failed = True
        return outcome
    outcome.text = response.text

    for url in response.sources:
        outcome.sources.add(url, SourceAgent.AUGMENTER, round_index, clock())

    inline = [(url, csv) for url, csv in response.results if csv is not None]
    to_fetch = [url for url, csv in response.results if csv is None]

    fetched: dict[str, str] = {}
    if to_fetch and fetcher is not None:
        def pull(url: str) -> tuple[str, str | None]:
            try:
                data, _ = fetcher(url)
                return url, data.decode("utf-8", errors="replace")
            except FetchError as e:
                log.warning("augmenter payload fetch failed: %s", e)
                return url, None

        with ThreadPoolExecutor(max_workers=min(max_workers, len(to_fetch))) as pool:
            for url, text in pool.map(pull, to_fetch):
                if text is not None:
                    fetched[url] = text

    for url, csv_text in response.results:
        text = csv_text if csv_text is not None else fetched.get(url)
        if text is None:
            continue
        try:
            table = csv_to_table(text.encode("utf-8"))
        except CsvFormatError as e:
            log.warning("dropping unparsable augmenter payload from %s: %s", url, e)
            continue
        if table.is_empty:
            continue
        outcome.payloads.append((text, url))
        outcome.sources.add(url, SourceAgent.AUGMENTER, round_index, clock())
    return outcome


def _heuristic_rank(urls: list[str]) -> list[str]:
    """Official-looking domains first, original order otherwise (stable)."""
    def badge(url: str) -> int:
        from urllib.parse import urlsplit

        host = (urlsplit(url).hostname or "").lower()
        if host.endswith((".gov", ".mil")) or ".gov." in host:
            return 0
        if host.endswith((".edu", ".org")):
            return 1
        return 2

    return sorted(urls, key=badge)


def rank_website(
    query: Query,
    answer_text: str,
    urls: list[str],
    gateway: ModelGateway,
) -> list[str]:
    """Order candidate websites by promise for focused re-browsing. The model
    reply is sanitized into a permutation of the input: unknown URLs are
    dropped, missing ones appended in input order. Falls back to a domain
    heuristic when the model is unavailable."""
    if not urls:
        raise ValueError("rank_website needs at least one candidate URL")
    if len(urls) == 1:
        return list(urls)
    payload = "\n".join(
        [
            "task: rank-websites",
            f"query: {query.text}",
            f"context: {answer_text}",
            "candidates:",
            *urls,
            "respond with the candidate URLs, most promising first, one per line.",
        ]
    )
    try:
        response = gateway.complete(ModelRequest(Capability.CHAT, payload))
    except GatewayError as e:
        log.warning("ranking unavailable (%s); using domain heuristic", e)
        return _heuristic_rank(list(urls))
    ranked: list[str] = []
    known = set(urls)
    for line in response.splitlines():
        candidate = line.strip().strip("-").strip()
        if candidate in known and candidate not in ranked:
            ranked.append(candidate)
    for url in urls:  # anything the model forgot keeps its original position
        if url not in ranked:
            ranked.append(url)
    return ranked
