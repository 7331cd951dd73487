"""Hyperlink fetchers: scripted corpus lookup or real HTTP GET."""

from __future__ import annotations

import re
from typing import Protocol

from .corpus import ScriptedCorpus


class FetchError(RuntimeError):
    pass


class Fetcher(Protocol):
    def __call__(self, url: str) -> tuple[bytes, str]: ...


class ScriptedFetcher:
    def __init__(self, corpus: ScriptedCorpus):
        self.corpus = corpus

    def __call__(self, url: str) -> tuple[bytes, str]:
        try:
            return self.corpus.file(url)
        except KeyError:
            raise FetchError(f"no scripted file for {url}") from None


_FILENAME_RE = re.compile(r'filename="?([^";]+)"?')

MAX_FETCH_BYTES = 200 * 1024 * 1024


class HttpFetcher:
    def __init__(self, timeout: float = 60.0, max_bytes: int = MAX_FETCH_BYTES):
        self.timeout = timeout
        self.max_bytes = max_bytes

    def __call__(self, url: str) -> tuple[bytes, str]:
        import requests
        from urllib.parse import urlsplit
        from pathlib import PurePosixPath

        try:
            response = requests.get(url, timeout=self.timeout, stream=True)
        except requests.RequestException as e:
            raise FetchError(f"GET {url} failed: {e}") from None
        if response.status_code != 200:
            raise FetchError(f"GET {url} returned {response.status_code}")
        chunks: list[bytes] = []
        size = 0
        for chunk in response.iter_content(65536):
            size += len(chunk)
            if size > self.max_bytes:
                raise FetchError(f"{url} exceeds the {self.max_bytes} byte cap")
            chunks.append(chunk)
        disposition = response.headers.get("Content-Disposition", "")
        match = _FILENAME_RE.search(disposition)
        if match:
            name = match.group(1)
        else:
            name = PurePosixPath(urlsplit(url).path).name or "fetched.bin"
        return b"".join(chunks), name
