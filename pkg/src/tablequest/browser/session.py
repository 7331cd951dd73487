"""Browser session abstraction plus the scripted implementation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .actions import PageElement
from .corpus import PageSpec, ScriptedCorpus, search_url_for


@dataclass(frozen=True, slots=True)
class SessionPage:
    url: str
    title: str
    elements: tuple[PageElement, ...]
    screenshot: bytes = b""


class BrowserSession(Protocol):
    """Driving surface the agent needs; scripted and live drivers provide it."""

    @property
    def downloads_dir(self) -> Path: ...

    def navigate(self, url: str) -> None: ...

    def page(self) -> SessionPage: ...

    def element(self, element_id: str) -> PageElement | None: ...

    def click(self, element_id: str) -> None: ...

    def type_text(self, element_id: str, text: str) -> None: ...

    def scroll(self, target: str, direction: str) -> None: ...

    def back(self) -> None: ...

    def search_url(self, term: str) -> str: ...

    def close(self) -> None: ...


class ScriptedSession:
    """Deterministic session over a scripted corpus. Clicking a link element
    navigates; clicking a download element writes the file into the downloads
    directory like a browser would."""

    def __init__(self, corpus: ScriptedCorpus, downloads_dir: Path):
        self.corpus = corpus
        self._downloads = Path(downloads_dir)
        self._downloads.mkdir(parents=True, exist_ok=True)
        self._history: list[str] = []
        self._current: PageSpec = PageSpec("about:blank", "blank", "", ())

    @property
    def downloads_dir(self) -> Path:
        return self._downloads

    def navigate(self, url: str) -> None:
        if self._current.url != "about:blank":
            self._history.append(self._current.url)
        self._current = self.corpus.page(url)

    def page(self) -> SessionPage:
        spec = self._current
        return SessionPage(spec.url, spec.title, spec.elements, spec.screenshot())

    def element(self, element_id: str) -> PageElement | None:
        for el in self._current.elements:
            if el.element_id == element_id:
                return el
        return None

    def click(self, element_id: str) -> None:
        el = self.element(element_id)
        if el is None:
            return
        if el.href:
            self.navigate(el.href)
            return
        if el.download:
            try:
                data, name = self.corpus.file(el.download)
            except KeyError:
                return  # dead download link: nothing arrives
            target = self._downloads / name
            n = 1
            while target.exists():
                target = self._downloads / f"{Path(name).stem}_{n}{Path(name).suffix}"
                n += 1
            target.write_bytes(data)

    def type_text(self, element_id: str, text: str) -> None:
        pass  # form state is not modeled in scripted pages

    def scroll(self, target: str, direction: str) -> None:
        pass  # scripted pages are fully visible

    def back(self) -> None:
        if self._history:
            self._current = self.corpus.page(self._history.pop())

    def search_url(self, term: str) -> str:
        return search_url_for(term)

    def close(self) -> None:
        pass
