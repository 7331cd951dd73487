"""W3C WebDriver session for live browsing.

Talks plain JSON wire protocol to a driver endpoint (chromedriver/geckodriver
or a grid). The HTTP call is injectable so the wire format is testable
without a browser. Interactive elements are harvested with one script call
per page and exposed under stable synthetic ids (e0, e1, ...).
"""

from __future__ import annotations

import base64
import json
from pathlib import Path
from typing import Callable

from .actions import PageElement
from .session import SessionPage

# transport(method, url, body) -> (status, parsed json)
WireTransport = Callable[[str, str, dict | None], tuple[int, dict]]


class WebDriverError(RuntimeError):
    pass


def _requests_transport(method: str, url: str, body: dict | None):
    import requests

    try:
        response = requests.request(method, url, json=body, timeout=60)
        return response.status_code, response.json()
    except requests.RequestException as e:
        raise WebDriverError(f"{method} {url} failed: {e}") from None
    except ValueError:
        return response.status_code, {}


_HARVEST_SCRIPT = """
const nodes = document.querySelectorAll('a[href], button, input, select, [role=button]');
const out = [];
nodes.forEach(n => {
  const tag = n.tagName.toLowerCase();
  const role = tag === 'a' ? 'link' : (tag === 'input' || tag === 'select' ? 'input' : 'button');
  out.push({role: role, text: (n.innerText || n.value || '').trim().slice(0, 200),
            href: n.href || null, download: n.getAttribute('data-download') || null});
});
return out;
"""

_SEARCH_FRONTEND = "https://www.google.com/search?q={}"


class WebDriverSession:
    def __init__(
        self,
        endpoint: str,
        downloads_dir: Path,
        transport: WireTransport = _requests_transport,
        search_frontend: str = _SEARCH_FRONTEND,
        capabilities: dict | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self._downloads = Path(downloads_dir)
        self._downloads.mkdir(parents=True, exist_ok=True)
        self.transport = transport
        self.search_frontend = search_frontend
        self._element_refs: dict[str, str] = {}
        body = {"capabilities": {"alwaysMatch": capabilities or {}}}
        value = self._call("POST", "/session", body)
        self.session_id = value.get("sessionId") or value.get("value", {}).get("sessionId")
        if not self.session_id:
            raise WebDriverError(f"no session id in response: {value}")

    def _call(self, method: str, path: str, body: dict | None = None) -> dict:
        status, parsed = self.transport(method, self.endpoint + path, body)
        if status >= 400:
            raise WebDriverError(f"{method} {path} returned {status}: {parsed}")
        return parsed if isinstance(parsed, dict) else {}

    def _session_call(self, method: str, path: str, body: dict | None = None) -> dict:
        return self._call(method, f"/session/{self.session_id}{path}", body)

    @property
    def downloads_dir(self) -> Path:
        return self._downloads

    def navigate(self, url: str) -> None:
        self._session_call("POST", "/url", {"url": url})
        self._element_refs.clear()

    def _execute(self, script: str, args: list | None = None):
        return self._session_call(
            "POST", "/execute/sync", {"script": script, "args": args or []}
        ).get("value")

    def page(self) -> SessionPage:
        url = self._session_call("GET", "/url").get("value", "")
        title = self._session_call("GET", "/title").get("value", "")
        raw = self._execute(_HARVEST_SCRIPT) or []
        elements = tuple(
            PageElement(
                f"e{i}",
                el.get("role", "text"),
                el.get("text", ""),
                el.get("href"),
                el.get("download"),
            )
            for i, el in enumerate(raw)
        )
        shot = self._session_call("GET", "/screenshot").get("value", "")
        try:
            screenshot = base64.b64decode(shot) if shot else b""
        except ValueError:
            screenshot = b""
        self._page_elements = elements
        return SessionPage(url, title, elements, screenshot)

    def element(self, element_id: str) -> PageElement | None:
        for el in getattr(self, "_page_elements", ()):
            if el.element_id == element_id:
                return el
        return None

    def _resolve_ref(self, element_id: str) -> str | None:
        if element_id in self._element_refs:
            return self._element_refs[element_id]
        try:
            index = int(element_id.lstrip("e"))
        except ValueError:
            return None
        value = self._session_call(
            "POST",
            "/elements",
            {"using": "css selector",
             "value": "a[href], button, input, select, [role=button]"},
        ).get("value", [])
        for i, ref in enumerate(value):
            if isinstance(ref, dict) and ref:
                self._element_refs[f"e{i}"] = next(iter(ref.values()))
        return self._element_refs.get(element_id)

    def click(self, element_id: str) -> None:
        ref = self._resolve_ref(element_id)
        if ref:
            self._session_call("POST", f"/element/{ref}/click")

    def type_text(self, element_id: str, text: str) -> None:
        ref = self._resolve_ref(element_id)
        if ref:
            self._session_call("POST", f"/element/{ref}/value", {"text": text})

    def scroll(self, target: str, direction: str) -> None:
        delta = -600 if direction == "up" else 600
        self._execute("window.scrollBy(0, arguments[0]);", [delta])

    def back(self) -> None:
        self._session_call("POST", "/back")
        self._element_refs.clear()

    def search_url(self, term: str) -> str:
        from urllib.parse import quote

        return self.search_frontend.format(quote(term))

    def close(self) -> None:
        try:
            self._call("DELETE", f"/session/{self.session_id}")
        except WebDriverError:
            pass
