"""Browser action space and the text grammar the model speaks it in.

Navigation and page actions: Click, Type, Scroll, Wait, GoBack, Google.
Data collection: GetData (inline CSV), CheckLink then GetLink (hyperlinks),
Download (browser downloads). There is no answer action; the browser only
collects. A GetLink is legal only for an element whose link the same-page
CheckLink already vetted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True, slots=True)
class Click:
    element_id: str


@dataclass(frozen=True, slots=True)
class TypeText:
    element_id: str
    text: str


@dataclass(frozen=True, slots=True)
class Scroll:
    target: str  # "window" or an element id
    direction: str  # "up" | "down"


@dataclass(frozen=True, slots=True)
class Wait:
    pass


@dataclass(frozen=True, slots=True)
class GoBack:
    pass


@dataclass(frozen=True, slots=True)
class GoogleSearch:
    term: str


@dataclass(frozen=True, slots=True)
class GetData:
    csv_text: str


@dataclass(frozen=True, slots=True)
class CheckLink:
    element_id: str


@dataclass(frozen=True, slots=True)
class GetLink:
    element_id: str


@dataclass(frozen=True, slots=True)
class Download:
    element_id: str


BrowserAction = Union[
    Click, TypeText, Scroll, Wait, GoBack, GoogleSearch,
    GetData, CheckLink, GetLink, Download,
]


class ActionParseError(ValueError):
    pass


_ONE_ARG = re.compile(r"^(\w+) \[(.*)\]$")
_TWO_ARG = re.compile(r"^(\w+) \[(.*?)\]; \[(.*)\]$", re.DOTALL)


def parse_action(text: str) -> BrowserAction:
    """Parse one model-emitted action. GetData carries its CSV payload on the
    following lines; every other action is a single line."""
    text = text.strip()
    if not text:
        raise ActionParseError("empty action")
    first, _, rest = text.partition("\n")
    first = first.strip()
    if first == "GetData":
        payload = rest.strip("\n")
        if not payload.strip():
            raise ActionParseError("GetData needs CSV content on the following lines")
        return GetData(payload)
    if "\n" in text:
        raise ActionParseError(f"only GetData may span lines: {first!r}")
    if first == "Wait":
        return Wait()
    if first == "GoBack":
        return GoBack()
    two = _TWO_ARG.match(first)
    if two:
        verb, a, b = two.group(1), two.group(2), two.group(3)
        if verb == "Type":
            return TypeText(a, b)
        if verb == "Scroll":
            direction = b.strip().lower()
            if direction not in ("up", "down"):
                raise ActionParseError(f"Scroll direction must be up or down: {b!r}")
            return Scroll(a, direction)
        raise ActionParseError(f"unknown two-argument action: {verb!r}")
    one = _ONE_ARG.match(first)
    if one:
        verb, arg = one.group(1), one.group(2)
        if verb == "Click":
            return Click(arg)
        if verb == "Google":
            if not arg.strip():
                raise ActionParseError("Google needs a search term")
            return GoogleSearch(arg)
        if verb == "CheckLink":
            return CheckLink(arg)
        if verb == "GetLink":
            return GetLink(arg)
        if verb == "Download":
            return Download(arg)
        if verb == "Scroll":
            return Scroll(arg, "down")
        raise ActionParseError(f"unknown action: {verb!r}")
    raise ActionParseError(f"not an action: {first!r}")


def render_action(action: BrowserAction) -> str:
    if isinstance(action, Click):
        return f"Click [{action.element_id}]"
    if isinstance(action, TypeText):
        return f"Type [{action.element_id}]; [{action.text}]"
    if isinstance(action, Scroll):
        return f"Scroll [{action.target}]; [{action.direction}]"
    if isinstance(action, Wait):
        return "Wait"
    if isinstance(action, GoBack):
        return "GoBack"
    if isinstance(action, GoogleSearch):
        return f"Google [{action.term}]"
    if isinstance(action, GetData):
        return f"GetData\n{action.csv_text}"
    if isinstance(action, CheckLink):
        return f"CheckLink [{action.element_id}]"
    if isinstance(action, GetLink):
        return f"GetLink [{action.element_id}]"
    if isinstance(action, Download):
        return f"Download [{action.element_id}]"
    raise TypeError(f"not an action: {action!r}")


@dataclass(frozen=True, slots=True)
class PageElement:
    element_id: str
    role: str  # "link" | "button" | "input" | "text"
    text: str
    href: str | None = None
    download: str | None = None  # download file url for download buttons


@dataclass(frozen=True, slots=True)
class Observation:
    """What the policy sees each step: the page and the last action's feedback."""

    page_url: str
    title: str
    elements: tuple[PageElement, ...]
    screenshot: bytes = b""
    feedback: str = ""


def render_observation(obs: Observation, query_text: str, history: tuple[str, ...]) -> str:
    """Canonical text rendering sent to the chat model for action selection."""
    lines = [
        "task: browse-action",
        f"query: {query_text}",
        f"page: {obs.page_url}",
        f"title: {obs.title}",
        "elements:",
    ]
    if obs.elements:
        for el in obs.elements:
            extra = f" href={el.href}" if el.href else ""
            lines.append(f"[{el.element_id}] {el.role} | {el.text}{extra}")
    else:
        lines.append("(none)")
    lines.append(f"history: {' ; '.join(history) if history else '(start)'}")
    if obs.feedback:
        lines.append(f"feedback: {obs.feedback}")
    lines.append("respond with exactly one action.")
    return "\n".join(lines)


# ---- collection targets -----------------------------------------------------


@dataclass(frozen=True, slots=True)
class InlineContent:
    """CSV text read straight off the page."""

    csv_text: str
    origin_url: str


@dataclass(frozen=True, slots=True)
class Hyperlink:
    """A vetted data-file link to fetch."""

    url: str
    origin_url: str


@dataclass(frozen=True, slots=True)
class DownloadedFile:
    """A file the browser itself downloaded."""

    path: str  # absolute path in the downloads dir
    origin_url: str


CollectionTarget = Union[InlineContent, Hyperlink, DownloadedFile]
