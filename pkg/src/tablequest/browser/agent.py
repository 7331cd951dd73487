"""The browsing collector: policy loop over a session, ending in targets.

Each step renders the page as text, asks the chat model for one action, and
dispatches it. Safety is enforced at dispatch: a Click or Download whose
destination matches the blacklist is rewritten into a skipped step with a
feedback note, and CheckLink refuses to vet such links, which in turn makes
a blacklisted GetLink impossible. The run ends when a data-collection action
succeeds, when the step budget runs out, or after too many conversions of
steps into no-ops (nothing left to do safely).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..core.csvio import CsvFormatError, csv_to_table
from ..core.types import Blacklist, Clock, Query, SourceAgent, SourceLog, blacklist_matches
from ..gateway import Capability, GatewayError, ModelGateway, ModelRequest
from .actions import (
    ActionParseError,
    BrowserAction,
    CheckLink,
    Click,
    CollectionTarget,
    Download,
    GetData,
    GetLink,
    GoBack,
    GoogleSearch,
    Hyperlink,
    InlineContent,
    DownloadedFile,
    Observation,
    Scroll,
    TypeText,
    Wait,
    parse_action,
    render_action,
    render_observation,
)
from .session import BrowserSession

log = logging.getLogger(__name__)

MAX_STEPS = 15
MAX_NOOPS = 3
ACTION_RETRIES = 2


@dataclass
class BrowseOutcome:
    targets: list[CollectionTarget] = field(default_factory=list)
    log: SourceLog = field(default_factory=SourceLog)
    steps: int = 0
    note: str = ""


class BrowserAgent:
    def __init__(
        self,
        gateway: ModelGateway,
        session_factory: Callable[[], BrowserSession],
        clock: Clock,
        *,
        max_steps: int = MAX_STEPS,
        max_noops: int = MAX_NOOPS,
        action_retries: int = ACTION_RETRIES,
        download_timeout: float = 30.0,
        download_poll: float = 0.05,
    ):
        self.gateway = gateway
        self.session_factory = session_factory
        self.clock = clock
        self.max_steps = max_steps
        self.max_noops = max_noops
        self.action_retries = action_retries
        self.download_timeout = download_timeout
        self.download_poll = download_poll

    # ---- entry ---------------------------------------------------------------

    def run(
        self,
        query: Query,
        blacklist: Blacklist,
        website: str | None = None,
        round_index: int = 1,
    ) -> BrowseOutcome:
        if website is not None and blacklist_matches(website, blacklist):
            raise ValueError(f"refusing to browse a blacklisted start page: {website}")
        outcome = BrowseOutcome()
        session = self.session_factory()
        try:
            self._run_loop(session, query, blacklist, website, round_index, outcome)
        finally:
            session.close()
        return outcome

    def _initial_search_term(self, query: Query) -> str:
        payload = "\n".join(
            [
                "task: initial-search-term",
                f"query: {query.text}",
                "respond with one web search term.",
            ]
        )
        try:
            term = self.gateway.complete(ModelRequest(Capability.CHAT, payload)).strip()
        except GatewayError as e:
            log.warning("search-term generation unavailable (%s); using the query", e)
            return query.text
        return term.splitlines()[0].strip() or query.text

    def _run_loop(
        self,
        session: BrowserSession,
        query: Query,
        blacklist: Blacklist,
        website: str | None,
        round_index: int,
        outcome: BrowseOutcome,
    ) -> None:
        if website is not None:
            session.navigate(website)
        else:
            session.navigate(session.search_url(self._initial_search_term(query)))

        checked_links: dict[tuple[str, str], str] = {}
        history: list[str] = []
        feedback = ""
        noop_streak = 0

        for _ in range(self.max_steps):
            outcome.steps += 1
            page = session.page()
            if page.url and page.url != "about:blank":
                outcome.log.add(page.url, SourceAgent.BROWSER, round_index, self.clock())
            observation = Observation(
                page.url, page.title, page.elements, page.screenshot, feedback
            )
            action = self._select_action(observation, query, history)
            if action is None:
                action = Wait()
                feedback = "model produced no usable action"
            else:
                feedback = ""
            history.append(render_action(action).split("\n", 1)[0])

            status, feedback, done_targets = self._dispatch(
                action, session, page.url, blacklist, checked_links
            )
            if status == "done":
                outcome.targets.extend(done_targets)
                return
            noop_streak = noop_streak + 1 if status == "noop" else 0
            if noop_streak >= self.max_noops:
                outcome.note = "no safe progress available; stopping"
                return
        outcome.note = "step budget exhausted"

    # ---- action selection ------------------------------------------------------

    def _select_action(
        self, observation: Observation, query: Query, history: list[str]
    ) -> BrowserAction | None:
        prompt = render_observation(observation, query.text, tuple(history[-8:]))
        extra = ""
        for _ in range(self.action_retries + 1):
            payload = prompt + ("\n" + extra if extra else "")
            try:
                response = self.gateway.complete(ModelRequest(Capability.CHAT, payload))
            except GatewayError as e:
                log.warning("action selection unavailable: %s", e)
                return None
            try:
                return parse_action(response)
            except ActionParseError as e:
                extra = f"parse feedback: {e}"
        return None

    # ---- dispatch ---------------------------------------------------------------

    def _dispatch(
        self,
        action: BrowserAction,
        session: BrowserSession,
        page_url: str,
        blacklist: Blacklist,
        checked_links: dict[tuple[str, str], str],
    ) -> tuple[str, str, list[CollectionTarget]]:
        """Returns (status, feedback, targets); status is done | ok | noop."""
        if isinstance(action, Wait):
            return "noop", "waited", []
        if isinstance(action, GoBack):
            session.back()
            return "ok", "went back", []
        if isinstance(action, Scroll):
            session.scroll(action.target, action.direction)
            return "ok", f"scrolled {action.direction}", []
        if isinstance(action, TypeText):
            session.type_text(action.element_id, action.text)
            return "ok", "typed", []
        if isinstance(action, GoogleSearch):
            session.navigate(session.search_url(action.term))
            return "ok", f"searched for {action.term!r}", []

        if isinstance(action, GetData):
            try:
                table = csv_to_table(action.csv_text.encode("utf-8"))
            except CsvFormatError as e:
                return "noop", f"inline data is not valid CSV: {e}", []
            if table.is_empty:
                return "noop", "inline data has no rows", []
            return "done", "", [InlineContent(action.csv_text, page_url)]

        element = session.element(getattr(action, "element_id", ""))
        if element is None:
            return "noop", f"no element [{getattr(action, 'element_id', '?')}] on this page", []

        if isinstance(action, Click):
            destination = element.href or element.download
            if destination and blacklist_matches(destination, blacklist):
                # rewritten to a non-action: never follow a blacklisted link
                return "noop", "click skipped: destination is on a restricted domain", []
            session.click(element.element_id)
            return "ok", f"clicked [{element.element_id}]", []

        if isinstance(action, CheckLink):
            href = element.href or element.download
            if not href:
                return "noop", f"[{element.element_id}] has no link", []
            if blacklist_matches(href, blacklist):
                return "noop", "link rejected: restricted domain", []
            checked_links[(page_url, element.element_id)] = href
            return "ok", f"link ok: {href}", []

        if isinstance(action, GetLink):
            href = checked_links.get((page_url, element.element_id))
            if href is None:
                return "noop", "GetLink requires a successful CheckLink on the same element first", []
            return "done", "", [Hyperlink(href, page_url)]

        if isinstance(action, Download):
            source = element.download or element.href
            if source and blacklist_matches(source, blacklist):
                return "noop", "download skipped: restricted domain", []
            if not element.download:
                return "noop", f"[{element.element_id}] is not a download", []
            before = set(session.downloads_dir.iterdir())
            session.click(element.element_id)
            path = self._wait_for_download(session.downloads_dir, before)
            if path is None:
                return "noop", "download did not complete", []
            return "done", "", [DownloadedFile(str(path), source or page_url)]

        raise TypeError(f"unhandled action: {action!r}")  # pragma: no cover

    def _wait_for_download(self, directory: Path, before: set[Path]) -> Path | None:
        deadline = time.monotonic() + self.download_timeout
        last_sizes: dict[Path, int] = {}
        while time.monotonic() <= deadline:
            fresh = [
                p
                for p in sorted(directory.iterdir())
                if p not in before and p.is_file()
                and not p.name.endswith((".part", ".crdownload", ".tmp"))
            ]
            if fresh:
                sizes = {p: p.stat().st_size for p in fresh}
                if sizes == last_sizes:  # two consecutive stable polls
                    return fresh[0]
                last_sizes = sizes
            time.sleep(self.download_poll)
        return None
