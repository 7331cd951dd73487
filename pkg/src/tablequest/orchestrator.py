"""Top-level control loop: browse, transform, augment, re-browse, answer.

One round is a collect-then-transform iteration. The first round browses
from a search; if the table is still inadequate, the search-tool collector
runs once. When its sources are all clean they merge and the pipeline
finishes on whatever the transformer makes of them; when any source is
blacklisted, its payloads are discarded, the clean remainder is ranked, and
the browser re-runs against one ranked site per remaining round. Rounds are
hard-capped. Only this module mutates shared task state; the collectors
return values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable

from .analyzer.answer import analyze
from .augmenter import SearchBackend, augment, rank_website
from .browser.agent import BrowserAgent
from .browser.fetch import Fetcher
from .browser.ingest import ingest_targets
from .browser.session import BrowserSession
from .core.types import (
    AdequacyResult,
    AnswerBundle,
    Blacklist,
    Clock,
    MediaKind,
    Mechanism,
    Query,
    RawArtifact,
    RawDataStore,
    SourceLog,
    StructuredTable,
    blacklist_matches,
)
from .gateway import ModelGateway
from .transformer.engine import CheckedFileList, Transformer

MAX_ROUNDS = 10


class Phase(Enum):
    BROWSING = "browsing"
    TRANSFORMING = "transforming"
    AUGMENTING = "augmenting"
    RANKED_BROWSING = "ranked_browsing"
    DONE = "done"


@dataclass(frozen=True, slots=True)
class PhaseEvent:
    round: int
    phase: Phase
    detail: str


@dataclass
class RetrievalResult:
    table: StructuredTable
    sources: SourceLog
    adequacy: AdequacyResult
    transcript: tuple[PhaseEvent, ...]
    rounds: int
    collector: str  # "browser" | "augmenter" | "none"
    store: RawDataStore


class BlacklistViolationError(RuntimeError):
    """A blacklisted URL reached the source log; this is a pipeline bug."""


def transcript_dicts(transcript: tuple[PhaseEvent, ...]) -> list[dict]:
    """Phase events as plain dicts, the shape persisted into trace files."""
    return [
        {"round": e.round, "phase": e.phase.value, "detail": e.detail}
        for e in transcript
    ]


class Orchestrator:
    def __init__(
        self,
        gateway: ModelGateway,
        session_factory: Callable[[], BrowserSession],
        fetcher: Fetcher,
        search_backend: SearchBackend,
        clock: Clock,
        env_root: Path,
        *,
        max_rounds: int = MAX_ROUNDS,
        max_steps: int = 15,
        max_noops: int = 3,
        download_timeout: float = 30.0,
    ):
        if max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        self.gateway = gateway
        self.fetcher = fetcher
        self.search_backend = search_backend
        self.clock = clock
        self.env_root = Path(env_root)
        self.max_rounds = max_rounds
        self.transformer = Transformer(gateway)
        self.agent = BrowserAgent(
            gateway,
            session_factory,
            clock,
            max_steps=max_steps,
            max_noops=max_noops,
            download_timeout=download_timeout,
        )

    # ---- retrieval ------------------------------------------------------------

    def retrieve(self, query: Query, blacklist: Blacklist) -> RetrievalResult:
        store = RawDataStore(self.env_root)
        store.env_root.mkdir(parents=True, exist_ok=True)
        checked = CheckedFileList()
        sources = SourceLog()
        table = StructuredTable.empty()
        transcript: list[PhaseEvent] = []
        adequacy = AdequacyResult(False, missing=("no collection attempted",))
        collector = "none"
        round_index = 0

        def note(phase: Phase, detail: str) -> None:
            transcript.append(PhaseEvent(round_index, phase, detail))

        def browse_round(website: str | None, phase: Phase) -> AdequacyResult:
            nonlocal table, adequacy
            outcome = self.agent.run(query, blacklist, website, round_index)
            sources.extend(outcome.log)
            report = ingest_targets(
                outcome.targets, store, self.fetcher, blacklist,
                sources, round_index, self.clock,
            )
            note(
                phase,
                f"visited {len(outcome.log)} urls, "
                f"collected {len(report.artifacts)} artifacts"
                + (f" ({outcome.note})" if outcome.note else ""),
            )
            note(Phase.TRANSFORMING, f"store has {len(store)} files")
            table, adequacy = self.transformer.transform(query, store, table, checked)
            return adequacy

        def finished() -> bool:
            return adequacy.adequate and not table.is_empty

        # round 1: browse from a fresh search
        round_index = 1
        browse_round(None, Phase.BROWSING)
        if finished():
            collector = "browser"
        elif self.max_rounds >= 2:
            # round 2: the search-tool collector
            round_index = 2
            outcome = augment(
                query, self.search_backend, self.clock, round_index, self.fetcher
            )
            consulted = outcome.sources.urls()
            if outcome.failed or (not consulted and not outcome.payloads):
                note(Phase.AUGMENTING, "search tool produced nothing")
            elif all(not blacklist_matches(u, blacklist) for u in consulted):
                # clean: merge sources and payloads, transform, and stop here
                sources.extend(outcome.sources)
                for csv_text, url in outcome.payloads:
                    relative = store.free_name("augmenter_data.csv")
                    path = store.env_root / relative
                    path.write_bytes(csv_text.encode("utf-8"))
                    store.add(
                        RawArtifact(
                            relative, url, Mechanism.INLINE_CONTENT,
                            MediaKind.STRUCTURED, len(csv_text.encode("utf-8")),
                        )
                    )
                note(
                    Phase.AUGMENTING,
                    f"clean sources merged: {len(consulted)} urls, "
                    f"{len(outcome.payloads)} payloads",
                )
                note(Phase.TRANSFORMING, f"store has {len(store)} files")
                table, adequacy = self.transformer.transform(query, store, table, checked)
                if finished():
                    collector = "augmenter"
            else:
                # dirty: drop payloads, rank the clean remainder, re-browse
                clean = [u for u in consulted if not blacklist_matches(u, blacklist)]
                note(
                    Phase.AUGMENTING,
                    f"dirty sources: kept {len(clean)} of {len(consulted)} urls, "
                    "payloads discarded",
                )
                if clean:
                    ranked = rank_website(query, outcome.text, clean, self.gateway)
                    for website in ranked:
                        if round_index >= self.max_rounds:
                            break
                        round_index += 1
                        browse_round(website, Phase.RANKED_BROWSING)
                        if finished():
                            collector = "browser"
                            break

        note(Phase.DONE, "adequate" if finished() else "exhausted without adequacy")
        self._assert_clean(sources, blacklist)
        return RetrievalResult(
            table, sources, adequacy, tuple(transcript), round_index, collector, store
        )

    @staticmethod
    def _assert_clean(sources: SourceLog, blacklist: Blacklist) -> None:
        for entry in sources:
            if blacklist_matches(entry.url, blacklist):
                raise BlacklistViolationError(entry.url)

    # ---- answering ------------------------------------------------------------

    def finalize(
        self, query: Query, retrieval: RetrievalResult, blacklist: Blacklist
    ) -> AnswerBundle:
        self._assert_clean(retrieval.sources, blacklist)
        analysis = analyze(query, retrieval.table, self.gateway)
        notes = [analysis.note] if analysis.note else []
        if not retrieval.adequacy.adequate:
            notes.append("table never reached adequacy")
        return AnswerBundle(
            query=query,
            answer=analysis.answer,
            table=retrieval.table,
            program=analysis.program,
            sources=retrieval.sources,
            note="; ".join(notes),
        )

    def run(self, query: Query, blacklist: Blacklist) -> tuple[AnswerBundle, RetrievalResult]:
        retrieval = self.retrieve(query, blacklist)
        return self.finalize(query, retrieval, blacklist), retrieval
