"""Bundled six-task demonstration suite over a scripted web corpus.

``build()`` materializes everything a fully offline end-to-end run needs:
the corpus (pages, a PDF report, a two-sheet workbook, search and
search-tool fixtures), six task definitions with gold artifacts, and a
gateway fixture set. Fixtures are produced by running the real pipeline
once per task against rule-driven model responses and recording the
traffic; replays are closed-world and byte-reproducible.

The six tasks cover both query kinds and all three collection routes:
two claim pairs (one true, one false each) collected via a vision-read
PDF, inline page data, and a downloaded workbook, one question answered
after the ranked-browsing fallback (its natural source is blacklisted),
and one question answered by the search-tool collector alone.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable

from .augmenter import ScriptedSearchBackend
from .bench.metrics import score_dg_accuracy
from .bench.suite import RunOutcome
from .browser.corpus import ScriptedCorpus
from .browser.fetch import ScriptedFetcher
from .browser.session import ScriptedSession
from .core.csvio import csv_to_table
from .core.matching import answers_match
from .core.types import (
    Answer,
    Blacklist,
    Query,
    QueryKind,
    StructuredTable,
    TaskInstance,
)
from .gateway import Capability, ModelGateway, ModelRequest
from .gateway.scripted import ScriptedBackend
from .orchestrator import Orchestrator, RetrievalResult, transcript_dicts
from .taskio import load_suite, save_task
from .testing import RecordingBackend, Rule, RuleBackend, make_simple_pdf, make_xlsx

# ---- shared data ------------------------------------------------------------

# Ireland births by year; 2022 -> 2023 is -4.97%, so the -5% claim holds
# at integer precision and the -10.3% claim fails at one decimal.
_BIRTHS_ROWS = [
    (2013, 68954), (2014, 67462), (2015, 65536), (2016, 63897),
    (2017, 62053), (2018, 61016), (2019, 59796), (2020, 55959),
    (2021, 58443), (2022, 57540), (2023, 54678),
]
_BIRTHS_CSV = "year,births\n" + "\n".join(f"{y},{b}" for y, b in _BIRTHS_ROWS) + "\n"

# Park visitor spending (billions); only the 2023 "NP" maximum (8.6) sits
# between the true claim's 8 and the false claim's 12, and the parkway row
# exists to be excluded by the LIKE filter.
_PARKS_2022 = [
    ("Great Smoky Mountains NP", 7.9), ("Grand Canyon NP", 5.2),
    ("Yellowstone NP", 4.3), ("Yosemite NP", 3.6), ("Blue Ridge Parkway", 12.1),
]
_PARKS_2023 = [
    ("Great Smoky Mountains NP", 8.6), ("Grand Canyon NP", 5.9),
    ("Yellowstone NP", 4.7), ("Yosemite NP", 4.1), ("Blue Ridge Parkway", 13.2),
]
_PARKS_CSV = (
    "park,spending,year\n"
    + "".join(f"{p},{s},2022\n" for p, s in _PARKS_2022)
    + "".join(f"{p},{s},2023\n" for p, s in _PARKS_2023)
)

_HOMELESS_CSV = (
    "state,homeless_rate\n"
    "Hawaii,80.5\nNew York,73.2\nOregon,63.9\nVermont,51.7\n"
    "California,48.1\nWashington,36.4\nMassachusetts,34.9\nAlaska,32.1\n"
)

# 41 years of counts symmetric around 70000, so the average is exact
_WILDFIRES_CSV = "year,fires\n" + "".join(
    f"{1983 + i},{70000 + (i - 20) * 250}\n" for i in range(41)
)

_T1_PROGRAM = (
    "SELECT ROUND((MIN(births) - MAX(births)) / MAX(births) * 100, 0) = -5 "
    "FROM birth_stats WHERE year >= 2022"
)
_T2_PROGRAM = (
    "SELECT ROUND((MIN(births) - MAX(births)) / MAX(births) * 100, 1) = -10.3 "
    "FROM birth_stats WHERE year >= 2022"
)
_T3_PROGRAM = (
    "SELECT MAX(spending) > 8 FROM park_spending "
    "WHERE park LIKE '%NP' AND year = 2023"
)
_T4_PROGRAM = (
    "SELECT MAX(spending) > 12 FROM park_spending "
    "WHERE park LIKE '%NP' AND year = 2023"
)
_T5_PROGRAM = "SELECT state FROM homelessness ORDER BY homeless_rate DESC LIMIT 1"
_T6_PROGRAM = "SELECT AVG(fires) FROM wildfires WHERE year >= 1983 AND year <= 2023"

_SEARCH_PAGE = "page: scripted://search"

# pages the browser can land on
_URL_BIRTHS_PAGE = "https://vitalstats.example.org/ireland-births"
_URL_BIRTHS_PDF = "https://vitalstats.example.org/files/births_2013_2023.pdf"
_URL_BIRTHS_SUMMARY = "https://figures.example.net/ireland-births-summary"
_URL_PARKS_PAGE = "https://parksdata.example.org/spending"
_URL_PARKS_XLSX = "https://parksdata.example.org/files/parks_spending.xlsx"
_URL_PARKS_TABLE = "https://parkfigures.example.net/spending-table"
_URL_HOUSING = "https://housingstats.example.gov/state-rates"
_URL_USAFACTS = "https://usafacts.org/homelessness-by-state"


@dataclass(frozen=True, slots=True)
class PipelineRun:
    """One pipeline execution plus everything needed to persist or score it."""

    outcome: RunOutcome
    retrieval: RetrievalResult

    def trace(self) -> list[dict]:
        return transcript_dicts(self.retrieval.transcript)


@dataclass(frozen=True, slots=True)
class _TaskScript:
    task: TaskInstance
    rules: tuple[Rule, ...]


@dataclass(frozen=True, slots=True)
class MiniSuite:
    root: Path
    corpus_dir: Path
    tasks_dir: Path
    fixtures_dir: Path

    def tasks(self) -> list[TaskInstance]:
        return load_suite(self.tasks_dir)

    def scoring_gateway(self) -> ModelGateway:
        # no fixtures: judge and embed run on the deterministic synthetics
        return ModelGateway(ScriptedBackend())

    def execute(self, task: TaskInstance, env_dir: Path) -> PipelineRun:
        corpus = ScriptedCorpus(self.corpus_dir)
        gateway = ModelGateway(ScriptedBackend.load(self.fixtures_dir))
        return _execute(task, gateway, corpus, Path(env_dir))

    def runner(self, env_root: Path) -> Callable[[TaskInstance], RunOutcome]:
        """Per-task entry point for the suite runner; fresh env per task."""
        env_root = Path(env_root)

        def run_task(task: TaskInstance) -> RunOutcome:
            return self.execute(task, env_root / task.id).outcome

        return run_task


def _counting_clock() -> Callable[[], int]:
    ticks = iter(range(1_000_000))
    return lambda: next(ticks)


def _execute(
    task: TaskInstance,
    gateway: ModelGateway,
    corpus: ScriptedCorpus,
    env_dir: Path,
) -> PipelineRun:
    orchestrator = Orchestrator(
        gateway,
        lambda: ScriptedSession(corpus, env_dir / "downloads"),
        ScriptedFetcher(corpus),
        ScriptedSearchBackend(corpus),
        _counting_clock(),
        env_dir / "store",
        download_timeout=5.0,
    )
    bundle, retrieval = orchestrator.run(task.query, task.blacklist)
    cost_cents = gateway.ledger.total_cost / 100
    return PipelineRun(
        RunOutcome(bundle, cost_cents, retrieval.collector, retrieval.rounds),
        retrieval,
    )


# ---- task scripts -----------------------------------------------------------


def _verification(text: str) -> Query:
    return Query(text, QueryKind.VERIFICATION)


def _question(text: str) -> Query:
    return Query(text, QueryKind.QUESTION_ANSWERING)


def _table(csv_text: str) -> StructuredTable:
    return csv_to_table(csv_text.encode("utf-8"))


def _births_vision(request: ModelRequest) -> str:
    # only the births page of the report carries the table
    if b"Births in Ireland" in (request.image or b""):
        return _BIRTHS_CSV
    return "EMPTY"


def _scripts() -> list[_TaskScript]:
    scripts: list[_TaskScript] = []

    t1 = TaskInstance(
        id="births-change-true",
        query=_verification(
            "From 2022 to 2023 the number of births in Ireland changed by -5%."
        ),
        blacklist=Blacklist.of("cso.ie"),
        gold_label=Answer.boolean(True),
        gold_table=_table(_BIRTHS_CSV),
        gold_program=_T1_PROGRAM,
        timestamp=date(2024, 1, 20),
    )
    scripts.append(_TaskScript(t1, (
        Rule(("task: initial-search-term", "-5%"), "ireland births change 2022 2023"),
        Rule(("task: browse-action", _SEARCH_PAGE, "-5%"), "Click [e1]"),
        Rule(
            ("task: browse-action", f"page: {_URL_BIRTHS_PAGE}", "CheckLink [e0]"),
            "GetLink [e0]",
        ),
        Rule(("task: browse-action", f"page: {_URL_BIRTHS_PAGE}"), "CheckLink [e0]"),
        Rule(("-5%",), _births_vision, Capability.VISION_EXTRACT),
        Rule(
            ("task: adequacy-check", "-5%", "columns: year, births"),
            "ADEQUATE\n" + _T1_PROGRAM,
        ),
        Rule(
            ("task: adequacy-check", "-5%"),
            "INADEQUATE\n- births per year in ireland for 2022 and 2023",
        ),
        Rule(("task: generate-sql", "-5%"), _T1_PROGRAM),
    )))

    t2 = TaskInstance(
        id="births-change-false",
        query=_verification(
            "From 2022 to 2023 the number of births in Ireland changed by -10.3%."
        ),
        blacklist=Blacklist.of("cso.ie"),
        gold_label=Answer.boolean(False),
        gold_table=_table(_BIRTHS_CSV),
        gold_program=_T2_PROGRAM,
        timestamp=date(2024, 2, 11),
    )
    scripts.append(_TaskScript(t2, (
        Rule(
            ("task: initial-search-term", "-10.3%"),
            "ireland births 2022 2023 revision",
        ),
        Rule(("task: browse-action", _SEARCH_PAGE, "-10.3%"), "Click [e0]"),
        Rule(
            ("task: browse-action", f"page: {_URL_BIRTHS_SUMMARY}"),
            "GetData\n" + _BIRTHS_CSV,
        ),
        Rule(
            ("task: adequacy-check", "-10.3%", "columns: year, births"),
            "ADEQUATE\n" + _T2_PROGRAM,
        ),
        Rule(
            ("task: adequacy-check", "-10.3%"),
            "INADEQUATE\n- births per year in ireland for 2022 and 2023",
        ),
        Rule(("task: generate-sql", "-10.3%"), _T2_PROGRAM),
    )))

    t3 = TaskInstance(
        id="parks-spending-true",
        query=_verification(
            "The highest visitor spending among US national parks in 2023 "
            "topped 8 billion dollars."
        ),
        blacklist=Blacklist.of("parks-forum.example.com"),
        gold_label=Answer.boolean(True),
        gold_table=_table(_PARKS_CSV),
        gold_program=_T3_PROGRAM,
        timestamp=date(2024, 4, 12),
    )
    scripts.append(_TaskScript(t3, (
        Rule(
            ("task: initial-search-term", "8 billion"),
            "us national parks visitor spending 2023",
        ),
        Rule(("task: browse-action", _SEARCH_PAGE, "8 billion"), "Click [e0]"),
        Rule(("task: browse-action", f"page: {_URL_PARKS_PAGE}"), "Download [e0]"),
        Rule(
            ("task: adequacy-check", "8 billion", "columns: park, spending, year"),
            "ADEQUATE\n" + _T3_PROGRAM,
        ),
        Rule(
            ("task: adequacy-check", "8 billion"),
            # the second item is only covered once the per-sheet fold has
            # introduced the year discriminator column
            "INADEQUATE\n- visitor spending per park\n- the year each figure applies to",
        ),
        Rule(("task: generate-sql", "8 billion"), _T3_PROGRAM),
    )))

    t4 = TaskInstance(
        id="parks-spending-false",
        query=_verification(
            "At least one US national park generated over 12 billion dollars "
            "of visitor spending in 2023."
        ),
        blacklist=Blacklist.of("parks-forum.example.com"),
        gold_label=Answer.boolean(False),
        gold_table=_table(_PARKS_CSV),
        gold_program=_T4_PROGRAM,
        timestamp=date(2024, 5, 3),
    )
    scripts.append(_TaskScript(t4, (
        Rule(
            ("task: initial-search-term", "12 billion"),
            "national parks spending 2023 by park",
        ),
        Rule(("task: browse-action", _SEARCH_PAGE, "12 billion"), "Click [e0]"),
        Rule(
            ("task: browse-action", f"page: {_URL_PARKS_TABLE}"),
            "GetData\n" + _PARKS_CSV,
        ),
        Rule(
            ("task: adequacy-check", "12 billion", "columns: park, spending, year"),
            "ADEQUATE\n" + _T4_PROGRAM,
        ),
        Rule(
            ("task: adequacy-check", "12 billion"),
            "INADEQUATE\n- visitor spending per park\n- the year each figure applies to",
        ),
        Rule(("task: generate-sql", "12 billion"), _T4_PROGRAM),
    )))

    t5 = TaskInstance(
        id="homelessness-state",
        query=_question("Which US state has the highest homelessness rate in 2024?"),
        blacklist=Blacklist.of("hud.gov"),
        gold_label=Answer.text("Hawaii"),
        gold_table=_table(_HOMELESS_CSV),
        gold_program=_T5_PROGRAM,
        timestamp=date(2024, 7, 19),
    )
    scripts.append(_TaskScript(t5, (
        Rule(
            ("task: initial-search-term", "homelessness"),
            "state homelessness rates 2024",
        ),
        # every search result is restricted; the click converts to a no-op
        Rule(("task: browse-action", _SEARCH_PAGE, "homelessness"), "Click [e0]"),
        Rule(("task: browse-action", f"page: {_URL_HOUSING}"), "Wait"),
        Rule(
            ("task: browse-action", f"page: {_URL_USAFACTS}"),
            "GetData\n" + _HOMELESS_CSV,
        ),
        Rule(
            ("task: rank-websites", "homelessness"),
            f"{_URL_HOUSING}\n{_URL_USAFACTS}",
        ),
        Rule(
            ("task: adequacy-check", "homelessness", "columns: state, homeless_rate"),
            "ADEQUATE\n" + _T5_PROGRAM,
        ),
        Rule(
            ("task: adequacy-check", "homelessness"),
            "INADEQUATE\n- homelessness rate per state for 2024",
        ),
        Rule(("task: generate-sql", "homelessness"), _T5_PROGRAM),
    )))

    t6 = TaskInstance(
        id="wildfires-average",
        query=_question(
            "What was the average annual number of US wildfires from 1983 to 2023?"
        ),
        blacklist=Blacklist.of("fireblog.example.com"),
        gold_label=Answer.number(70000),
        gold_table=_table(_WILDFIRES_CSV),
        gold_program=_T6_PROGRAM,
        timestamp=date(2024, 8, 25),
    )
    scripts.append(_TaskScript(t6, (
        Rule(
            ("task: initial-search-term", "wildfires"),
            "annual us wildfires count 1983 2023",
        ),
        # the browser finds nothing useful; the search-tool collector takes over
        Rule(("task: browse-action", _SEARCH_PAGE, "wildfires"), "Wait"),
        Rule(
            ("task: adequacy-check", "wildfires", "columns: year, fires"),
            "ADEQUATE\n" + _T6_PROGRAM,
        ),
        Rule(
            ("task: adequacy-check", "wildfires"),
            "INADEQUATE\n- wildfire counts per year from 1983 to 2023",
        ),
        Rule(("task: generate-sql", "wildfires"), _T6_PROGRAM),
    )))

    return scripts


# ---- corpus -----------------------------------------------------------------


def _births_pdf() -> bytes:
    # page 2 carries the table; page 3 exists to prove the early stop
    return make_simple_pdf([
        "Vital statistics release\n"
        "Deaths in Ireland 2013 to 2023\n"
        "Deaths rose modestly across the decade.",
        "Births in Ireland 2013 to 2023\n" + _BIRTHS_CSV.rstrip("\n"),
        "Natural increase 2013 to 2023\nNotes and methodology.",
    ])


def _parks_xlsx() -> bytes:
    return make_xlsx([
        ("2022", StructuredTable(("park", "spending"), tuple(_PARKS_2022))),
        ("2023", StructuredTable(("park", "spending"), tuple(_PARKS_2023))),
    ])


def _page(title: str, text: str, elements: list[dict]) -> dict:
    return {"title": title, "text": text, "elements": elements}


def _write_corpus(corpus_dir: Path) -> None:
    pages_dir = corpus_dir / "pages"
    files_dir = corpus_dir / "files"
    pages_dir.mkdir(parents=True, exist_ok=True)
    files_dir.mkdir(parents=True, exist_ok=True)

    (files_dir / "births_2013_2023.pdf").write_bytes(_births_pdf())
    (files_dir / "parks_spending.xlsx").write_bytes(_parks_xlsx())

    pages = {
        _URL_BIRTHS_PAGE: _page(
            "Ireland vital statistics",
            "Annual births reporting for Ireland.",
            [{"role": "link", "text": "Births 2013-2023 report (PDF)",
              "href": _URL_BIRTHS_PDF}],
        ),
        _URL_BIRTHS_SUMMARY: _page(
            "Ireland births summary",
            "Registered births per year.\n" + _BIRTHS_CSV,
            [],
        ),
        _URL_PARKS_PAGE: _page(
            "Park spending workbook",
            "Visitor spending by park, one sheet per year.",
            [{"role": "button", "text": "Download spending workbook",
              "download": _URL_PARKS_XLSX}],
        ),
        _URL_PARKS_TABLE: _page(
            "Park spending table",
            "Visitor spending by park and year.\n" + _PARKS_CSV,
            [],
        ),
        _URL_HOUSING: _page(
            "State housing inventory",
            "Housing unit counts by state. No homelessness figures here.",
            [],
        ),
        _URL_USAFACTS: _page(
            "Homelessness by state",
            "Homelessness rate per ten thousand residents.\n" + _HOMELESS_CSV,
            [],
        ),
    }
    page_files = {}
    for i, (url, spec) in enumerate(sorted(pages.items())):
        name = f"pages/page_{i}.json"
        (corpus_dir / name).write_text(
            json.dumps(spec, indent=2, sort_keys=True) + "\n", "utf-8"
        )
        page_files[url] = name

    manifest = {
        "search": {
            "ireland births change 2022 2023": [
                "https://www.cso.ie/stats/births", _URL_BIRTHS_PAGE,
            ],
            "ireland births 2022 2023 revision": [_URL_BIRTHS_SUMMARY],
            "us national parks visitor spending 2023": [_URL_PARKS_PAGE],
            "national parks spending 2023 by park": [_URL_PARKS_TABLE],
            "state homelessness rates 2024": [
                "https://www.hud.gov/ahar/2024-report",
                "https://www.hud.gov/ahar/data",
            ],
            "annual us wildfires count 1983 2023": [
                "https://fireinfo.example.org/overview",
            ],
        },
        "pages": page_files,
        "files": {
            _URL_BIRTHS_PDF: "files/births_2013_2023.pdf",
            _URL_PARKS_XLSX: "files/parks_spending.xlsx",
        },
        "augmenter": {
            "Which US state has the highest homelessness rate in 2024?": {
                "text": "Federal homelessness reporting is mirrored by public "
                        "data portals covering every state.",
                "results": [
                    {"url": "https://www.hud.gov/ahar/2024-data.csv",
                     "csv": _HOMELESS_CSV},
                ],
                "sources": [
                    "https://www.hud.gov/ahar/2024-report",
                    _URL_USAFACTS,
                    _URL_HOUSING,
                ],
            },
            "What was the average annual number of US wildfires from 1983 to 2023?": {
                "text": "National fire centers publish annual wildfire counts; "
                        "the 1983-2023 series is reproduced below.",
                "results": [
                    {"url": "https://nifc-data.example.org/annual_wildfires.csv",
                     "csv": _WILDFIRES_CSV},
                ],
                "sources": [],
            },
        },
    }
    (corpus_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8"
    )


# ---- build ------------------------------------------------------------------


def build(root: Path) -> MiniSuite:
    """Materialize corpus, tasks, and recorded gateway fixtures under root.

    Recording runs the full pipeline per task and refuses to ship fixtures
    for a run that misses its gold answer or fails the dual-check of
    re-executing the produced program over the produced table.
    """
    root = Path(root)
    suite = MiniSuite(root, root / "corpus", root / "tasks", root / "fixtures")
    _write_corpus(suite.corpus_dir)
    suite.tasks_dir.mkdir(parents=True, exist_ok=True)
    suite.fixtures_dir.mkdir(parents=True, exist_ok=True)

    corpus = ScriptedCorpus(suite.corpus_dir)
    for script in _scripts():
        save_task(script.task, suite.tasks_dir)
        recording = RecordingBackend(RuleBackend(list(script.rules)))
        gateway = ModelGateway(recording)
        with tempfile.TemporaryDirectory(prefix="record_") as tmp:
            run = _execute(script.task, gateway, corpus, Path(tmp))
        bundle = run.outcome.bundle
        if not answers_match(bundle.answer, script.task.gold_label):
            raise RuntimeError(
                f"{script.task.id}: recorded answer {bundle.answer} does not "
                f"match gold {script.task.gold_label}"
            )
        if not score_dg_accuracy(bundle, script.task):
            raise RuntimeError(
                f"{script.task.id}: produced program does not reproduce the "
                "gold label over the produced table"
            )
        recording.save(suite.fixtures_dir)
    return suite
