"""Web data collection: action space, sessions, the browsing agent, ingest."""

from .actions import (
    ActionParseError,
    BrowserAction,
    CheckLink,
    Click,
    CollectionTarget,
    Download,
    DownloadedFile,
    GetData,
    GetLink,
    GoBack,
    GoogleSearch,
    Hyperlink,
    InlineContent,
    Observation,
    PageElement,
    Scroll,
    TypeText,
    Wait,
    parse_action,
    render_action,
    render_observation,
)
from .agent import ACTION_RETRIES, BrowseOutcome, BrowserAgent, MAX_NOOPS, MAX_STEPS
from .corpus import (
    AugmenterFixture,
    CorpusError,
    PageSpec,
    SEARCH_URL_PREFIX,
    ScriptedCorpus,
    search_url_for,
    term_of_search_url,
)
from .fetch import FetchError, Fetcher, HttpFetcher, ScriptedFetcher
from .ingest import (
    INLINE_NAME,
    IngestReport,
    ZIP_MAX_BYTES,
    ZIP_MAX_ENTRIES,
    ingest_targets,
)
from .session import BrowserSession, ScriptedSession, SessionPage
from .webdriver import WebDriverError, WebDriverSession

__all__ = [
    "ACTION_RETRIES",
    "ActionParseError",
    "AugmenterFixture",
    "BrowseOutcome",
    "BrowserAction",
    "BrowserAgent",
    "BrowserSession",
    "CheckLink",
    "Click",
    "CollectionTarget",
    "CorpusError",
    "Download",
    "DownloadedFile",
    "FetchError",
    "Fetcher",
    "GetData",
    "GetLink",
    "GoBack",
    "GoogleSearch",
    "HttpFetcher",
    "Hyperlink",
    "INLINE_NAME",
    "IngestReport",
    "InlineContent",
    "MAX_NOOPS",
    "MAX_STEPS",
    "Observation",
    "PageElement",
    "PageSpec",
    "SEARCH_URL_PREFIX",
    "Scroll",
    "ScriptedCorpus",
    "ScriptedFetcher",
    "ScriptedSession",
    "SessionPage",
    "TypeText",
    "Wait",
    "WebDriverError",
    "WebDriverSession",
    "ZIP_MAX_BYTES",
    "ZIP_MAX_ENTRIES",
    "ingest_targets",
    "parse_action",
    "render_action",
    "render_observation",
    "search_url_for",
    "term_of_search_url",
]
