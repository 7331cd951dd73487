"""Value types shared by every stage of the collect/transform/analyze pipeline."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, Sequence
from urllib.parse import urlsplit

# A table cell is text, a number, or missing. Booleans are never cells.
Cell = str | float | None

# Logical or wall timestamps; injectable so scripted runs are reproducible.
Clock = Callable[[], int]


class LogicalClock:
    """Monotonic counter used instead of wall time in scripted runs."""

    def __init__(self) -> None:
        self._tick = 0

    def __call__(self) -> int:
        self._tick += 1
        return self._tick


class QueryKind(Enum):
    VERIFICATION = "verification"
    QUESTION_ANSWERING = "question_answering"


@dataclass(frozen=True, slots=True)
class Query:
    """A natural-language analytic request, either a claim to verify or a question."""

    text: str
    kind: QueryKind

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("query text must be non-empty")
        if not isinstance(self.kind, QueryKind):
            raise TypeError(f"kind must be QueryKind, got {type(self.kind).__name__}")


class MalformedDomainError(ValueError):
    """A blacklist entry is not a bare registrable domain."""


_DOMAIN_RE = re.compile(
    r"^[a-z0-9]([a-z0-9-]*[a-z0-9])?(\.[a-z0-9]([a-z0-9-]*[a-z0-9])?)+$"
)


@dataclass(frozen=True)
class Blacklist:
    """Domains the pipeline must never draw data from.

    Entries are bare lowercase domains ("example.org"). A URL matches when its
    host equals an entry or is a subdomain of one; label boundaries are
    respected, so "notexample.org" does not match "example.org".
    """

    domains: frozenset[str]

    def __post_init__(self) -> None:
        for entry in self.domains:
            if entry != entry.lower() or not _DOMAIN_RE.match(entry):
                raise MalformedDomainError(f"not a bare domain: {entry!r}")

    @classmethod
    def of(cls, *domains: str) -> Blacklist:
        return cls(frozenset(d.strip().lower() for d in domains if d.strip()))

    def matches_host(self, host: str) -> bool:
        host = host.lower().rstrip(".")
        for entry in self.domains:
            if host == entry or host.endswith("." + entry):
                return True
        return False

    def matches(self, url: str) -> bool:
        return blacklist_matches(url, self)

    def __len__(self) -> int:
        return len(self.domains)


def blacklist_matches(url: str, blacklist: Blacklist) -> bool:
    """True when the URL's host falls under any blacklisted domain."""
    host = urlsplit(url).hostname or ""
    if not host:
        return False
    return blacklist.matches_host(host)


class Mechanism(Enum):
    """How a raw artifact reached the local environment."""

    INLINE_CONTENT = "inline_content"
    HYPERLINK_FETCH = "hyperlink_fetch"
    BROWSER_DOWNLOAD = "browser_download"


class MediaKind(Enum):
    STRUCTURED = "structured"          # csv / tsv
    SEMI_STRUCTURED = "semi_structured"  # spreadsheet workbooks
    UNSTRUCTURED = "unstructured"      # pdf and friends
    README = "readme"
    UNKNOWN = "unknown"


@dataclass(frozen=True, slots=True)
class RawArtifact:
    """One file collected into the task's local environment."""

    local_path: str  # relative to the store's env_root
    origin_url: str
    mechanism: Mechanism
    media_kind: MediaKind
    bytes_size: int

    def __post_init__(self) -> None:
        if not self.local_path or Path(self.local_path).is_absolute():
            raise ValueError(f"local_path must be relative: {self.local_path!r}")
        if ".." in Path(self.local_path).parts:
            raise ValueError(f"local_path must stay inside the store: {self.local_path!r}")
        if self.bytes_size < 0:
            raise ValueError("bytes_size must be non-negative")


class RawDataStore:
    """Append-only set of collected artifacts rooted at one directory."""

    def __init__(self, env_root: Path) -> None:
        self.env_root = Path(env_root)
        self._artifacts: list[RawArtifact] = []
        self._paths: set[str] = set()

    def add(self, artifact: RawArtifact) -> RawArtifact:
        if artifact.local_path in self._paths:
            raise ValueError(f"duplicate artifact path: {artifact.local_path}")
        self._paths.add(artifact.local_path)
        self._artifacts.append(artifact)
        return artifact

    def resolve(self, artifact: RawArtifact) -> Path:
        return self.env_root / artifact.local_path

    def free_name(self, name: str) -> str:
        """A path under env_root not colliding with existing artifacts or files."""
        stem, dot, ext = name.partition(".")
        candidate = name
        n = 1
        while candidate in self._paths or (self.env_root / candidate).exists():
            candidate = f"{stem}_{n}{dot}{ext}" if dot else f"{stem}_{n}"
            n += 1
        return candidate

    @property
    def artifacts(self) -> tuple[RawArtifact, ...]:
        return tuple(self._artifacts)

    def __len__(self) -> int:
        return len(self._artifacts)

    def __iter__(self) -> Iterator[RawArtifact]:
        return iter(self._artifacts)


def _as_cell(value: object) -> Cell:
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a valid cell value")
    if isinstance(value, (int, float)):
        return float(value)
    raise TypeError(f"invalid cell type: {type(value).__name__}")


@dataclass(frozen=True)
class StructuredTable:
    """A rectangular named-column table; the single database the analyzer sees."""

    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self) -> None:
        names = [c.strip() for c in self.columns]
        if any(not n for n in names):
            raise ValueError("column names must be non-empty after trimming")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names: {self.columns}")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i}: expected {width} cells, got {len(row)}")
        object.__setattr__(
            self,
            "rows",
            tuple(tuple(_as_cell(c) for c in row) for row in self.rows),
        )

    @classmethod
    def empty(cls) -> StructuredTable:
        return cls(columns=(), rows=())

    @classmethod
    def build(cls, columns: Sequence[str], rows: Sequence[Sequence[object]]) -> StructuredTable:
        return cls(tuple(columns), tuple(tuple(_as_cell(c) for c in r) for r in rows))

    @property
    def is_empty(self) -> bool:
        return len(self.rows) == 0

    @property
    def width(self) -> int:
        return len(self.columns)

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise KeyError(f"no such column: {name!r}") from None

    def column_values(self, name: str) -> tuple[Cell, ...]:
        i = self.column_index(name)
        return tuple(row[i] for row in self.rows)

    def head(self, n: int) -> StructuredTable:
        return StructuredTable(self.columns, self.rows[:n])


class SourceAgent(Enum):
    BROWSER = "browser"
    AUGMENTER = "augmenter"


@dataclass(frozen=True, slots=True)
class SourceEntry:
    url: str
    added_by: SourceAgent
    round: int
    at: int  # clock tick or epoch seconds


class SourceLog:
    """Append-only, first-visit-ordered record of every URL consulted."""

    def __init__(self) -> None:
        self._entries: list[SourceEntry] = []
        self._seen: set[str] = set()

    def add(self, url: str, added_by: SourceAgent, round: int, at: int) -> bool:
        """Record a URL; repeat visits keep the original entry. Returns True if new."""
        if url in self._seen:
            return False
        self._seen.add(url)
        self._entries.append(SourceEntry(url, added_by, round, at))
        return True

    def extend(self, other: SourceLog) -> None:
        for e in other:
            self.add(e.url, e.added_by, e.round, e.at)

    def urls(self) -> list[str]:
        return [e.url for e in self._entries]

    def __contains__(self, url: str) -> bool:
        return url in self._seen

    def __iter__(self) -> Iterator[SourceEntry]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)


class AnswerKind(Enum):
    BOOLEAN = "boolean"
    NUMBER = "number"
    TEXT = "text"
    ABSTAIN = "abstain"


@dataclass(frozen=True, slots=True)
class Answer:
    """Final answer value; abstain carries no value."""

    kind: AnswerKind
    value: bool | float | str | None

    def __post_init__(self) -> None:
        k, v = self.kind, self.value
        if k is AnswerKind.BOOLEAN and not isinstance(v, bool):
            raise TypeError("boolean answer needs a bool value")
        if k is AnswerKind.NUMBER:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise TypeError("number answer needs a numeric value")
            object.__setattr__(self, "value", float(v))
        if k is AnswerKind.TEXT and not isinstance(v, str):
            raise TypeError("text answer needs a str value")
        if k is AnswerKind.ABSTAIN and v is not None:
            raise TypeError("abstain carries no value")

    @classmethod
    def boolean(cls, value: bool) -> Answer:
        return cls(AnswerKind.BOOLEAN, value)

    @classmethod
    def number(cls, value: float) -> Answer:
        return cls(AnswerKind.NUMBER, value)

    @classmethod
    def text(cls, value: str) -> Answer:
        return cls(AnswerKind.TEXT, value)

    @classmethod
    def abstain(cls) -> Answer:
        return cls(AnswerKind.ABSTAIN, None)


@dataclass(frozen=True)
class AnswerBundle:
    """Everything a finished task hands back: answer, table, program, trace."""

    query: Query
    answer: Answer
    table: StructuredTable
    program: str
    sources: SourceLog
    note: str = ""

    def __post_init__(self) -> None:
        if self.query.kind is QueryKind.VERIFICATION:
            if self.answer.kind not in (AnswerKind.BOOLEAN, AnswerKind.ABSTAIN):
                raise TypeError("verification answers must be boolean or abstain")
        else:
            if self.answer.kind is AnswerKind.BOOLEAN:
                raise TypeError("question answers cannot be boolean")


@dataclass(frozen=True, slots=True)
class AdequacyResult:
    """Outcome of asking whether the current table can answer the query."""

    adequate: bool
    program: str | None = None
    missing: tuple[str, ...] = ()
    retry: bool = False

    def __post_init__(self) -> None:
        if self.adequate and not self.program:
            raise ValueError("adequate results must carry a program")
        if not self.adequate and self.program:
            raise ValueError("inadequate results cannot carry a program")


@dataclass(frozen=True)
class TaskInstance:
    """One benchmark task: query, safety constraint, and gold artifacts."""

    id: str
    query: Query
    blacklist: Blacklist
    gold_label: Answer
    gold_table: StructuredTable
    gold_program: str
    timestamp: date = field(default_factory=lambda: date(2024, 1, 1))

    def __post_init__(self) -> None:
        if not re.match(r"^[A-Za-z0-9_.-]+$", self.id):
            raise ValueError(f"task id must be a filename-safe slug: {self.id!r}")
        if self.gold_label.kind is AnswerKind.ABSTAIN:
            raise ValueError("gold label cannot be abstain")
        if self.query.kind is QueryKind.VERIFICATION:
            if self.gold_label.kind is not AnswerKind.BOOLEAN:
                raise ValueError("verification gold label must be boolean")
        elif self.gold_label.kind is AnswerKind.BOOLEAN:
            raise ValueError("question gold label cannot be boolean")
