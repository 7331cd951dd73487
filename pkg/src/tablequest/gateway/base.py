"""Single chokepoint for every model call the pipeline makes.

Agents never talk to a model provider directly; they hand a ModelRequest to
the gateway, which routes it to the configured backend (live HTTP or scripted
fixtures), enforces the per-call output budget, and records token usage and
cost in a shared ledger. Capabilities are closed: chat, vision table
extraction, text embedding, and pairwise similarity judging.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Protocol, Sequence

from ..core.csvio import CsvFormatError, csv_to_table, table_to_text
from ..core.tableops import expand_table
from ..core.types import StructuredTable


class Capability(Enum):
    CHAT = "chat"
    VISION_EXTRACT = "vision_extract"
    EMBED = "embed"
    JUDGE = "judge"


class GatewayError(Exception):
    """Base for everything the gateway can raise."""


class BackendUnreachableError(GatewayError):
    pass


class BudgetExceededError(GatewayError):
    pass


class UnscriptedRequestError(GatewayError):
    """Scripted backend got a request with no registered fixture."""


class UnparseableScoreError(GatewayError):
    """Judge response contained no number."""


class DegenerateEmbeddingError(GatewayError):
    """Embedding has zero norm and cannot be used for cosine similarity."""


class VisionContractError(GatewayError):
    """Vision response was not a parsable table contribution."""


@dataclass(frozen=True, slots=True)
class ModelRequest:
    """One model call. `context_csv` carries the evolving partial table for
    vision extraction; it rides outside the scripted-replay identity so
    fixtures stay authorable."""

    capability: Capability
    payload: str
    image: bytes | None = None
    budget: int = 4096
    context_csv: str = ""

    def __post_init__(self) -> None:
        has_image = self.image is not None
        needs_image = self.capability is Capability.VISION_EXTRACT
        if has_image != needs_image:
            raise ValueError("image is required exactly for vision_extract requests")
        if self.budget <= 0:
            raise ValueError("budget must be positive")


def canonical_key(request: ModelRequest) -> str:
    """Stable identity of a request: capability, whitespace-collapsed payload,
    and a content hash of the image. Budget and context are excluded."""
    collapsed = " ".join(request.payload.split())
    image_hash = (
        hashlib.sha256(request.image).hexdigest() if request.image is not None else "-"
    )
    material = f"capability={request.capability.value}\npayload={collapsed}\nimage={image_hash}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


@dataclass(frozen=True, slots=True)
class BackendReply:
    text: str
    input_tokens: int
    output_tokens: int


class Backend(Protocol):
    embed_dim: int

    def invoke(self, request: ModelRequest) -> BackendReply: ...


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


# image inputs are charged a flat token count in scripted/estimated accounting
IMAGE_TOKENS = 1000


@dataclass(frozen=True, slots=True)
class Price:
    """Per-token prices in hundredths of a cent."""

    input_per_token: float
    output_per_token: float


DEFAULT_PRICES: Mapping[Capability, Price] = {
    Capability.CHAT: Price(1.0, 2.0),
    Capability.VISION_EXTRACT: Price(1.0, 2.0),
    Capability.EMBED: Price(0.1, 0.0),
    Capability.JUDGE: Price(1.0, 2.0),
}


@dataclass(frozen=True, slots=True)
class UsageRecord:
    capability: Capability
    input_tokens: int
    output_tokens: int
    cost: float


class UsageLedger:
    """Thread-safe append-only usage log; totals always equal the row sums."""

    def __init__(self) -> None:
        self._records: list[UsageRecord] = []
        self._lock = threading.Lock()

    def append(self, record: UsageRecord) -> None:
        with self._lock:
            self._records.append(record)

    @property
    def records(self) -> tuple[UsageRecord, ...]:
        with self._lock:
            return tuple(self._records)

    @property
    def total_cost(self) -> float:
        return sum(r.cost for r in self.records)

    @property
    def total_tokens(self) -> tuple[int, int]:
        records = self.records
        return (
            sum(r.input_tokens for r in records),
            sum(r.output_tokens for r in records),
        )


# markers the gateway uses to frame judge payloads (the scripted backend's
# deterministic fallback parses them back out)
JUDGE_FIRST_MARK = "first:\n"
JUDGE_SECOND_MARK = "\nsecond:\n"

_FLOAT_RE = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")

EMPTY_CONTRIBUTION = "EMPTY"


class ModelGateway:
    def __init__(
        self,
        backend: Backend,
        prices: Mapping[Capability, Price] = DEFAULT_PRICES,
        ledger: UsageLedger | None = None,
    ) -> None:
        self.backend = backend
        self.prices = dict(prices)
        self.ledger = ledger if ledger is not None else UsageLedger()

    def _invoke(self, request: ModelRequest) -> str:
        reply = self.backend.invoke(request)
        price = self.prices[request.capability]
        self.ledger.append(
            UsageRecord(
                request.capability,
                reply.input_tokens,
                reply.output_tokens,
                reply.input_tokens * price.input_per_token
                + reply.output_tokens * price.output_per_token,
            )
        )
        if reply.output_tokens > request.budget:
            raise BudgetExceededError(
                f"response used {reply.output_tokens} tokens, budget {request.budget}"
            )
        return reply.text

    def complete(self, request: ModelRequest) -> str:
        if request.capability is not Capability.CHAT:
            raise ValueError("complete() only serves chat requests")
        return self._invoke(request)

    def vision_extract(
        self,
        instruction: str,
        image: bytes,
        current: StructuredTable,
        needed: Sequence[str] = (),
    ) -> StructuredTable:
        """Extract tabular content from one page image and merge it into the
        running partial table. The result always contains every column and row
        of `current`; re-sending a page does not duplicate rows."""
        payload = instruction
        if needed:
            payload += "\nneeded:\n" + "\n".join(f"- {m}" for m in needed)
        request = ModelRequest(
            Capability.VISION_EXTRACT,
            payload,
            image=image,
            context_csv=table_to_text(current) if current.columns else "",
        )
        text = self._invoke(request).strip()
        if not text or text.upper() == EMPTY_CONTRIBUTION:
            return current
        try:
            contribution = csv_to_table(text.encode("utf-8"))
        except CsvFormatError as e:
            raise VisionContractError(f"vision response is not a table: {e}") from None
        return expand_table(current, contribution)

    def embed(self, text: str) -> tuple[float, ...]:
        request = ModelRequest(Capability.EMBED, text)
        raw = self._invoke(request)
        try:
            values = json.loads(raw)
            vector = tuple(float(v) for v in values)
        except (ValueError, TypeError) as e:
            raise GatewayError(f"embedding response is not a number array: {e}") from None
        if not vector:
            raise DegenerateEmbeddingError("empty embedding")
        if all(v == 0.0 for v in vector):
            raise DegenerateEmbeddingError("zero-norm embedding")
        return vector

    def judge(self, first: str, second: str, rubric: str = "content similarity") -> float:
        payload = (
            f"task: judge-similarity\nrubric: {rubric}\n"
            f"{JUDGE_FIRST_MARK}{first}{JUDGE_SECOND_MARK}{second}"
        )
        raw = self._invoke(ModelRequest(Capability.JUDGE, payload))
        match = _FLOAT_RE.search(raw)
        if not match:
            raise UnparseableScoreError(f"no score in judge response: {raw[:80]!r}")
        return min(1.0, max(0.0, float(match.group())))
