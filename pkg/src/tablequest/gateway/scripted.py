"""Fixture-driven backend for fully reproducible offline runs.

Requests are keyed by their canonical form (capability + collapsed payload +
image content hash) and answered from registered fixtures. Chat and vision
are closed-world: an unregistered request is an error, so fixture gaps
surface immediately. Embedding and judging instead fall back to documented
deterministic synthetics, because the benchmark must score arbitrary
pipeline-produced tables without a fixture for every pairing; registered
fixtures always win over the synthetics.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

from ..core.text import fold_tokens
from .base import (
    JUDGE_FIRST_MARK,
    JUDGE_SECOND_MARK,
    BackendReply,
    Capability,
    IMAGE_TOKENS,
    ModelRequest,
    UnscriptedRequestError,
    canonical_key,
    estimate_tokens,
)

DEFAULT_EMBED_DIM = 64


def synthetic_embedding(text: str, dim: int = DEFAULT_EMBED_DIM) -> list[float]:
    """Hashed bag-of-tokens unit vector; identical text gives identical vectors."""
    counts = [0.0] * dim
    for token in sorted(fold_tokens(text)):
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        counts[int.from_bytes(digest[:4], "big") % dim] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0.0:
        return counts  # gateway rejects the zero vector downstream
    return [c / norm for c in counts]


def synthetic_judge_score(payload: str) -> str:
    """Token-Jaccard similarity of the two judged texts, 4 decimals."""
    first_at = payload.find(JUDGE_FIRST_MARK)
    second_at = payload.find(JUDGE_SECOND_MARK)
    if first_at < 0 or second_at < 0:
        return "0.0"
    first = payload[first_at + len(JUDGE_FIRST_MARK) : second_at]
    second = payload[second_at + len(JUDGE_SECOND_MARK) :]
    a, b = fold_tokens(first), fold_tokens(second)
    if not a and not b:
        return "1.0"
    if not a or not b:
        return "0.0"
    return "%.4f" % (len(a & b) / len(a | b))


class ScriptedBackend:
    """Backend answering from fixtures; see module docstring for fallbacks."""

    def __init__(
        self,
        fixtures: dict[str, str] | None = None,
        *,
        embed_dim: int = DEFAULT_EMBED_DIM,
        synthetic_fallbacks: bool = True,
    ) -> None:
        self.fixtures: dict[str, str] = dict(fixtures or {})
        self.embed_dim = embed_dim
        self.synthetic_fallbacks = synthetic_fallbacks
        self._entries: dict[str, dict] = {}

    @classmethod
    def load(cls, directory: Path, **kwargs) -> "ScriptedBackend":
        backend = cls(**kwargs)
        for path in sorted(Path(directory).glob("*.json")):
            entry = json.loads(path.read_text("utf-8"))
            backend._register_entry(entry)
        return backend

    def _register_entry(self, entry: dict) -> None:
        capability = Capability(entry["capability"])
        collapsed = " ".join(entry["payload"].split())
        image_hash = entry.get("image_sha256") or "-"
        material = f"capability={capability.value}\npayload={collapsed}\nimage={image_hash}"
        key = hashlib.sha256(material.encode("utf-8")).hexdigest()
        self.fixtures[key] = entry["response"]
        self._entries[key] = entry

    def register(self, request: ModelRequest, response: str) -> None:
        key = canonical_key(request)
        self.fixtures[key] = response
        self._entries[key] = {
            "capability": request.capability.value,
            "payload": request.payload,
            "image_sha256": hashlib.sha256(request.image).hexdigest()
            if request.image is not None
            else None,
            "response": response,
        }

    def save(self, directory: Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for key, entry in sorted(self._entries.items()):
            path = directory / f"{key[:20]}.json"
            path.write_text(
                json.dumps(entry, indent=2, sort_keys=True) + "\n", "utf-8"
            )

    def invoke(self, request: ModelRequest) -> BackendReply:
        key = canonical_key(request)
        if key in self.fixtures:
            text = self.fixtures[key]
        elif request.capability is Capability.EMBED and self.synthetic_fallbacks:
            text = json.dumps(synthetic_embedding(request.payload, self.embed_dim))
        elif request.capability is Capability.JUDGE and self.synthetic_fallbacks:
            text = synthetic_judge_score(request.payload)
        else:
            head = " ".join(request.payload.split())[:120]
            raise UnscriptedRequestError(
                f"unscripted {request.capability.value} request {key[:12]}: {head!r}"
            )
        input_tokens = estimate_tokens(request.payload + request.context_csv)
        if request.image is not None:
            input_tokens += IMAGE_TOKENS
        return BackendReply(text, input_tokens, estimate_tokens(text))
