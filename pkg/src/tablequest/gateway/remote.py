"""HTTP backend speaking the common chat-completions / embeddings wire shape.

The capability-to-model mapping is configuration. The HTTP POST itself is
injectable so tests exercise the wire format without a server.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .base import (
    BackendReply,
    BackendUnreachableError,
    Capability,
    GatewayError,
    IMAGE_TOKENS,
    ModelRequest,
    estimate_tokens,
)

# transport(url, json_body, headers, timeout) -> (status_code, parsed_json)
Transport = Callable[[str, dict, dict, float], tuple[int, dict]]


def _requests_transport(url: str, body: dict, headers: dict, timeout: float):
    import requests

    try:
        response = requests.post(url, json=body, headers=headers, timeout=timeout)
    except requests.RequestException as e:
        raise BackendUnreachableError(f"POST {url} failed: {e}") from None
    try:
        return response.status_code, response.json()
    except ValueError:
        return response.status_code, {}


DEFAULT_MODELS: Mapping[Capability, str] = {
    Capability.CHAT: "gpt-4o",
    Capability.VISION_EXTRACT: "gpt-4o",
    Capability.JUDGE: "gpt-4o",
    Capability.EMBED: "text-embedding-3-small",
}


@dataclass
class RemoteConfig:
    base_url: str = "https://api.openai.com/v1"
    api_key: str = ""
    models: Mapping[Capability, str] = field(default_factory=lambda: dict(DEFAULT_MODELS))
    timeout: float = 60.0
    embed_dim: int = 1536


class RemoteBackend:
    def __init__(self, config: RemoteConfig, transport: Transport = _requests_transport):
        self.config = config
        self.transport = transport
        self.embed_dim = config.embed_dim

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        return headers

    def _post(self, path: str, body: dict) -> dict:
        url = self.config.base_url.rstrip("/") + path
        status, parsed = self.transport(url, body, self._headers(), self.config.timeout)
        if status != 200:
            raise BackendUnreachableError(f"POST {url} returned {status}: {parsed}")
        return parsed

    def invoke(self, request: ModelRequest) -> BackendReply:
        if request.capability is Capability.EMBED:
            return self._invoke_embed(request)
        return self._invoke_chat(request)

    def _invoke_chat(self, request: ModelRequest) -> BackendReply:
        text_block = request.payload
        if request.context_csv:
            text_block += "\n\ncurrent table:\n" + request.context_csv
        if request.image is not None:
            encoded = base64.b64encode(request.image).decode("ascii")
            content: object = [
                {"type": "text", "text": text_block},
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:image/png;base64,{encoded}"},
                },
            ]
        else:
            content = text_block
        body = {
            "model": self.config.models[request.capability],
            "messages": [{"role": "user", "content": content}],
            "max_tokens": request.budget,
        }
        parsed = self._post("/chat/completions", body)
        try:
            text = parsed["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise GatewayError(f"malformed chat response: {parsed}") from None
        usage = parsed.get("usage", {})
        input_tokens = usage.get(
            "prompt_tokens",
            estimate_tokens(text_block) + (IMAGE_TOKENS if request.image else 0),
        )
        output_tokens = usage.get("completion_tokens", estimate_tokens(text or ""))
        return BackendReply(text or "", input_tokens, output_tokens)

    def _invoke_embed(self, request: ModelRequest) -> BackendReply:
        body = {
            "model": self.config.models[Capability.EMBED],
            "input": request.payload,
        }
        parsed = self._post("/embeddings", body)
        try:
            vector = parsed["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError):
            raise GatewayError(f"malformed embedding response: {parsed}") from None
        import json as _json

        usage = parsed.get("usage", {})
        return BackendReply(
            _json.dumps(vector),
            usage.get("prompt_tokens", estimate_tokens(request.payload)),
            0,
        )
