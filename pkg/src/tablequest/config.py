"""Runtime configuration with layered overrides.

Precedence, lowest to highest: built-in defaults, JSON config file,
TABLEQUEST_* environment variables, explicit overrides (CLI flags). Every
knob is a flat scalar except the price table, which maps capability name to
an (input, output) per-token price pair in hundredths of a cent.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .gateway.base import DEFAULT_PRICES, Capability, Price

ENV_PREFIX = "TABLEQUEST_"


class ConfigError(ValueError):
    pass


@dataclass(slots=True)
class PipelineConfig:
    backend: str = "scripted"  # scripted | remote
    corpus_dir: Path | None = None
    fixtures_dir: Path | None = None
    env_root: Path = Path("runs")
    out_dir: Path = Path("results")
    max_rounds: int = 10
    max_steps: int = 15
    max_noops: int = 3
    action_retries: int = 2
    head_rows: int = 5
    jobs: int = 1
    max_failures: int = 0  # bench exit-1 threshold
    download_timeout: float = 30.0
    embed_dim: int = 64
    base_url: str = ""
    api_key: str = ""
    chat_model: str = "chat-default"
    vision_model: str = "vision-default"
    judge_model: str = "judge-default"
    embed_model: str = "embed-default"
    search_frontend: str = ""  # empty = scripted corpus search
    webdriver_url: str = ""  # remote backend: W3C WebDriver endpoint
    search_tool_url: str = ""  # remote backend: search-tool endpoint
    prices: dict[str, tuple[float, float]] = dataclasses.field(
        default_factory=lambda: {
            cap.value: (p.input_per_token, p.output_per_token)
            for cap, p in DEFAULT_PRICES.items()
        }
    )

    def __post_init__(self) -> None:
        if self.backend not in ("scripted", "remote"):
            raise ConfigError(f"backend must be scripted or remote: {self.backend!r}")
        for name in ("max_rounds", "max_steps", "jobs", "head_rows", "embed_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("max_noops", "action_retries", "max_failures"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.download_timeout <= 0:
            raise ConfigError("download_timeout must be positive")
        for cap, pair in self.prices.items():
            if cap not in {c.value for c in Capability}:
                raise ConfigError(f"unknown capability in price table: {cap!r}")
            if len(pair) != 2 or any(p < 0 for p in pair):
                raise ConfigError(f"bad price pair for {cap!r}: {pair!r}")

    def price_table(self) -> dict[Capability, Price]:
        return {
            Capability(cap): Price(pair[0], pair[1])
            for cap, pair in self.prices.items()
        }


_PATH_FIELDS = {"corpus_dir", "fixtures_dir", "env_root", "out_dir"}
_INT_FIELDS = {
    "max_rounds", "max_steps", "max_noops", "action_retries",
    "head_rows", "jobs", "max_failures", "embed_dim",
}
_FLOAT_FIELDS = {"download_timeout"}


def _coerce(name: str, raw: object) -> object:
    if name in _PATH_FIELDS:
        return None if raw in (None, "") else Path(str(raw))
    if name in _INT_FIELDS:
        try:
            return int(raw)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be an integer: {raw!r}") from None
    if name in _FLOAT_FIELDS:
        try:
            return float(raw)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number: {raw!r}") from None
    if name == "prices":
        if not isinstance(raw, dict):
            raise ConfigError(f"prices must be an object: {raw!r}")
        return {
            str(cap): (float(pair[0]), float(pair[1])) for cap, pair in raw.items()
        }
    return str(raw)


_FIELD_NAMES = {f.name for f in dataclasses.fields(PipelineConfig)}


def load_config(
    path: Path | None = None,
    env: dict[str, str] | None = None,
    **overrides: object,
) -> PipelineConfig:
    """Merge defaults, config file, environment, and explicit overrides."""
    env = dict(os.environ) if env is None else env
    values: dict[str, object] = {}

    if path is not None:
        try:
            doc = json.loads(Path(path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"config file {path}: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path}: top level must be an object")
        for key, raw in doc.items():
            if key not in _FIELD_NAMES:
                raise ConfigError(f"config file {path}: unknown key {key!r}")
            values[key] = _coerce(key, raw)

    for name in _FIELD_NAMES:
        raw = env.get(ENV_PREFIX + name.upper())
        if raw is not None:
            values[name] = _coerce(
                name, json.loads(raw) if name == "prices" else raw
            )

    for key, raw in overrides.items():
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown config override: {key!r}")
        if raw is not None:
            values[key] = _coerce(key, raw)

    return PipelineConfig(**values)  # type: ignore[arg-type]
