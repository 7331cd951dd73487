"""Model access layer: capabilities, budgets, usage accounting, backends."""

from .base import (
    Backend,
    BackendReply,
    BackendUnreachableError,
    BudgetExceededError,
    Capability,
    DEFAULT_PRICES,
    DegenerateEmbeddingError,
    EMPTY_CONTRIBUTION,
    GatewayError,
    IMAGE_TOKENS,
    ModelGateway,
    ModelRequest,
    Price,
    UnparseableScoreError,
    UnscriptedRequestError,
    UsageLedger,
    UsageRecord,
    VisionContractError,
    canonical_key,
    estimate_tokens,
)
from .remote import RemoteBackend, RemoteConfig
from .scripted import (
    DEFAULT_EMBED_DIM,
    ScriptedBackend,
    synthetic_embedding,
    synthetic_judge_score,
)

__all__ = [
    "Backend",
    "BackendReply",
    "BackendUnreachableError",
    "BudgetExceededError",
    "Capability",
    "DEFAULT_EMBED_DIM",
    "DEFAULT_PRICES",
    "DegenerateEmbeddingError",
    "EMPTY_CONTRIBUTION",
    "GatewayError",
    "IMAGE_TOKENS",
    "ModelGateway",
    "ModelRequest",
    "Price",
    "RemoteBackend",
    "RemoteConfig",
    "ScriptedBackend",
    "UnparseableScoreError",
    "UnscriptedRequestError",
    "UsageLedger",
    "UsageRecord",
    "VisionContractError",
    "canonical_key",
    "estimate_tokens",
    "synthetic_embedding",
    "synthetic_judge_score",
]
