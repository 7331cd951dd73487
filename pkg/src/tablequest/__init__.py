"""Answer analytic queries by collecting web data into one structured table
and executing generated SQL over it.

The pipeline runs in three stages behind ``Orchestrator.run``: collect raw
artifacts from the web (a browsing agent plus a search-tool fallback),
transform them into a single table adequate for the query, and analyze that
table with a generated program in a small closed SQL dialect. ``bench``
scores saved runs; ``mini_suite`` ships a fully offline demonstration.
"""

from .config import ConfigError, PipelineConfig, load_config
from .core.types import (
    Answer,
    AnswerBundle,
    AnswerKind,
    Blacklist,
    Query,
    QueryKind,
    SourceAgent,
    SourceLog,
    StructuredTable,
    TaskInstance,
)
from .gateway import Capability, GatewayError, ModelGateway, ModelRequest
from .orchestrator import (
    BlacklistViolationError,
    Orchestrator,
    Phase,
    RetrievalResult,
)
from .taskio import load_bundle, load_suite, load_task, save_bundle, save_task

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "AnswerBundle",
    "AnswerKind",
    "Blacklist",
    "BlacklistViolationError",
    "Capability",
    "ConfigError",
    "GatewayError",
    "ModelGateway",
    "ModelRequest",
    "Orchestrator",
    "Phase",
    "PipelineConfig",
    "Query",
    "QueryKind",
    "RetrievalResult",
    "SourceAgent",
    "SourceLog",
    "StructuredTable",
    "TaskInstance",
    "load_bundle",
    "load_config",
    "load_suite",
    "load_task",
    "save_bundle",
    "save_task",
    "__version__",
]
