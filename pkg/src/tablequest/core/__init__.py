"""Core value types and table primitives."""

from .csvio import (
    CsvFormatError,
    cells_equal,
    csv_to_table,
    format_cell,
    format_number,
    parse_cell,
    parse_number,
    table_to_csv,
    table_to_text,
    tables_equal,
    text_to_table,
)
from .matching import NUMERIC_REL_TOL, answers_match, numbers_match
from .media import sniff_media_kind
from .tableops import expand_table, is_superset, normalize_column_name, normalize_columns
from .types import (
    AdequacyResult,
    Answer,
    AnswerBundle,
    AnswerKind,
    Blacklist,
    Cell,
    Clock,
    LogicalClock,
    MalformedDomainError,
    MediaKind,
    Mechanism,
    Query,
    QueryKind,
    RawArtifact,
    RawDataStore,
    SourceAgent,
    SourceEntry,
    SourceLog,
    StructuredTable,
    TaskInstance,
    blacklist_matches,
)

__all__ = [
    "AdequacyResult",
    "Answer",
    "AnswerBundle",
    "AnswerKind",
    "Blacklist",
    "Cell",
    "Clock",
    "CsvFormatError",
    "LogicalClock",
    "MalformedDomainError",
    "MediaKind",
    "Mechanism",
    "NUMERIC_REL_TOL",
    "Query",
    "QueryKind",
    "RawArtifact",
    "RawDataStore",
    "SourceAgent",
    "SourceEntry",
    "SourceLog",
    "StructuredTable",
    "TaskInstance",
    "answers_match",
    "blacklist_matches",
    "cells_equal",
    "csv_to_table",
    "expand_table",
    "format_cell",
    "format_number",
    "is_superset",
    "normalize_column_name",
    "normalize_columns",
    "numbers_match",
    "parse_cell",
    "parse_number",
    "sniff_media_kind",
    "table_to_csv",
    "table_to_text",
    "tables_equal",
    "text_to_table",
]
