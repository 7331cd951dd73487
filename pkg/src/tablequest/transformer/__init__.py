"""Raw files to one structured table."""

from .aggregate import (
    AggregationContext,
    AggregationError,
    Discriminator,
    KEY_OVERLAP_THRESHOLD,
    aggregate_tables,
    column_aggregate,
    detect_shared_key,
    fold_name,
    mixed_aggregate,
    row_aggregate,
)
from .engine import (
    ADEQUATE_MARK,
    CheckedFileList,
    INADEQUATE_MARK,
    Transformer,
    covers_needed,
    sniff_media_kind,
)
from .pdfpages import UnsupportedMediaError, page_units, unit_text
from .xlsxio import XlsxFormatError, is_year_label, read_workbook

__all__ = [
    "ADEQUATE_MARK",
    "AggregationContext",
    "AggregationError",
    "CheckedFileList",
    "Discriminator",
    "INADEQUATE_MARK",
    "KEY_OVERLAP_THRESHOLD",
    "Transformer",
    "UnsupportedMediaError",
    "XlsxFormatError",
    "aggregate_tables",
    "column_aggregate",
    "covers_needed",
    "detect_shared_key",
    "fold_name",
    "is_year_label",
    "mixed_aggregate",
    "page_units",
    "read_workbook",
    "row_aggregate",
    "sniff_media_kind",
    "unit_text",
]
