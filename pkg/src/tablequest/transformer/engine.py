"""The transform stage: grow one structured table out of collected raw files.

The loop asks whether the current table already answers the query; when it
does not, the model picks the most promising unprocessed file, the file's
structured units (csv content, workbook sheets, pdf pages) are extracted and
folded together, and the result is aggregated into the running table. Every
file is processed at most once; readme-style files are read up front as
context instead of data. The loop ends when the table is adequate or every
file has been checked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..analyzer.answer import HEAD_ROWS, ProgramValidationError, validate_program
from ..analyzer.parser import SqlParseError
from ..core.csvio import CsvFormatError, csv_to_table, table_to_text
from ..core.media import sniff_media_kind
from ..core.tableops import normalize_columns
from ..core.text import fold_tokens
from ..core.types import (
    AdequacyResult,
    MediaKind,
    Query,
    RawArtifact,
    RawDataStore,
    StructuredTable,
)
from ..gateway import Capability, GatewayError, ModelGateway, ModelRequest
from .aggregate import AggregationContext, AggregationError, Discriminator, aggregate_tables
from .pdfpages import UnsupportedMediaError, page_units
from .xlsxio import XlsxFormatError, is_year_label, read_workbook

log = logging.getLogger(__name__)

ADEQUATE_MARK = "ADEQUATE"
INADEQUATE_MARK = "INADEQUATE"


@dataclass
class CheckedFileList:
    """Files already consumed (or preloaded) this task; paths are store-relative."""

    paths: set[str] = field(default_factory=set)

    def add(self, path: str) -> None:
        self.paths.add(path)

    def __contains__(self, path: str) -> bool:
        return path in self.paths

    def __len__(self) -> int:
        return len(self.paths)


def covers_needed(table: StructuredTable, needed: tuple[str, ...]) -> bool:
    """Every needed item maps to a column that shares a token and holds data."""
    if not needed or table.is_empty:
        return False
    usable: list[tuple[str, set[str]]] = []
    for i, name in enumerate(table.columns):
        if any(row[i] is not None for row in table.rows):
            usable.append((name, fold_tokens(name)))
    for item in needed:
        item_tokens = fold_tokens(item)
        if not any(tokens & item_tokens for _, tokens in usable):
            return False
    return True


class Transformer:
    def __init__(self, gateway: ModelGateway, head_rows: int = HEAD_ROWS):
        self.gateway = gateway
        self.head_rows = head_rows

    # ---- adequacy ----------------------------------------------------------

    def _table_block(self, table: StructuredTable) -> str:
        return "\n".join(
            [
                f"columns: {', '.join(table.columns) if table.columns else '(none)'}",
                f"rows: {len(table.rows)}",
                "head:",
                table_to_text(table.head(self.head_rows)).rstrip("\r\n")
                if table.columns
                else "(empty)",
            ]
        )

    def check_adequate_info(self, query: Query, table: StructuredTable) -> AdequacyResult:
        """Ask whether the table supports the query; adequate answers must come
        with a program that parses and touches only existing columns."""
        payload = "\n".join(
            [
                "task: adequacy-check",
                f"query: {query.text}",
                f"kind: {query.kind.value}",
                self._table_block(table),
                "respond ADEQUATE with a program on the next line, or INADEQUATE",
                "with one missing item per line, each starting with '- '.",
            ]
        )
        try:
            response = self.gateway.complete(ModelRequest(Capability.CHAT, payload))
        except GatewayError as e:
            log.warning("adequacy check unavailable: %s", e)
            return AdequacyResult(False, missing=(f"model unavailable: {e}",), retry=True)
        return self._parse_adequacy(response, query, table)

    def _parse_adequacy(
        self, response: str, query: Query, table: StructuredTable
    ) -> AdequacyResult:
        lines = [l.strip() for l in response.strip().splitlines() if l.strip()]
        if not lines:
            return AdequacyResult(False, missing=("empty adequacy response",))
        verdict = lines[0].upper()
        if verdict.startswith(ADEQUATE_MARK) and not verdict.startswith(INADEQUATE_MARK):
            program = "\n".join(lines[1:]).strip()
            if table.is_empty:
                return AdequacyResult(
                    False, missing=("table is empty; any data for the query",)
                )
            try:
                validate_program(program, query, table)
            except (SqlParseError, ProgramValidationError) as e:
                return AdequacyResult(False, missing=(f"program rejected: {e}",))
            return AdequacyResult(True, program=program)
        missing = tuple(l[2:].strip() for l in lines[1:] if l.startswith("- "))
        if not missing:
            missing = ("information needed to answer the query",)
        return AdequacyResult(False, missing=missing)

    # ---- file selection ----------------------------------------------------

    def file_selection(
        self,
        query: Query,
        missing: tuple[str, ...],
        store: RawDataStore,
        checked: CheckedFileList,
        readme_context: str = "",
    ) -> RawArtifact | None:
        candidates = [a for a in store if a.local_path not in checked]
        if not candidates:
            return None
        if len(candidates) == 1:
            return candidates[0]
        by_path = {a.local_path: a for a in candidates}
        base = [
            "task: select-file",
            f"query: {query.text}",
            "missing:",
            *[f"- {m}" for m in missing],
            "files:",
            *[f"- {a.local_path} ({a.media_kind.value}, {a.bytes_size} bytes)" for a in candidates],
        ]
        if readme_context:
            base += ["readme context:", readme_context]
        base.append("respond with exactly one file name from the list.")
        feedback = ""
        for _ in range(2):  # one re-prompt on an invalid choice
            payload = "\n".join(base + ([f"feedback: {feedback}"] if feedback else []))
            try:
                response = self.gateway.complete(ModelRequest(Capability.CHAT, payload)).strip()
            except GatewayError as e:
                log.warning("file selection unavailable (%s); taking first candidate", e)
                return candidates[0]
            chosen = response.splitlines()[0].strip().strip("-").strip() if response else ""
            if chosen in by_path:
                return by_path[chosen]
            for a in candidates:  # allow bare basenames
                if a.local_path.rsplit("/", 1)[-1] == chosen:
                    return a
            feedback = f"{chosen!r} is not one of the listed files"
        log.warning("file selection never named a listed file; taking first candidate")
        return candidates[0]

    # ---- extraction --------------------------------------------------------

    def extract_data(
        self,
        query: Query,
        missing: tuple[str, ...],
        artifact: RawArtifact,
        checked: CheckedFileList,
        store: RawDataStore,
    ) -> tuple[StructuredTable, AggregationContext]:
        """Pull one table out of a file, folding multi-unit files (sheets,
        pages) unit by unit with an early stop once the needed items are
        covered. The file joins the checked list before returning, success or
        not."""
        try:
            try:
                data = store.resolve(artifact).read_bytes()
            except OSError as e:
                log.warning("unreadable artifact %s: %s", artifact.local_path, e)
                return StructuredTable.empty(), AggregationContext(missing)
            kind = artifact.media_kind
            if kind in (MediaKind.UNKNOWN, MediaKind.README):
                kind = sniff_media_kind(artifact.local_path, data)
            if kind is MediaKind.STRUCTURED:
                return self._extract_structured(artifact, data, missing)
            if kind is MediaKind.SEMI_STRUCTURED:
                return self._extract_workbook(artifact, data, query, missing)
            if kind is MediaKind.UNSTRUCTURED:
                return self._extract_pages(artifact, data, query, missing)
            log.warning("no extractor for %s; skipping", artifact.local_path)
            return StructuredTable.empty(), AggregationContext(missing)
        finally:
            checked.add(artifact.local_path)

    def _extract_structured(
        self, artifact: RawArtifact, data: bytes, missing: tuple[str, ...]
    ) -> tuple[StructuredTable, AggregationContext]:
        if artifact.local_path.lower().endswith(".tsv"):
            import csv as _csv
            import io as _io

            try:
                text = data.decode("utf-8-sig")
            except UnicodeDecodeError as e:
                log.warning("undecodable tsv %s: %s", artifact.local_path, e)
                return StructuredTable.empty(), AggregationContext(missing)
            buf = _io.StringIO()
            writer = _csv.writer(buf, lineterminator="\r\n")
            for row in _csv.reader(_io.StringIO(text, newline=""), delimiter="\t"):
                writer.writerow(row)
            data = buf.getvalue().encode("utf-8")
        try:
            return csv_to_table(data), AggregationContext(missing)
        except CsvFormatError as e:
            log.warning("unparsable delimited file %s: %s", artifact.local_path, e)
            return StructuredTable.empty(), AggregationContext(missing)

    def _fold_units(
        self,
        labeled: list[tuple[str | None, StructuredTable]],
        query: Query,
        missing: tuple[str, ...],
    ) -> tuple[StructuredTable, AggregationContext]:
        """Aggregate a file's units in order. Labels (sheet names) become a
        discriminator: "year" when each label is a year, else "source"."""
        labels = [label for label, _ in labeled]
        named = [l for l in labels if l]
        column = None
        if len(labeled) > 1 and len(named) == len(labels):
            column = "year" if all(is_year_label(l) for l in named) else "source"

        def value_of(label: str | None):
            if column is None or label is None:
                return None
            return float(label) if column == "year" else label

        result = StructuredTable.empty()
        previous_label: str | None = None
        for label, unit in labeled:
            if unit.is_empty and not unit.columns:
                previous_label = label if result.is_empty else previous_label
                continue
            disc = (
                Discriminator(column, value_of(previous_label), value_of(label))
                if column is not None
                else None
            )
            context = AggregationContext(missing, disc)
            if result.is_empty and not result.columns:
                result = unit
            else:
                result = aggregate_tables(result, unit, query, context, self._chooser)
            previous_label = label
            if covers_needed(result, missing):
                break
        return result, AggregationContext(missing)

    def _extract_workbook(
        self, artifact: RawArtifact, data: bytes, query: Query, missing: tuple[str, ...]
    ) -> tuple[StructuredTable, AggregationContext]:
        try:
            sheets = read_workbook(data)
        except XlsxFormatError as e:
            log.warning("unreadable workbook %s: %s", artifact.local_path, e)
            return StructuredTable.empty(), AggregationContext(missing)
        return self._fold_units([(name, table) for name, table in sheets], query, missing)

    def _extract_pages(
        self, artifact: RawArtifact, data: bytes, query: Query, missing: tuple[str, ...]
    ) -> tuple[StructuredTable, AggregationContext]:
        try:
            units = page_units(data)
        except UnsupportedMediaError as e:
            log.warning("cannot page-split %s: %s", artifact.local_path, e)
            return StructuredTable.empty(), AggregationContext(missing)
        instruction = "\n".join(
            [
                "task: vision-extract",
                f"query: {query.text}",
                "emit the page's relevant table as CSV, or EMPTY if there is none.",
            ]
        )
        table = StructuredTable.empty()
        for unit in units:
            try:
                table = self.gateway.vision_extract(instruction, unit, table, missing)
            except GatewayError as e:
                log.warning("vision extraction failed on a page of %s: %s",
                            artifact.local_path, e)
                continue
            if covers_needed(table, missing):
                break
        return table, AggregationContext(missing)

    # ---- aggregation fallback ---------------------------------------------

    def _chooser(self, query, left, right, context):
        payload = "\n".join(
            [
                "task: choose-aggregation",
                f"query: {query.text if query else ''}",
                f"left columns: {', '.join(left.columns)}",
                f"right columns: {', '.join(right.columns)}",
                "respond ROW, COLUMN <left key> = <right key>, or",
                "MIXED <column> <left value> <right value>.",
            ]
        )
        response = self.gateway.complete(ModelRequest(Capability.CHAT, payload)).strip()
        word, _, rest = response.partition(" ")
        word = word.upper()
        if word == "ROW":
            return "row", None
        if word == "COLUMN":
            lk, _, rk = rest.partition("=")
            lk, rk = lk.strip(), rk.strip() or lk.strip()
            return "column", (lk, rk)
        if word == "MIXED":
            parts = rest.split()
            if len(parts) >= 3:
                return "mixed", Discriminator(parts[0], parts[1], parts[2])
        raise AggregationError(
            f"fallback chooser reply unusable: {response!r}", left.columns, right.columns
        )

    # ---- update ------------------------------------------------------------

    def update_database(
        self,
        query: Query,
        missing: tuple[str, ...],
        table: StructuredTable,
        extracted: StructuredTable,
        context: AggregationContext | None = None,
    ) -> StructuredTable:
        """Normalize the extraction's column names, then aggregate it in."""
        normalized, renames = normalize_columns(extracted)
        if renames:
            log.info("normalized columns: %s", renames)
        ctx = context if context is not None else AggregationContext(missing)
        try:
            return aggregate_tables(table, normalized, query, ctx, self._chooser)
        except (AggregationError, GatewayError) as e:
            log.warning("aggregation failed (%s); keeping the larger side", e)
            if normalized.width * len(normalized.rows) > table.width * len(table.rows):
                return normalized
            return table

    # ---- readme preload ----------------------------------------------------

    def _preload_readmes(self, store: RawDataStore, checked: CheckedFileList) -> str:
        chunks: list[str] = []
        for artifact in store:
            if artifact.local_path in checked:
                continue
            name = artifact.local_path.rsplit("/", 1)[-1].lower()
            if artifact.media_kind is MediaKind.README or "readme" in name:
                checked.add(artifact.local_path)
                try:
                    text = store.resolve(artifact).read_text("utf-8", errors="replace")
                except OSError as e:
                    log.warning("unreadable readme %s: %s", artifact.local_path, e)
                    continue
                chunks.append(f"[{artifact.local_path}]\n{text.strip()[:2000]}")
        return "\n\n".join(chunks)

    # ---- the loop ----------------------------------------------------------

    def transform(
        self,
        query: Query,
        store: RawDataStore,
        table: StructuredTable,
        checked: CheckedFileList,
    ) -> tuple[StructuredTable, AdequacyResult]:
        readme_context = self._preload_readmes(store, checked)
        while True:
            adequacy = self.check_adequate_info(query, table)
            if adequacy.adequate:
                return table, adequacy
            artifact = self.file_selection(
                query, adequacy.missing, store, checked, readme_context
            )
            if artifact is None:
                return table, adequacy
            extracted, context = self.extract_data(
                query, adequacy.missing, artifact, checked, store
            )
            if extracted.is_empty and not extracted.columns:
                continue
            table = self.update_database(
                query, adequacy.missing, table, extracted, context
            )
