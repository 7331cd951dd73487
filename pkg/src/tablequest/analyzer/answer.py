"""Turn a query plus the finished table into an executable program and an answer.

The model sees the schema and the first rows of the table, emits one dialect
statement, and the statement is validated, executed, and its result coerced
into an answer. Bad programs earn bounded feedback-driven retries; an empty
table short-circuits: claims are unverified (false) and questions abstain.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core.text import token_overlap
from ..core.types import Answer, Query, QueryKind, StructuredTable
from ..core.csvio import table_to_text
from ..gateway import Capability, GatewayError, ModelGateway, ModelRequest
from .ast import Statement, is_boolean_expr, referenced_columns
from .executor import QueryResult, SqlExecutionError, execute_sql
from .parser import SqlParseError, parse_sql

# initial attempt + feedback-driven regenerations
MAX_ATTEMPTS = 3
HEAD_ROWS = 5


class ProgramValidationError(ValueError):
    """Generated text is not a usable program for this query and table."""


@dataclass(frozen=True)
class Analysis:
    answer: Answer
    program: str
    note: str = ""


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        lines = text.splitlines()
        if lines[0].startswith("```"):
            lines = lines[1:]
        if lines and lines[-1].strip().startswith("```"):
            lines = lines[:-1]
        text = "\n".join(lines).strip()
    return text


def validate_program(sql: str, query: Query, table: StructuredTable) -> Statement:
    """Parse and statically check a program against the table schema."""
    stmt = parse_sql(sql)
    unknown = referenced_columns(stmt) - set(table.columns)
    if unknown:
        raise ProgramValidationError(
            f"unknown columns: {', '.join(sorted(unknown))}"
        )
    if query.kind is QueryKind.VERIFICATION:
        for core in stmt.cores:
            if core.star or len(core.items) != 1:
                raise ProgramValidationError(
                    "verification programs must select exactly one expression"
                )
            if not is_boolean_expr(core.items[0].expr):
                raise ProgramValidationError(
                    "verification programs must select a boolean comparison"
                )
    return stmt


def _prompt(query: Query, table: StructuredTable, feedback: str) -> str:
    lines = [
        "task: generate-sql",
        f"query: {query.text}",
        f"kind: {query.kind.value}",
        f"columns: {', '.join(table.columns)}",
        f"rows: {len(table.rows)}",
        "head:",
        table_to_text(table.head(HEAD_ROWS)).rstrip("\r\n"),
    ]
    if feedback:
        lines.append(f"feedback: {feedback}")
    return "\n".join(lines)


def generate_sql(
    query: Query, table: StructuredTable, gateway: ModelGateway, feedback: str = ""
) -> str:
    """One generation round; returns the raw (fence-stripped) program text."""
    response = gateway.complete(
        ModelRequest(Capability.CHAT, _prompt(query, table, feedback))
    )
    return _strip_fences(response)


class _ExtractionError(ValueError):
    pass


def _pick_cell(result: QueryResult, query: Query):
    row = result.rows[0]
    best, best_score = None, 0
    for i, name in enumerate(result.columns):
        score = token_overlap(name, query.text)
        if score > best_score:
            best, best_score = i, score
    if best is not None:
        return row[best]
    return row[1] if len(row) > 1 else row[0]


def result_to_answer(result: QueryResult, query: Query) -> Answer:
    """Coerce an execution result into an answer; raises when the shape cannot
    support the query kind (callers turn that into retry feedback)."""
    if query.kind is QueryKind.VERIFICATION:
        if len(result.rows) != 1 or len(result.columns) != 1:
            raise _ExtractionError(
                f"verification needs a single value, got {len(result.rows)} rows"
            )
        value = result.rows[0][0]
        if value is None:
            return Answer.boolean(False)  # claim not supported by the data
        if not isinstance(value, bool):
            raise _ExtractionError(f"verification produced a non-boolean: {value!r}")
        return Answer.boolean(value)
    # question answering
    if len(result.rows) == 0:
        raise _ExtractionError("program returned no rows")
    if len(result.rows) > 1:
        raise _ExtractionError(f"program returned {len(result.rows)} rows, need one")
    value = result.rows[0][0] if len(result.columns) == 1 else _pick_cell(result, query)
    if value is None:
        raise _ExtractionError("program returned NULL")
    if isinstance(value, bool):
        raise _ExtractionError("question produced a boolean")
    if isinstance(value, float):
        return Answer.number(value)
    return Answer.text(value)


def empty_table_analysis(query: Query) -> Analysis:
    """The no-data fallback: claims are unverified, questions abstain."""
    if query.kind is QueryKind.VERIFICATION:
        return Analysis(Answer.boolean(False), "", "no data collected; claim unverified")
    return Analysis(Answer.abstain(), "", "no data collected; abstaining")


def analyze(query: Query, table: StructuredTable, gateway: ModelGateway) -> Analysis:
    """Full answer stage: generate, validate, execute, extract, with retries."""
    if table.is_empty:
        return empty_table_analysis(query)

    feedback = ""
    last_program = ""
    last_error = "no program generated"
    for _ in range(MAX_ATTEMPTS):
        try:
            program = generate_sql(query, table, gateway, feedback)
        except GatewayError as e:
            last_error = f"model unavailable: {e}"
            break
        try:
            stmt = validate_program(program, query, table)
        except (SqlParseError, ProgramValidationError) as e:
            feedback = f"previous program was rejected: {e}"
            last_error = str(e)
            continue
        last_program = program
        try:
            result = execute_sql(stmt, table)
            answer = result_to_answer(result, query)
        except (SqlExecutionError, _ExtractionError) as e:
            feedback = f"previous program failed: {e}"
            last_error = str(e)
            continue
        return Analysis(answer, program)

    note = f"analysis failed: {last_error}"
    if query.kind is QueryKind.VERIFICATION:
        return Analysis(Answer.abstain(), last_program, note)
    return Analysis(Answer.abstain(), last_program, note)
