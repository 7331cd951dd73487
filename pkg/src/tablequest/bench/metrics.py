"""Scalar benchmark metrics over finished answer bundles.

Accuracy compares the final answer to the gold label, with any blacklisted
source an automatic failure. Data-grounded (DG) accuracy instead re-executes
the produced program over the produced table, so a right answer with broken
provenance scores true on accuracy and false on DG; the gap between the two
is the measurement of interest.
"""

from __future__ import annotations

import statistics
from datetime import date

from ..analyzer.executor import SqlExecutionError, execute_sql
from ..analyzer.parser import SqlParseError
from ..core.csvio import table_to_text, text_to_table, tables_equal, CsvFormatError
from ..core.matching import answers_match
from ..core.types import (
    Answer,
    AnswerBundle,
    TaskInstance,
    blacklist_matches,
)


def blacklist_violation(bundle: AnswerBundle, task: TaskInstance) -> bool:
    return any(blacklist_matches(e.url, task.blacklist) for e in bundle.sources)


def score_accuracy(bundle: AnswerBundle, task: TaskInstance) -> bool:
    """Gold-label match; touching a blacklisted domain fails outright."""
    if blacklist_violation(bundle, task):
        return False
    return answers_match(task.gold_label, bundle.answer)


def score_dg_accuracy(bundle: AnswerBundle, task: TaskInstance) -> bool:
    """Does re-running the produced program on the produced table hit gold?

    Empty program, empty table, execution errors, and non-scalar results all
    score false; the blacklist rule applies here too.
    """
    if blacklist_violation(bundle, task):
        return False
    if not bundle.program.strip() or bundle.table.is_empty:
        return False
    try:
        value = execute_sql(bundle.program, bundle.table).scalar
    except (SqlParseError, SqlExecutionError):
        return False
    if value is None:
        return False
    if isinstance(value, bool):
        derived = Answer.boolean(value)
    elif isinstance(value, float):
        derived = Answer.number(value)
    else:
        derived = Answer.text(value)
    return answers_match(task.gold_label, derived)


def data_validity(bundle: AnswerBundle) -> bool:
    """Non-empty and survives a CSV round trip unchanged."""
    table = bundle.table
    if table.is_empty:
        return False
    try:
        reparsed = text_to_table(table_to_text(table))
    except CsvFormatError:
        return False
    return tables_equal(table, reparsed)


def delta(a: float, b: float) -> float:
    """Relative difference of two percentages: |a-b| / (a+b) * 100."""
    if a < 0 or b < 0:
        raise ValueError("delta is defined over non-negative percentages")
    if a + b == 0:
        raise ValueError("delta undefined: a + b = 0")
    return abs(a - b) / (a + b) * 100.0


def mutual_agreement(matrix: list[list[float]]) -> float:
    """Average pairwise rank agreement between metric columns.

    For every pair of metrics and every pair of items, the pair agrees when
    both metrics order the two items identically; two ties count as
    agreement, a tie against a strict order does not.
    """
    items = len(matrix)
    if items < 2:
        raise ValueError("mutual agreement needs at least 2 items")
    metrics = len(matrix[0])
    if metrics < 2:
        raise ValueError("mutual agreement needs at least 2 metrics")
    if any(len(row) != metrics for row in matrix):
        raise ValueError("ragged score matrix")

    def sign(x: float) -> int:
        return (x > 0) - (x < 0)

    agree = total = 0
    for m in range(metrics):
        for k in range(m + 1, metrics):
            for i in range(items):
                for j in range(i + 1, items):
                    a = sign(matrix[i][m] - matrix[j][m])
                    b = sign(matrix[i][k] - matrix[j][k])
                    total += 1
                    agree += a == b
    return agree / total


def pearson(xs: list[float], ys: list[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError("series lengths differ")
    if len(xs) < 2:
        raise ValueError("pearson needs at least 2 points")
    try:
        return statistics.correlation(xs, ys)
    except statistics.StatisticsError as e:
        raise ValueError(str(e)) from e


def time_bucket(when: date) -> str:
    """Start of the enclosing three-month period, as YYYY-MM."""
    start_month = (when.month - 1) // 3 * 3 + 1
    return f"{when.year}-{start_month:02d}"
