"""Benchmark harness: metrics, similarity scoring, suite runner, reports."""

from .metrics import (
    blacklist_violation,
    data_validity,
    delta,
    mutual_agreement,
    pearson,
    score_accuracy,
    score_dg_accuracy,
    time_bucket,
)
from .normalize import CodeParseError, normalize_code, try_normalize
from .report import (
    per_task_csv,
    render_text,
    report_to_doc,
    report_to_json,
    time_buckets_csv,
    write_report,
)
from .similarity import (
    HEAD_ROWS,
    ScorePair,
    SimilarityScores,
    align_columns,
    code_similarity,
    cosine,
    data_similarity,
    match_columns,
)
from .suite import (
    COLLECTORS,
    RunOutcome,
    SuiteAggregates,
    SuiteReport,
    TaskRecord,
    TimeBucketRow,
    aggregate,
    crash_record,
    run_suite,
    score_run,
)

__all__ = [
    "COLLECTORS",
    "CodeParseError",
    "HEAD_ROWS",
    "RunOutcome",
    "ScorePair",
    "SimilarityScores",
    "SuiteAggregates",
    "SuiteReport",
    "TaskRecord",
    "TimeBucketRow",
    "aggregate",
    "align_columns",
    "blacklist_violation",
    "code_similarity",
    "cosine",
    "crash_record",
    "data_similarity",
    "data_validity",
    "delta",
    "match_columns",
    "mutual_agreement",
    "normalize_code",
    "pearson",
    "per_task_csv",
    "render_text",
    "report_to_doc",
    "report_to_json",
    "run_suite",
    "score_accuracy",
    "score_dg_accuracy",
    "score_run",
    "time_bucket",
    "time_buckets_csv",
    "try_normalize",
    "write_report",
]
