"""Task-suite execution and report aggregation.

``run_suite`` drives one pipeline execution per task (concurrently when
asked), scores every outcome with the metric functions in this package,
and assembles a report whose aggregates are pure functions of the
per-task rows.  A crash inside a single task becomes a failed record;
the suite itself never aborts.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from typing import Callable, Sequence

from ..core.csvio import format_number
from ..core.types import AnswerBundle, AnswerKind, QueryKind, TaskInstance
from ..gateway.base import ModelGateway
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
from .similarity import HEAD_ROWS, code_similarity, data_similarity

# Sub-agents that can own the final collection, plus the no-data case.
COLLECTORS = ("browser", "augmenter", "none")

SimRow = tuple[float | None, float | None, float | None, float | None]

_ABSENT_SIMS: SimRow = (None, None, None, None)


@dataclass(frozen=True, slots=True)
class RunOutcome:
    """What one pipeline execution hands to the scorer."""

    bundle: AnswerBundle
    cost_cents: float = 0.0
    collector: str = "none"
    rounds: int = 0


@dataclass(frozen=True, slots=True)
class TaskRecord:
    """One row of the report; every aggregate derives from these rows."""

    task_id: str
    kind: str
    timestamp: date
    accuracy: bool
    dg_accuracy: bool
    data_valid: bool
    blacklist_violation: bool
    cost_cents: float
    collector: str
    rounds: int
    answer: str
    data_sims: SimRow
    code_sims: SimRow
    flags: tuple[str, ...] = ()
    error: str = ""


@dataclass(frozen=True, slots=True)
class TimeBucketRow:
    """Accuracy over one three-month period of task timestamps."""

    bucket: str
    tasks: int
    accuracy: float


@dataclass(frozen=True, slots=True)
class SuiteAggregates:
    tasks: int
    accuracy: float
    verification_accuracy: float | None
    qa_accuracy: float | None
    dg_accuracy: float
    validity_rate: float
    violations: int
    mean_cost_cents: float
    data_sim_means: SimRow
    data_sim_ranks: tuple[int | None, int | None, int | None, int | None]
    code_sim_means: SimRow
    code_sim_ranks: tuple[int | None, int | None, int | None, int | None]
    accuracy_delta: float | None
    data_agreement: float | None
    code_agreement: float | None
    sim_correlation: float | None
    time_buckets: tuple[TimeBucketRow, ...]
    workload_share: tuple[tuple[str, float], ...]


@dataclass(frozen=True, slots=True)
class SuiteReport:
    records: tuple[TaskRecord, ...]
    aggregates: SuiteAggregates

    def recompute(self) -> SuiteAggregates:
        return aggregate(self.records)

    def consistent(self) -> bool:
        """True iff the stored aggregates reproduce from the rows."""
        return self.recompute() == self.aggregates


def _answer_text(bundle: AnswerBundle) -> str:
    answer = bundle.answer
    if answer.kind is AnswerKind.BOOLEAN:
        return "true" if answer.value else "false"
    if answer.kind is AnswerKind.NUMBER:
        return format_number(answer.value)
    if answer.kind is AnswerKind.TEXT:
        return str(answer.value)
    return "abstain"


def score_run(
    task: TaskInstance,
    outcome: RunOutcome,
    gateway: ModelGateway,
    head_rows: int = HEAD_ROWS,
) -> TaskRecord:
    """Score one finished run against its task's gold artifacts."""
    bundle = outcome.bundle
    data = data_similarity(bundle.table, task.gold_table, gateway, head_rows)
    code = code_similarity(bundle.program, task.gold_program, gateway)
    return TaskRecord(
        task_id=task.id,
        kind=task.query.kind.value,
        timestamp=task.timestamp,
        accuracy=score_accuracy(bundle, task),
        dg_accuracy=score_dg_accuracy(bundle, task),
        data_valid=data_validity(bundle),
        blacklist_violation=blacklist_violation(bundle, task),
        cost_cents=outcome.cost_cents,
        collector=outcome.collector,
        rounds=outcome.rounds,
        answer=_answer_text(bundle),
        data_sims=tuple(data.as_list()),
        code_sims=tuple(code.as_list()),
        flags=data.flags + code.flags,
    )


def crash_record(task: TaskInstance, error: str) -> TaskRecord:
    """Failed row for a task whose run (or scoring) raised."""
    return TaskRecord(
        task_id=task.id,
        kind=task.query.kind.value,
        timestamp=task.timestamp,
        accuracy=False,
        dg_accuracy=False,
        data_valid=False,
        blacklist_violation=False,
        cost_cents=0.0,
        collector="none",
        rounds=0,
        answer="",
        data_sims=_ABSENT_SIMS,
        code_sims=_ABSENT_SIMS,
        error=error,
    )


def run_suite(
    tasks: Sequence[TaskInstance],
    run_task: Callable[[TaskInstance], RunOutcome],
    gateway: ModelGateway,
    *,
    jobs: int = 1,
    head_rows: int = HEAD_ROWS,
) -> SuiteReport:
    """Execute and score every task; records stay in task order."""
    if not tasks:
        raise ValueError("suite needs at least one task")
    if jobs < 1:
        raise ValueError("jobs must be positive")

    def one(task: TaskInstance) -> TaskRecord:
        try:
            outcome = run_task(task)
        except Exception as e:  # crash containment is the contract
            return crash_record(task, f"run failed: {type(e).__name__}: {e}")
        try:
            return score_run(task, outcome, gateway, head_rows)
        except Exception as e:
            return crash_record(task, f"scoring failed: {type(e).__name__}: {e}")

    if jobs == 1:
        records = tuple(one(task) for task in tasks)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = tuple(pool.map(one, tasks))
    return SuiteReport(records, aggregate(records))


def _rate(hits: Sequence[bool]) -> float | None:
    return sum(hits) / len(hits) if hits else None


def _sim_means(rows: Sequence[SimRow]) -> SimRow:
    means: list[float | None] = []
    for i in range(4):
        values = [row[i] for row in rows if row[i] is not None]
        means.append(sum(values) / len(values) if values else None)
    return tuple(means)


def _sim_ranks(
    means: SimRow,
) -> tuple[int | None, int | None, int | None, int | None]:
    # Competition ranking of the four metric means, 1 = highest.
    ranks: list[int | None] = []
    for mean in means:
        if mean is None:
            ranks.append(None)
        else:
            ranks.append(1 + sum(1 for m in means if m is not None and m > mean))
    return tuple(ranks)


def _complete(rows: Sequence[SimRow]) -> list[list[float]]:
    return [list(row) for row in rows if all(v is not None for v in row)]


def _agreement(rows: Sequence[SimRow]) -> float | None:
    full = _complete(rows)
    if len(full) < 2:
        return None
    return mutual_agreement(full)


def _sim_correlation(records: Sequence[TaskRecord]) -> float | None:
    xs: list[float] = []
    ys: list[float] = []
    for r in records:
        if None in r.data_sims or None in r.code_sims:
            continue
        xs.append(sum(r.data_sims) / 4)
        ys.append(sum(r.code_sims) / 4)
    if len(xs) < 2:
        return None
    try:
        return pearson(xs, ys)
    except ValueError:  # zero variance on either axis
        return None


def _accuracy_delta(verif: float | None, qa: float | None) -> float | None:
    if verif is None or qa is None:
        return None
    a, b = verif * 100, qa * 100
    if a + b == 0:
        return None
    return delta(a, b)


def _time_rows(records: Sequence[TaskRecord]) -> tuple[TimeBucketRow, ...]:
    buckets: dict[str, list[bool]] = {}
    for r in records:
        buckets.setdefault(time_bucket(r.timestamp), []).append(r.accuracy)
    return tuple(
        TimeBucketRow(bucket, len(hits), sum(hits) / len(hits))
        for bucket, hits in sorted(buckets.items())
    )


def _workload(records: Sequence[TaskRecord]) -> tuple[tuple[str, float], ...]:
    counts = Counter(r.collector for r in records)
    names = sorted(set(COLLECTORS) | set(counts))
    return tuple((name, counts.get(name, 0) / len(records)) for name in names)


def aggregate(records: Sequence[TaskRecord]) -> SuiteAggregates:
    """Pure aggregation; rerunning it must reproduce a report exactly."""
    if not records:
        raise ValueError("no records to aggregate")
    n = len(records)
    verif = [r.accuracy for r in records if r.kind == QueryKind.VERIFICATION.value]
    qa = [
        r.accuracy for r in records if r.kind == QueryKind.QUESTION_ANSWERING.value
    ]
    verification_accuracy = _rate(verif)
    qa_accuracy = _rate(qa)
    data_means = _sim_means([r.data_sims for r in records])
    code_means = _sim_means([r.code_sims for r in records])
    return SuiteAggregates(
        tasks=n,
        accuracy=sum(r.accuracy for r in records) / n,
        verification_accuracy=verification_accuracy,
        qa_accuracy=qa_accuracy,
        dg_accuracy=sum(r.dg_accuracy for r in records) / n,
        validity_rate=sum(r.data_valid for r in records) / n,
        violations=sum(r.blacklist_violation for r in records),
        mean_cost_cents=sum(r.cost_cents for r in records) / n,
        data_sim_means=data_means,
        data_sim_ranks=_sim_ranks(data_means),
        code_sim_means=code_means,
        code_sim_ranks=_sim_ranks(code_means),
        accuracy_delta=_accuracy_delta(verification_accuracy, qa_accuracy),
        data_agreement=_agreement([r.data_sims for r in records]),
        code_agreement=_agreement([r.code_sims for r in records]),
        sim_correlation=_sim_correlation(records),
        time_buckets=_time_rows(records),
        workload_share=_workload(records),
    )
