"""Report emission: JSON document, aligned text tables, and CSV exports.

The JSON file is the machine-readable report; the text rendering mirrors
it for eyeballing; ``per_task.csv`` holds the raw rows and
``time_buckets.csv`` the accuracy-over-time series for external plotting.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .suite import SuiteReport, TaskRecord

_SIM_LABELS = ("sim1_judge_raw", "sim2_embed_raw", "sim3_judge", "sim4_embed")


def _record_doc(record: TaskRecord) -> dict:
    return {
        "task_id": record.task_id,
        "kind": record.kind,
        "timestamp": record.timestamp.isoformat(),
        "accuracy": record.accuracy,
        "dg_accuracy": record.dg_accuracy,
        "data_valid": record.data_valid,
        "blacklist_violation": record.blacklist_violation,
        "cost_cents": record.cost_cents,
        "collector": record.collector,
        "rounds": record.rounds,
        "answer": record.answer,
        "data_sims": list(record.data_sims),
        "code_sims": list(record.code_sims),
        "flags": list(record.flags),
        "error": record.error,
    }


def report_to_doc(report: SuiteReport) -> dict:
    agg = report.aggregates
    return {
        "aggregates": {
            "tasks": agg.tasks,
            "accuracy": agg.accuracy,
            "verification_accuracy": agg.verification_accuracy,
            "qa_accuracy": agg.qa_accuracy,
            "dg_accuracy": agg.dg_accuracy,
            "validity_rate": agg.validity_rate,
            "violations": agg.violations,
            "mean_cost_cents": agg.mean_cost_cents,
            "data_similarity": {
                "means": list(agg.data_sim_means),
                "ranks": list(agg.data_sim_ranks),
            },
            "code_similarity": {
                "means": list(agg.code_sim_means),
                "ranks": list(agg.code_sim_ranks),
            },
            "accuracy_delta": agg.accuracy_delta,
            "data_agreement": agg.data_agreement,
            "code_agreement": agg.code_agreement,
            "sim_correlation": agg.sim_correlation,
            "time_buckets": [
                {"bucket": b.bucket, "tasks": b.tasks, "accuracy": b.accuracy}
                for b in agg.time_buckets
            ],
            "workload_share": dict(agg.workload_share),
        },
        "tasks": [_record_doc(r) for r in report.records],
    }


def report_to_json(report: SuiteReport) -> str:
    return json.dumps(report_to_doc(report), indent=2, sort_keys=True) + "\n"


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{value * 100:.1f}%"


def _num(value: float | None, digits: int = 3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def _aligned(headers: list[str], rows: list[list[str]]) -> list[str]:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells: list[str]) -> str:
        # first column left-aligned, the rest right-aligned
        parts = [cells[0].ljust(widths[0])]
        parts += [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join(parts).rstrip()
    rule = "  ".join("-" * w for w in widths)
    return [line(headers), rule] + [line(r) for r in rows]


def render_text(report: SuiteReport) -> str:
    agg = report.aggregates
    out: list[str] = []

    out.append("== Overview ==")
    out += _aligned(
        ["metric", "value"],
        [
            ["tasks", str(agg.tasks)],
            ["accuracy", _pct(agg.accuracy)],
            ["verification accuracy", _pct(agg.verification_accuracy)],
            ["qa accuracy", _pct(agg.qa_accuracy)],
            ["dg accuracy", _pct(agg.dg_accuracy)],
            ["data validity", _pct(agg.validity_rate)],
            ["blacklist violations", str(agg.violations)],
            ["mean cost (cents)", _num(agg.mean_cost_cents, 4)],
            ["accuracy delta", _num(agg.accuracy_delta, 1)],
        ],
    )

    out.append("")
    out.append("== Similarity ==")
    sim_rows = []
    for family, means, ranks in (
        ("data", agg.data_sim_means, agg.data_sim_ranks),
        ("code", agg.code_sim_means, agg.code_sim_ranks),
    ):
        row = [family]
        for mean, rank in zip(means, ranks):
            cell = _num(mean)
            if rank is not None:
                cell += f" ({rank})"
            row.append(cell)
        sim_rows.append(row)
    out += _aligned(["family", "sim1", "sim2", "sim3", "sim4"], sim_rows)
    out += _aligned(
        ["agreement", "value"],
        [
            ["data", _num(agg.data_agreement)],
            ["code", _num(agg.code_agreement)],
            ["pearson", _num(agg.sim_correlation)],
        ],
    )

    out.append("")
    out.append("== Accuracy over time ==")
    out += _aligned(
        ["bucket", "tasks", "accuracy"],
        [[b.bucket, str(b.tasks), _pct(b.accuracy)] for b in agg.time_buckets],
    )

    out.append("")
    out.append("== Workload share ==")
    out += _aligned(
        ["collector", "share"],
        [[name, _pct(share)] for name, share in agg.workload_share],
    )

    out.append("")
    out.append("== Tasks ==")
    out += _aligned(
        ["task", "kind", "acc", "dg", "valid", "cost", "collector", "note"],
        [
            [
                r.task_id,
                r.kind,
                "y" if r.accuracy else "n",
                "y" if r.dg_accuracy else "n",
                "y" if r.data_valid else "n",
                _num(r.cost_cents, 4),
                r.collector,
                r.error or ("; ".join(r.flags) if r.flags else ""),
            ]
            for r in report.records
        ],
    )
    return "\n".join(out) + "\n"


def per_task_csv(report: SuiteReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["task_id", "kind", "timestamp", "accuracy", "dg_accuracy", "data_valid",
         "blacklist_violation", "cost_cents", "collector", "rounds", "answer"]
        + [f"data_{label}" for label in _SIM_LABELS]
        + [f"code_{label}" for label in _SIM_LABELS]
        + ["flags", "error"]
    )
    for r in report.records:
        sims = [("" if v is None else repr(v)) for v in r.data_sims + r.code_sims]
        writer.writerow(
            [
                r.task_id,
                r.kind,
                r.timestamp.isoformat(),
                str(r.accuracy).lower(),
                str(r.dg_accuracy).lower(),
                str(r.data_valid).lower(),
                str(r.blacklist_violation).lower(),
                repr(r.cost_cents),
                r.collector,
                r.rounds,
                r.answer,
            ]
            + sims
            + ["; ".join(r.flags), r.error]
        )
    return buf.getvalue()


def time_buckets_csv(report: SuiteReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bucket", "tasks", "accuracy"])
    for b in report.aggregates.time_buckets:
        writer.writerow([b.bucket, b.tasks, repr(b.accuracy)])
    return buf.getvalue()


def write_report(report: SuiteReport, out_dir: Path) -> list[Path]:
    """Write the four report files; returns their paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "report.json": report_to_json(report),
        "report.txt": render_text(report),
        "per_task.csv": per_task_csv(report),
        "time_buckets.csv": time_buckets_csv(report),
    }
    paths = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths
