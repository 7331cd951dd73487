"""Task and result serialization.

A task file is one JSON document; its gold table and gold program live in
sibling files referenced by relative path. Loading re-executes the gold
program over the gold table and refuses the task when the result disagrees
with the gold label, so a corrupt task can never silently skew a score.

A result bundle is one directory: result.json, table.csv, program.sql,
trace.json. All JSON is written with sorted keys and a trailing newline so
repeat runs are byte-comparable.
"""

from __future__ import annotations

import json
from datetime import date
from pathlib import Path

from .analyzer.executor import SqlExecutionError, execute_sql
from .analyzer.parser import SqlParseError
from .core.csvio import csv_to_table, table_to_csv
from .core.matching import answers_match
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


class TaskLoadError(ValueError):
    pass


_KINDS = {k.value: k for k in QueryKind}
_ANSWER_KINDS = {k.value: k for k in AnswerKind}


def _answer_from_json(doc: dict) -> Answer:
    kind = _ANSWER_KINDS.get(doc.get("kind", ""))
    if kind is None:
        raise TaskLoadError(f"unknown answer kind: {doc.get('kind')!r}")
    value = doc.get("value")
    if kind is AnswerKind.BOOLEAN:
        return Answer.boolean(bool(value))
    if kind is AnswerKind.NUMBER:
        return Answer.number(float(value))
    if kind is AnswerKind.TEXT:
        return Answer.text(str(value))
    return Answer.abstain()


def _answer_to_json(answer: Answer) -> dict:
    return {"kind": answer.kind.value, "value": answer.value}


def load_task(path: Path, *, check_gold: bool = True) -> TaskInstance:
    """Read one task file; relative table/program paths resolve next to it."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise TaskLoadError(f"{path}: {e}") from e
    try:
        query = Query(doc["query"]["text"], _KINDS[doc["query"]["kind"]])
        blacklist = Blacklist.of(*doc.get("blacklist", []))
        gold_label = _answer_from_json(doc["gold_label"])
        table_path = path.parent / doc["gold_table"]
        program_path = path.parent / doc["gold_program"]
        gold_table = csv_to_table(table_path.read_bytes())
        gold_program = program_path.read_text("utf-8").strip()
        task = TaskInstance(
            id=doc["id"],
            query=query,
            blacklist=blacklist,
            gold_label=gold_label,
            gold_table=gold_table,
            gold_program=gold_program,
            timestamp=date.fromisoformat(doc["timestamp"]),
        )
    except (KeyError, TypeError, ValueError, OSError) as e:
        raise TaskLoadError(f"{path}: {e}") from e
    if check_gold:
        _check_gold(task, path)
    return task


def _check_gold(task: TaskInstance, path: Path) -> None:
    """The gold program must reproduce the gold label over the gold table."""
    try:
        result = execute_sql(task.gold_program, task.gold_table)
        derived = result.scalar
    except (SqlParseError, SqlExecutionError) as e:
        raise TaskLoadError(f"{path}: gold program does not run: {e}") from e
    if isinstance(derived, bool):
        candidate = Answer.boolean(derived)
    elif isinstance(derived, float):
        candidate = Answer.number(derived)
    elif derived is None:
        raise TaskLoadError(f"{path}: gold program yields NULL")
    else:
        candidate = Answer.text(derived)
    if not answers_match(task.gold_label, candidate):
        raise TaskLoadError(
            f"{path}: gold program yields {derived!r}, "
            f"label says {task.gold_label.value!r}"
        )


def load_suite(directory: Path) -> list[TaskInstance]:
    """All *.task.json files under a directory, sorted by task id."""
    tasks = [load_task(p) for p in sorted(Path(directory).glob("*.task.json"))]
    if not tasks:
        raise TaskLoadError(f"no *.task.json files in {directory}")
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        raise TaskLoadError(f"duplicate task ids in {directory}")
    return sorted(tasks, key=lambda t: t.id)


def save_task(task: TaskInstance, directory: Path) -> Path:
    """Write the task triplet (json + gold csv + gold sql); returns the json path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    table_name = f"{task.id}.gold.csv"
    program_name = f"{task.id}.gold.sql"
    (directory / table_name).write_bytes(table_to_csv(task.gold_table))
    (directory / program_name).write_text(task.gold_program + "\n", "utf-8")
    doc = {
        "id": task.id,
        "query": {"text": task.query.text, "kind": task.query.kind.value},
        "blacklist": sorted(task.blacklist.domains),
        "gold_label": _answer_to_json(task.gold_label),
        "gold_table": table_name,
        "gold_program": program_name,
        "timestamp": task.timestamp.isoformat(),
    }
    path = directory / f"{task.id}.task.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")
    return path


# ---- result bundles -------------------------------------------------------------


def _json_dumps(doc: object) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_bundle(
    bundle: AnswerBundle,
    task_id: str,
    directory: Path,
    *,
    cost: float = 0.0,
    transcript: list[dict] | None = None,
    collector: str = "",
    rounds: int = 0,
) -> Path:
    """Write one result directory; byte-stable for identical inputs."""
    out = Path(directory) / task_id
    out.mkdir(parents=True, exist_ok=True)
    # an empty table cannot carry a CSV header; an empty file marks it
    table_bytes = table_to_csv(bundle.table) if bundle.table.columns else b""
    (out / "table.csv").write_bytes(table_bytes)
    (out / "program.sql").write_text(
        (bundle.program + "\n") if bundle.program else "", "utf-8"
    )
    result = {
        "task_id": task_id,
        "query": {"text": bundle.query.text, "kind": bundle.query.kind.value},
        "answer": _answer_to_json(bundle.answer),
        "note": bundle.note,
        "cost": round(cost, 6),
        "collector": collector,
        "rounds": rounds,
    }
    (out / "result.json").write_text(_json_dumps(result), "utf-8")
    trace = {
        "sources": [
            {"url": e.url, "added_by": e.added_by.value, "round": e.round, "at": e.at}
            for e in bundle.sources
        ],
        "phases": transcript or [],
    }
    (out / "trace.json").write_text(_json_dumps(trace), "utf-8")
    return out


def load_bundle(directory: Path, task: TaskInstance) -> AnswerBundle:
    """Rehydrate a saved result well enough to rescore it."""
    out = Path(directory)
    try:
        result = json.loads((out / "result.json").read_text("utf-8"))
        table_bytes = (out / "table.csv").read_bytes()
        table = csv_to_table(table_bytes) if table_bytes.strip() else StructuredTable.empty()
        program = (out / "program.sql").read_text("utf-8").strip()
        trace = json.loads((out / "trace.json").read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise TaskLoadError(f"{out}: {e}") from e
    sources = SourceLog()
    for entry in trace.get("sources", []):
        sources.add(
            entry["url"],
            SourceAgent(entry["added_by"]),
            int(entry["round"]),
            int(entry["at"]),
        )
    return AnswerBundle(
        query=task.query,
        answer=_answer_from_json(result["answer"]),
        table=table,
        program=program,
        sources=sources,
        note=result.get("note", ""),
    )
