"""Command line entry points.

tablequest run              execute tasks through the pipeline, saving bundles
tablequest bench            execute tasks, score them, and write report files
tablequest score            rescore previously saved result bundles
tablequest mini-suite       materialize the bundled offline demonstration suite
tablequest corpus-validate  check a scripted corpus directory

Exit codes: 0 on success; 1 when task failures exceed the configured
threshold, a recording misses its gold answer, or a corpus fails
validation; 2 on usage or infrastructure errors (bad flags, unreadable
config, missing corpus).
"""

from __future__ import annotations

import itertools
import json
import sys
import time
from pathlib import Path

import click

from .augmenter import (
    HttpSearchBackend,
    ScriptedSearchBackend,
    SearchBackend,
    SearchResponse,
)
from .bench.suite import RunOutcome, _answer_text, run_suite, score_run
from .bench.report import render_text, write_report
from .browser.corpus import CorpusError, ScriptedCorpus
from .browser.fetch import HttpFetcher, ScriptedFetcher
from .browser.session import ScriptedSession
from .browser.webdriver import WebDriverSession
from .config import ConfigError, PipelineConfig, load_config
from .core.types import TaskInstance
from .gateway import Capability, ModelGateway
from .gateway.remote import RemoteBackend, RemoteConfig
from .gateway.scripted import ScriptedBackend
from .mini_suite import build as build_mini_suite
from .orchestrator import Orchestrator, transcript_dicts
from .taskio import TaskLoadError, load_bundle, load_suite, load_task, save_bundle


class _EmptySearchBackend:
    """Remote mode without a search-tool endpoint: the collector finds nothing."""

    def search(self, query) -> SearchResponse:
        return SearchResponse("", (), ())


def _fail_usage(message: str) -> None:
    raise click.UsageError(message)


def _build_config(config_path: Path | None, **overrides) -> PipelineConfig:
    try:
        return load_config(config_path, **overrides)
    except ConfigError as e:
        _fail_usage(str(e))
        raise AssertionError  # unreachable


def _common_options(f):
    options = [
        click.option("--config", "config_path", type=Path, default=None,
                     help="JSON config file; flags override it."),
        click.option("--backend", type=click.Choice(["scripted", "remote"]),
                     default=None, help="Model and web backend."),
        click.option("--corpus", "corpus_dir", type=Path, default=None,
                     help="Scripted corpus directory (scripted backend)."),
        click.option("--fixtures", "fixtures_dir", type=Path, default=None,
                     help="Recorded gateway fixture directory (scripted backend)."),
        click.option("--env-root", type=Path, default=None,
                     help="Working directory for downloads and raw data."),
        click.option("--out", "out_dir", type=Path, default=None,
                     help="Output directory for bundles and reports."),
        click.option("--max-rounds", type=int, default=None),
        click.option("--max-steps", type=int, default=None),
        click.option("--jobs", type=int, default=None,
                     help="Concurrent task executions."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _task_options(f):
    options = [
        click.option("--task", "task_files", type=Path, multiple=True,
                     help="One task JSON file; repeatable."),
        click.option("--tasks", "tasks_dir", type=Path, default=None,
                     help="Directory of task JSON files."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _load_tasks(task_files: tuple[Path, ...], tasks_dir: Path | None) -> list[TaskInstance]:
    if not task_files and tasks_dir is None:
        _fail_usage("provide --task FILE or --tasks DIR")
    tasks: list[TaskInstance] = []
    try:
        if tasks_dir is not None:
            tasks.extend(load_suite(tasks_dir))
        for path in task_files:
            tasks.append(load_task(path))
    except (TaskLoadError, OSError) as e:
        _fail_usage(f"cannot load tasks: {e}")
    if not tasks:
        _fail_usage(f"no task files found under {tasks_dir}")
    return tasks


def _scripted_corpus(config: PipelineConfig) -> ScriptedCorpus:
    if config.corpus_dir is None:
        _fail_usage("the scripted backend needs a corpus: pass --corpus DIR")
    try:
        return ScriptedCorpus(config.corpus_dir)
    except CorpusError as e:
        _fail_usage(str(e))
        raise AssertionError  # unreachable


def _gateway(config: PipelineConfig) -> ModelGateway:
    if config.backend == "remote":
        if not config.base_url:
            _fail_usage("the remote backend needs base_url (config or env)")
        models = {
            Capability.CHAT: config.chat_model,
            Capability.VISION_EXTRACT: config.vision_model,
            Capability.JUDGE: config.judge_model,
            Capability.EMBED: config.embed_model,
        }
        backend = RemoteBackend(RemoteConfig(
            base_url=config.base_url,
            api_key=config.api_key,
            models=models,
            embed_dim=config.embed_dim,
        ))
        return ModelGateway(backend, config.price_table())
    if config.fixtures_dir is not None:
        scripted = ScriptedBackend.load(config.fixtures_dir, embed_dim=config.embed_dim)
    else:
        scripted = ScriptedBackend(embed_dim=config.embed_dim)
    return ModelGateway(scripted, config.price_table())


def _orchestrator(
    config: PipelineConfig,
    gateway: ModelGateway,
    corpus: ScriptedCorpus | None,
    env_dir: Path,
) -> Orchestrator:
    if config.backend == "remote":
        if not config.webdriver_url:
            _fail_usage("the remote backend needs webdriver_url (config or env)")
        frontend = config.search_frontend
        session_factory = lambda: WebDriverSession(
            config.webdriver_url, env_dir / "downloads",
            **({"search_frontend": frontend} if frontend else {}),
        )
        fetcher = HttpFetcher(config.download_timeout)
        search: SearchBackend = (
            HttpSearchBackend(config.search_tool_url, config.api_key)
            if config.search_tool_url else _EmptySearchBackend()
        )
        clock = lambda: int(time.time())
    else:
        assert corpus is not None
        session_factory = lambda: ScriptedSession(corpus, env_dir / "downloads")
        fetcher = ScriptedFetcher(corpus)
        search = ScriptedSearchBackend(corpus)
        # deterministic clock so repeat runs write identical bundles
        ticks = itertools.count()
        clock = lambda: next(ticks)
    return Orchestrator(
        gateway,
        session_factory,
        fetcher,
        search,
        clock,
        env_dir / "store",
        max_rounds=config.max_rounds,
        max_steps=config.max_steps,
        max_noops=config.max_noops,
        download_timeout=config.download_timeout,
    )


def _make_runner(config: PipelineConfig, corpus: ScriptedCorpus | None, bundles_dir: Path):
    """Per-task pipeline execution that persists a bundle as it goes."""

    def run_one(task: TaskInstance) -> RunOutcome:
        env_dir = config.env_root / task.id
        gateway = _gateway(config)  # fresh ledger per task for cost attribution
        orchestrator = _orchestrator(config, gateway, corpus, env_dir)
        bundle, retrieval = orchestrator.run(task.query, task.blacklist)
        outcome = RunOutcome(
            bundle,
            gateway.ledger.total_cost / 100,
            retrieval.collector,
            retrieval.rounds,
        )
        save_bundle(
            bundle, task.id, bundles_dir,
            cost=outcome.cost_cents,
            transcript=transcript_dicts(retrieval.transcript),
            collector=outcome.collector,
            rounds=outcome.rounds,
        )
        return outcome

    return run_one


@click.group()
def main() -> None:
    """Collect web data into one structured table and answer queries over it."""


@main.command("run")
@_common_options
@_task_options
def cmd_run(config_path, task_files, tasks_dir, **overrides) -> None:
    """Run tasks through the pipeline and save result bundles."""
    config = _build_config(config_path, **overrides)
    tasks = _load_tasks(task_files, tasks_dir)
    corpus = _scripted_corpus(config) if config.backend == "scripted" else None
    bundles_dir = config.out_dir / "bundles"
    runner = _make_runner(config, corpus, bundles_dir)
    failures = 0
    for task in tasks:
        try:
            outcome = runner(task)
        except Exception as e:  # surface the crash, keep the batch going
            failures += 1
            click.echo(f"{task.id}: run failed: {type(e).__name__}: {e}", err=True)
            continue
        click.echo(
            f"{task.id}: {_answer_text(outcome.bundle)}"
            f" (collector={outcome.collector}, rounds={outcome.rounds},"
            f" cost={outcome.cost_cents:.4f}c)"
        )
    click.echo(f"bundles written to {bundles_dir}")
    if failures > config.max_failures:
        sys.exit(1)


@main.command("bench")
@_common_options
@_task_options
def cmd_bench(config_path, task_files, tasks_dir, **overrides) -> None:
    """Run tasks, score every result, and write report files."""
    config = _build_config(config_path, **overrides)
    tasks = _load_tasks(task_files, tasks_dir)
    corpus = _scripted_corpus(config) if config.backend == "scripted" else None
    bundles_dir = config.out_dir / "bundles"
    runner = _make_runner(config, corpus, bundles_dir)
    report = run_suite(
        tasks, runner, _gateway(config),
        jobs=config.jobs, head_rows=config.head_rows,
    )
    paths = write_report(report, config.out_dir)
    click.echo(render_text(report))
    click.echo("report files: " + ", ".join(str(p) for p in paths))
    failures = sum(1 for r in report.records if not r.accuracy)
    if failures > config.max_failures:
        sys.exit(1)


@main.command("score")
@_common_options
@_task_options
@click.option("--bundles", "bundles_dir", type=Path, default=None,
              help="Directory of saved bundles (defaults to OUT/bundles).")
def cmd_score(config_path, task_files, tasks_dir, bundles_dir, **overrides) -> None:
    """Rescore previously saved bundles and write report files."""
    config = _build_config(config_path, **overrides)
    tasks = _load_tasks(task_files, tasks_dir)
    bundles = bundles_dir if bundles_dir is not None else config.out_dir / "bundles"
    gateway = _gateway(config)

    def rescore(task: TaskInstance) -> RunOutcome:
        bundle_dir = bundles / task.id
        bundle = load_bundle(bundle_dir, task)
        meta = json.loads((bundle_dir / "result.json").read_text("utf-8"))
        return RunOutcome(
            bundle,
            float(meta.get("cost", 0.0)),
            str(meta.get("collector", "none")) or "none",
            int(meta.get("rounds", 0)),
        )

    report = run_suite(tasks, rescore, gateway, jobs=config.jobs,
                       head_rows=config.head_rows)
    paths = write_report(report, config.out_dir)
    click.echo(render_text(report))
    click.echo("report files: " + ", ".join(str(p) for p in paths))
    failures = sum(1 for r in report.records if r.error)
    if failures > config.max_failures:
        sys.exit(1)


@main.command("mini-suite")
@click.option("--out", "out_dir", type=Path, required=True,
              help="Directory to materialize the suite into.")
def cmd_mini_suite(out_dir: Path) -> None:
    """Write the bundled demonstration corpus, tasks, and gateway fixtures."""
    try:
        suite = build_mini_suite(out_dir)
    except RuntimeError as e:
        click.echo(f"mini-suite recording failed: {e}", err=True)
        sys.exit(1)
    click.echo(f"corpus:   {suite.corpus_dir}")
    click.echo(f"tasks:    {suite.tasks_dir}")
    click.echo(f"fixtures: {suite.fixtures_dir}")
    click.echo(
        "run it with: tablequest bench"
        f" --tasks {suite.tasks_dir} --corpus {suite.corpus_dir}"
        f" --fixtures {suite.fixtures_dir} --out {suite.root / 'results'}"
    )


@main.command("corpus-validate")
@click.option("--corpus", "corpus_dir", type=Path, required=True)
def cmd_corpus_validate(corpus_dir: Path) -> None:
    """Check a scripted corpus for missing or unreadable entries."""
    try:
        corpus = ScriptedCorpus(corpus_dir)
    except CorpusError as e:
        _fail_usage(str(e))
        raise AssertionError  # unreachable
    problems = corpus.validate()
    for problem in problems:
        click.echo(problem, err=True)
    if problems:
        sys.exit(1)
    click.echo(
        f"corpus ok: {len(corpus.manifest['pages'])} pages,"
        f" {len(corpus.manifest['files'])} files,"
        f" {len(corpus.manifest['search'])} search terms"
    )


if __name__ == "__main__":
    main()
