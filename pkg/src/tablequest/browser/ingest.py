"""Materialize collection targets as artifacts in the task's data store.

Inline content is written to cached_data.csv (numbered on collision),
vetted hyperlinks are fetched (and archives expanded), and downloaded files
are moved in. Every successful hyperlink fetch is recorded in the source
log; blacklisted destinations are never fetched and never logged. Ingesting
the same downloaded file twice is a no-op.
"""

from __future__ import annotations

import logging
import shutil
import zipfile
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

from ..core.media import sniff_media_kind
from ..core.types import (
    Blacklist,
    Clock,
    MediaKind,
    Mechanism,
    RawArtifact,
    RawDataStore,
    SourceAgent,
    SourceLog,
    blacklist_matches,
)
from .actions import CollectionTarget, DownloadedFile, Hyperlink, InlineContent
from .fetch import FetchError, Fetcher

log = logging.getLogger(__name__)

ZIP_MAX_ENTRIES = 200
ZIP_MAX_BYTES = 200 * 1024 * 1024

INLINE_NAME = "cached_data.csv"


@dataclass
class IngestReport:
    artifacts: list[RawArtifact] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _safe_name(name: str) -> str:
    base = PurePosixPath(name.replace("\\", "/")).name
    return base or "fetched.bin"


def _add_file(
    store: RawDataStore,
    relative: str,
    data: bytes,
    origin: str,
    mechanism: Mechanism,
    report: IngestReport,
) -> RawArtifact:
    path = store.env_root / relative
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    artifact = RawArtifact(
        relative, origin, mechanism, sniff_media_kind(relative, data), len(data)
    )
    store.add(artifact)
    report.artifacts.append(artifact)
    return artifact


def _is_zip_archive(name: str, data: bytes) -> bool:
    if not data.startswith(b"PK\x03\x04"):
        return False
    # workbooks are zip containers too but are consumed whole
    return sniff_media_kind(name, data) is not MediaKind.SEMI_STRUCTURED


def _expand_zip(
    store: RawDataStore,
    archive_rel: str,
    data: bytes,
    origin: str,
    mechanism: Mechanism,
    report: IngestReport,
) -> None:
    import io

    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as e:
        report.notes.append(f"{archive_rel}: bad zip: {e}")
        return
    target_dir = archive_rel.rsplit(".", 1)[0] + "_contents"
    total = 0
    count = 0
    for info in archive.infolist():
        if info.is_dir():
            continue
        entry = PurePosixPath(info.filename)
        if entry.is_absolute() or ".." in entry.parts:
            report.notes.append(f"{archive_rel}: skipped unsafe entry {info.filename!r}")
            continue
        count += 1
        if count > ZIP_MAX_ENTRIES:
            report.notes.append(f"{archive_rel}: entry cap reached, rest skipped")
            break
        payload = archive.read(info)
        total += len(payload)
        if total > ZIP_MAX_BYTES:
            report.notes.append(f"{archive_rel}: size cap reached, rest skipped")
            break
        relative = store.free_name(f"{target_dir}/{'_'.join(entry.parts)}")
        _add_file(store, relative, payload, origin, mechanism, report)


def ingest_targets(
    targets: list[CollectionTarget],
    store: RawDataStore,
    fetcher: Fetcher,
    blacklist: Blacklist,
    sources: SourceLog,
    round_index: int,
    clock: Clock,
) -> IngestReport:
    report = IngestReport()
    store.env_root.mkdir(parents=True, exist_ok=True)
    for target in targets:
        if isinstance(target, InlineContent):
            relative = store.free_name(INLINE_NAME)
            _add_file(
                store,
                relative,
                target.csv_text.encode("utf-8"),
                target.origin_url,
                Mechanism.INLINE_CONTENT,
                report,
            )
        elif isinstance(target, Hyperlink):
            if blacklist_matches(target.url, blacklist):
                # belt and braces: the agent cannot emit such a target
                report.notes.append(f"refused blacklisted fetch: {target.url}")
                continue
            try:
                data, name = fetcher(target.url)
            except FetchError as e:
                report.notes.append(f"fetch failed: {e}")
                continue
            sources.add(target.url, SourceAgent.BROWSER, round_index, clock())
            relative = store.free_name(_safe_name(name))
            _add_file(store, relative, data, target.url, Mechanism.HYPERLINK_FETCH, report)
            if _is_zip_archive(relative, data):
                _expand_zip(store, relative, data, target.url, Mechanism.HYPERLINK_FETCH, report)
        elif isinstance(target, DownloadedFile):
            source_path = Path(target.path)
            if not source_path.is_file():
                report.notes.append(f"downloaded file vanished: {target.path}")
                continue
            if blacklist_matches(target.origin_url, blacklist):
                report.notes.append(f"refused blacklisted download: {target.origin_url}")
                continue
            try:
                already_inside = source_path.resolve().is_relative_to(
                    store.env_root.resolve()
                )
            except OSError:
                already_inside = False
            if already_inside:
                relative = str(source_path.resolve().relative_to(store.env_root.resolve()))
                if any(a.local_path == relative for a in store):
                    continue  # re-ingesting the same download is a no-op
                data = source_path.read_bytes()
                artifact = RawArtifact(
                    relative,
                    target.origin_url,
                    Mechanism.BROWSER_DOWNLOAD,
                    sniff_media_kind(relative, data),
                    len(data),
                )
                store.add(artifact)
                report.artifacts.append(artifact)
            else:
                data = source_path.read_bytes()
                relative = store.free_name(_safe_name(source_path.name))
                destination = store.env_root / relative
                destination.parent.mkdir(parents=True, exist_ok=True)
                shutil.move(str(source_path), destination)
                artifact = RawArtifact(
                    relative,
                    target.origin_url,
                    Mechanism.BROWSER_DOWNLOAD,
                    sniff_media_kind(relative, data),
                    len(data),
                )
                store.add(artifact)
                report.artifacts.append(artifact)
            if _is_zip_archive(relative, data):
                _expand_zip(
                    store, relative, data, target.origin_url,
                    Mechanism.BROWSER_DOWNLOAD, report,
                )
            sources.add(target.origin_url, SourceAgent.BROWSER, round_index, clock())
        else:  # pragma: no cover
            raise TypeError(f"unknown target: {target!r}")
    return report
