"""Durable storage for correction requests.

Layout is a directory with two JSONL files: ``snapshot.jsonl`` (the
compacted state) and ``journal.jsonl`` (appends since the last
compaction). Both start with a schema header line so a future format
change can refuse or migrate old data instead of misreading it. Appends
are fsynced; snapshots are written to a temp file and atomically swapped
in, so a crash never leaves a half-written snapshot behind.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
from pathlib import Path

from .curation import CorrectionRequest

logger = logging.getLogger(__name__)

SCHEMA_NAME = "affilmagnet-store"
SCHEMA_VERSION = 1
DEFAULT_COMPACT_EVERY = 1000


class StoreError(Exception):
    pass


def _header_line(**extra) -> str:
    return json.dumps({"schema": SCHEMA_NAME, "version": SCHEMA_VERSION, **extra})


def _check_header(line: str, path: Path) -> None:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise StoreError(f"{path}: unreadable header line: {exc}") from exc
    if not isinstance(header, dict) or header.get("schema") != SCHEMA_NAME:
        raise StoreError(f"{path}: not a {SCHEMA_NAME} file")
    if header.get("version") != SCHEMA_VERSION:
        raise StoreError(
            f"{path}: unsupported store version {header.get('version')!r}"
            f" (this build reads version {SCHEMA_VERSION})"
        )


class CurationStore:
    """Single-writer request store. All mutations go through one lock."""

    def __init__(self, root: str | Path, *, compact_every: int = DEFAULT_COMPACT_EVERY) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.snapshot_path = self.root / "snapshot.jsonl"
        self.journal_path = self.root / "journal.jsonl"
        self.compact_every = compact_every
        self._lock = threading.RLock()
        self._requests: dict[str, CorrectionRequest] = {}
        self._journal_entries = 0
        self._load()
        self._journal_file = open(self.journal_path, "a", encoding="utf-8")

    def _load(self) -> None:
        if self.snapshot_path.exists():
            lines = self.snapshot_path.read_text(encoding="utf-8").splitlines()
            if lines:
                _check_header(lines[0], self.snapshot_path)
                for line in lines[1:]:
                    if not line.strip():
                        continue
                    request = CorrectionRequest.from_dict(json.loads(line))
                    self._requests[request.request_id] = request
        if self.journal_path.exists() and self.journal_path.stat().st_size > 0:
            lines = self.journal_path.read_text(encoding="utf-8").splitlines()
            _check_header(lines[0], self.journal_path)
            body = lines[1:]
            for index, line in enumerate(body):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError as exc:
                    if index == len(body) - 1:
                        # a torn tail from a crashed append is recoverable
                        logger.warning("dropping torn journal tail in %s", self.journal_path)
                        break
                    raise StoreError(f"{self.journal_path}: corrupt entry {index}: {exc}") from exc
                if entry.get("op") == "put":
                    request = CorrectionRequest.from_dict(entry["request"])
                    self._requests[request.request_id] = request
                    self._journal_entries += 1
        else:
            self.journal_path.write_text(_header_line() + "\n", encoding="utf-8")

    def put(self, request: CorrectionRequest) -> None:
        with self._lock:
            self._requests[request.request_id] = request
            line = json.dumps({"op": "put", "request": request.to_dict()}, ensure_ascii=False)
            self._journal_file.write(line + "\n")
            self._journal_file.flush()
            os.fsync(self._journal_file.fileno())
            self._journal_entries += 1
            if self._journal_entries >= self.compact_every:
                self.compact()

    def get(self, request_id: str) -> CorrectionRequest | None:
        with self._lock:
            return self._requests.get(request_id)

    def all_requests(self) -> list[CorrectionRequest]:
        with self._lock:
            return [self._requests[rid] for rid in sorted(self._requests)]

    def count(self) -> int:
        with self._lock:
            return len(self._requests)

    def compact(self) -> None:
        """Fold the journal into a fresh snapshot and truncate it."""
        with self._lock:
            fd, tmp_name = tempfile.mkstemp(dir=self.root, prefix="snapshot-", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as tmp:
                    tmp.write(_header_line(count=len(self._requests)) + "\n")
                    for request_id in sorted(self._requests):
                        tmp.write(
                            json.dumps(self._requests[request_id].to_dict(), ensure_ascii=False)
                            + "\n"
                        )
                    tmp.flush()
                    os.fsync(tmp.fileno())
                os.replace(tmp_name, self.snapshot_path)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
            self._journal_file.close()
            self.journal_path.write_text(_header_line() + "\n", encoding="utf-8")
            self._journal_file = open(self.journal_path, "a", encoding="utf-8")
            self._journal_entries = 0

    def close(self) -> None:
        with self._lock:
            self.compact()
            self._journal_file.close()

    def __enter__(self) -> "CurationStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


__all__ = ["CurationStore", "SCHEMA_NAME", "SCHEMA_VERSION", "StoreError"]
