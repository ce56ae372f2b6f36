"""Publishing correction requests to a tracker and to delimited files.

Two channels mirror how corrections actually travel: an issue tracker
(one issue per request, fixed five-line body so bots can parse it back)
and a CSV dump of the whole request table. Both formats round-trip:
``parse_issue_body`` and ``parse_csv`` recover what the writers emitted,
including raw strings containing newlines, which are escaped in issue
bodies to keep the line frame intact.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import requests

from .curation import (
    ALL_STATUSES,
    STATUS_CLOSED,
    STATUS_EXPORTED,
    STATUS_OPEN,
    STATUS_PENDING,
    CorrectionRequest,
    apply_transition,
    format_timestamp,
    group_id_for,
    parse_timestamp,
    request_id_for,
)

logger = logging.getLogger(__name__)

ISSUE_TITLE_PREFIX = "Correction for raw affiliation: "
ISSUE_TITLE_RAW_LIMIT = 80
ROR_URL_PREFIX = "https://ror.org/"

CSV_COLUMNS = [
    "raw_affiliation_name",
    "new_rors",
    "previous_rors",
    "works_examples",
    "contact_domain",
    "status",
    "date_opened",
    "date_closed",
    "issue_number",
]

_BODY_KEYS = ("raw_affiliation_name", "new_rors", "previous_rors", "works_examples", "contact")


class ExportError(Exception):
    pass


class WrongStatusError(ExportError):
    pass


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\r", "\\r").replace("\n", "\\n")


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "r":
                out.append("\r")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def render_issue(request: CorrectionRequest) -> tuple[str, str]:
    """The (title, body) pair for one request's tracker issue.

    Only requests that have not reached the tracker yet may be rendered.
    The body is exactly five "key: value" lines; raw strings are escaped
    so embedded newlines cannot break the frame.
    """
    if request.status not in (STATUS_PENDING, STATUS_EXPORTED):
        raise WrongStatusError(
            f"request {request.request_id} has status {request.status!r}, "
            "only pending or exported requests can be rendered"
        )
    title = ISSUE_TITLE_PREFIX + request.raw_string[:ISSUE_TITLE_RAW_LIMIT]
    lines = [
        f"raw_affiliation_name: {_escape(request.raw_string)}",
        "new_rors: " + ";".join(ROR_URL_PREFIX + r for r in request.new_ror_ids),
        "previous_rors: " + ";".join(ROR_URL_PREFIX + r for r in request.previous_ror_ids),
        "works_examples: " + ";".join(request.works_examples),
        f"contact: {request.contact_domain}",
    ]
    return title, "\n".join(lines)


def parse_issue_body(body: str) -> dict:
    """Recover the fields a well-formed issue body encodes."""
    lines = body.split("\n")
    if len(lines) != len(_BODY_KEYS):
        raise ExportError(f"issue body has {len(lines)} lines, expected {len(_BODY_KEYS)}")
    values = {}
    for expected_key, line in zip(_BODY_KEYS, lines):
        key, sep, value = line.partition(": ")
        if key != expected_key or not sep:
            raise ExportError(f"issue body line {expected_key!r} is malformed: {line!r}")
        values[expected_key] = value

    def split_rors(text: str) -> tuple[str, ...]:
        items = []
        for piece in text.split(";"):
            if not piece:
                continue
            if piece.startswith(ROR_URL_PREFIX):
                piece = piece[len(ROR_URL_PREFIX) :]
            items.append(piece)
        return tuple(items)

    return {
        "raw_string": _unescape(values["raw_affiliation_name"]),
        "new_ror_ids": split_rors(values["new_rors"]),
        "previous_ror_ids": split_rors(values["previous_rors"]),
        "works_examples": tuple(p for p in values["works_examples"].split(";") if p),
        "contact_domain": values["contact"],
    }


def export_csv(store) -> str:
    """The full request table as CSV text, rows ordered by request id."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(CSV_COLUMNS)
    for request in store.all_requests():
        writer.writerow(
            [
                request.raw_string,
                "|".join(request.new_ror_ids),
                "|".join(request.previous_ror_ids),
                "|".join(request.works_examples),
                request.contact_domain,
                request.status,
                format_timestamp(request.date_opened) or "",
                format_timestamp(request.date_closed) or "",
                "" if request.issue_number is None else str(request.issue_number),
            ]
        )
    return buffer.getvalue()


def parse_csv(text: str) -> list[CorrectionRequest]:
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = list(reader)
    if not rows or rows[0] != CSV_COLUMNS:
        raise ExportError(f"unexpected CSV header: {rows[0] if rows else 'empty document'}")

    def split_list(cell: str) -> tuple[str, ...]:
        return tuple(p for p in cell.split("|") if p)

    requests_out = []
    for number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise ExportError(f"row {number}: has {len(row)} cells, expected {len(CSV_COLUMNS)}")
        raw, new_rors, previous, examples, domain, status, opened, closed, issue = row
        if status not in ALL_STATUSES:
            raise ExportError(f"row {number}: unknown status {status!r}")
        try:
            requests_out.append(
                CorrectionRequest(
                    request_id=request_id_for(raw, domain),
                    group_id=group_id_for(raw),
                    raw_string=raw,
                    previous_ror_ids=split_list(previous),
                    new_ror_ids=split_list(new_rors),
                    works_examples=split_list(examples),
                    contact_domain=domain,
                    status=status,
                    date_opened=parse_timestamp(opened or None),
                    date_closed=parse_timestamp(closed or None),
                    issue_number=int(issue) if issue else None,
                )
            )
        except ValueError as exc:
            raise ExportError(f"row {number}: {exc}") from exc
    return requests_out


class TrackerClient:
    """Minimal issue-tracker API client with retry and pacing courtesy."""

    def __init__(
        self,
        base_url: str,
        *,
        token: str | None = None,
        session: requests.Session | None = None,
        max_attempts: int = 5,
        backoff_base: float = 1.0,
        timeout: float = 30.0,
        sleep=time.sleep,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.token = token
        if session is None:
            session = requests.Session()
            session.trust_env = False
        self.session = session
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._sleep = sleep

    def _headers(self) -> dict:
        headers = {"Accept": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _request(self, method: str, path: str, json_body: dict | None = None) -> dict:
        url = f"{self.base_url}{path}"
        last_error = "no attempts made"
        for attempt in range(self.max_attempts):
            try:
                response = self.session.request(
                    method, url, json=json_body, headers=self._headers(), timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = f"network error: {exc}"
                if attempt + 1 < self.max_attempts:
                    self._sleep(self.backoff_base * (2**attempt))
                continue
            if response.status_code in (200, 201):
                try:
                    body = response.json()
                except ValueError as exc:
                    raise ExportError(f"tracker returned unparseable JSON: {exc}") from exc
                if not isinstance(body, dict):
                    raise ExportError("tracker returned a non-object JSON body")
                return body
            last_error = f"HTTP {response.status_code}"
            if response.status_code == 429:
                retry_after = response.headers.get("Retry-After")
                try:
                    delay = float(retry_after) if retry_after else None
                except ValueError:
                    delay = None
                if attempt + 1 < self.max_attempts:
                    self._sleep(delay if delay is not None else self.backoff_base * (2**attempt))
                continue
            if response.status_code >= 500:
                if attempt + 1 < self.max_attempts:
                    self._sleep(self.backoff_base * (2**attempt))
                continue
            raise ExportError(f"tracker request failed: {last_error}")
        raise ExportError(f"tracker request failed after {self.max_attempts} attempts: {last_error}")

    def create_issue(self, title: str, body: str) -> int:
        payload = self._request("POST", "/issues", {"title": title, "body": body})
        number = payload.get("number")
        if not isinstance(number, int):
            raise ExportError(f"tracker create response lacks an issue number: {payload!r}")
        return number

    def get_issue(self, number: int) -> dict:
        return self._request("GET", f"/issues/{number}")


@dataclass
class BatchReport:
    attempted: int = 0
    succeeded: int = 0
    failed: list[tuple[str, str]] = field(default_factory=list)
    remaining_backlog: int = 0

    def to_dict(self) -> dict:
        return {
            "attempted": self.attempted,
            "succeeded": self.succeeded,
            "failed": [list(pair) for pair in self.failed],
            "remaining_backlog": self.remaining_backlog,
        }


def export_issues(store, tracker: TrackerClient, *, now: datetime | None = None) -> BatchReport:
    """Open one tracker issue per pending request.

    A request only advances (pending -> exported -> open) once the
    tracker has returned an issue number, so anything that fails stays
    pending and the next batch retries it. Retried creations are safe
    because the tracker deduplicates identical titles.
    """
    report = BatchReport()
    for request in store.all_requests():
        if request.status != STATUS_PENDING:
            continue
        report.attempted += 1
        title, body = render_issue(request)
        try:
            number = tracker.create_issue(title, body)
        except ExportError as exc:
            report.failed.append((request.request_id, str(exc)))
            continue
        exported = apply_transition(request, STATUS_EXPORTED, when=now)
        store.put(exported)
        opened = apply_transition(exported, STATUS_OPEN, when=now, issue_number=number)
        store.put(opened)
        report.succeeded += 1
    report.remaining_backlog = sum(
        1 for r in store.all_requests() if r.status == STATUS_PENDING
    )
    return report


def sync_statuses(store, tracker: TrackerClient, *, now: datetime | None = None) -> int:
    """Pull tracker state for open requests; returns how many closed."""
    updates = 0
    for request in store.all_requests():
        if request.status != STATUS_OPEN or request.issue_number is None:
            continue
        issue = tracker.get_issue(request.issue_number)
        if issue.get("state") != "closed":
            continue
        closed_at = None
        if issue.get("closed_at"):
            try:
                closed_at = parse_timestamp(issue["closed_at"])
            except ValueError:
                closed_at = None
        moment = closed_at or now or datetime.now(timezone.utc)
        if request.date_opened is not None and moment < request.date_opened:
            # tracker clocks can lag ours; never violate closed >= opened
            moment = request.date_opened
        store.put(apply_transition(request, STATUS_CLOSED, when=moment))
        updates += 1
    return updates


@dataclass
class StatsSummary:
    total: int = 0
    pending_count: int = 0
    exported_count: int = 0
    open_count: int = 0
    closed_count: int = 0
    top_domains: list[tuple[str, int]] = field(default_factory=list)
    per_previous_ror: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "pending_count": self.pending_count,
            "exported_count": self.exported_count,
            "open_count": self.open_count,
            "closed_count": self.closed_count,
            "top_domains": [[domain, count] for domain, count in self.top_domains],
            "per_previous_ror": dict(sorted(self.per_previous_ror.items())),
        }


def compute_stats(store) -> StatsSummary:
    """Monitoring counts over the whole store."""
    stats = StatsSummary()
    domains: dict[str, int] = {}
    for request in store.all_requests():
        stats.total += 1
        if request.status == STATUS_PENDING:
            stats.pending_count += 1
        elif request.status == STATUS_EXPORTED:
            stats.exported_count += 1
        elif request.status == STATUS_OPEN:
            stats.open_count += 1
        elif request.status == STATUS_CLOSED:
            stats.closed_count += 1
        domains[request.contact_domain] = domains.get(request.contact_domain, 0) + 1
        for ror in request.previous_ror_ids:
            stats.per_previous_ror[ror] = stats.per_previous_ror.get(ror, 0) + 1
    stats.top_domains = sorted(domains.items(), key=lambda item: (-item[1], item[0]))
    return stats


__all__ = [
    "BatchReport",
    "CSV_COLUMNS",
    "ExportError",
    "ISSUE_TITLE_PREFIX",
    "ISSUE_TITLE_RAW_LIMIT",
    "ROR_URL_PREFIX",
    "StatsSummary",
    "TrackerClient",
    "WrongStatusError",
    "compute_stats",
    "export_csv",
    "export_issues",
    "parse_csv",
    "parse_issue_body",
    "render_issue",
    "sync_statuses",
]
